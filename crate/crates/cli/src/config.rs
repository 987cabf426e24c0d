//! JSON run configuration. Keys carry their units; unknown keys are
//! rejected. Any section or key may be omitted and falls back to the
//! device defaults. A `null` coherence time means "infinite".

use std::path::Path;

use bellstab_core::model::tphi_from_t1_t2;
use bellstab_core::readout::{ReadoutModel, DEFAULT_KEPT_FLOOR};
use bellstab_core::{DriveParams, SolverSettings, SystemParams};
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl From<bellstab_core::Error> for ConfigError {
    fn from(e: bellstab_core::Error) -> Self {
        Self::Invalid(e.to_string())
    }
}

/// Absent stays `None`; an explicit `null` becomes `+∞`.
fn null_is_infinite<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    Ok(Some(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY)))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct SystemSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_A_MHz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_B_MHz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_MHz: Option<f64>,
    #[serde(default, deserialize_with = "null_is_infinite", skip_serializing_if = "Option::is_none")]
    pub T1_A_us: Option<f64>,
    #[serde(default, deserialize_with = "null_is_infinite", skip_serializing_if = "Option::is_none")]
    pub T1_B_us: Option<f64>,
    /// Ramsey time; converted to a pure-dephasing time with T1.
    #[serde(default, deserialize_with = "null_is_infinite", skip_serializing_if = "Option::is_none")]
    pub T2_A_us: Option<f64>,
    #[serde(default, deserialize_with = "null_is_infinite", skip_serializing_if = "Option::is_none")]
    pub T2_B_us: Option<f64>,
    #[serde(default, deserialize_with = "null_is_infinite", skip_serializing_if = "Option::is_none")]
    pub Tphi_A_us: Option<f64>,
    #[serde(default, deserialize_with = "null_is_infinite", skip_serializing_if = "Option::is_none")]
    pub Tphi_B_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity_levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_e_A: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_e_B: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct DriveSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    /// Defaults to κ/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0_MHz: Option<f64>,
    /// Defaults to κ/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omegan_MHz: Option<f64>,
    /// Defaults to round(nbar).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_repump: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_n_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_0_rad: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_step_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step_us: Option<f64>,
}

/// Gaussian readout geometry in units of σ. Unset keys take the values of
/// the built-in model for that readout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_gg_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_not_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_gg_ratio: Option<f64>,
    /// `null` is `+∞`: every shot is assigned not-`gg`.
    #[serde(default, deserialize_with = "null_is_infinite", skip_serializing_if = "Option::is_none")]
    pub threshold_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_gg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_not: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutModels {
    /// Readout used after the tomography pulses.
    #[serde(default)]
    pub tomography: ReadoutSection,
    /// Parity monitor used for post-selection.
    #[serde(default)]
    pub parity_monitor: ReadoutSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_per_setting: Option<u64>,
    /// Drives-off wait between stabilization and tomography.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_decay_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment_errors: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostselectSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kept_floor: Option<f64>,
}

/// One sweep axis, either `min`/`max`/`points` or an explicit `values` list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Axis {
    pub fn range(min: f64, max: f64, points: usize) -> Self {
        Self { min: Some(min), max: Some(max), points: Some(points), values: None }
    }

    pub fn list(values: Vec<f64>) -> Self {
        Self { values: Some(values), ..Self::default() }
    }

    pub fn values(&self, name: &str) -> Result<Vec<f64>, ConfigError> {
        let bad = |why: &str| ConfigError::Invalid(format!("sweep axis `{name}`: {why}"));
        let v = match (&self.values, self.min, self.max, self.points) {
            (Some(v), None, None, None) => {
                if v.is_empty() {
                    return Err(bad("`values` must not be empty"));
                }
                v.clone()
            }
            (None, Some(lo), Some(hi), Some(n)) => {
                if n < 2 {
                    return Err(bad("need at least 2 points (use `values` for a single point)"));
                }
                if !(hi > lo) {
                    return Err(bad("`max` must exceed `min`"));
                }
                (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
            }
            _ => return Err(bad("give either `values` or all of `min`, `max`, `points`")),
        };
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(bad("values must be finite and non-negative"));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(bad("values must be strictly increasing"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct SweepGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omegan_MHz: Option<Axis>,
    /// Optional; Ω⁰ stays at the drive setting when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0_MHz: Option<Axis>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    /// Stabilization times at which F is sampled; default is every
    /// snapshot interval up to `t_final_us`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts_us: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub drives: DriveSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub readout: ReadoutModels,
    #[serde(default)]
    pub tomography: TomographySection,
    #[serde(default)]
    pub postselect: PostselectSection,
    #[serde(default)]
    pub sweep: SweepGrid,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Everything a command needs, with defaults applied and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub sys: SystemParams,
    pub drives: DriveParams,
    pub t_final_us: f64,
    pub settings: SolverSettings,
    pub tomography_readout: ReadoutModel,
    pub parity_monitor: ReadoutModel,
    pub shots_per_setting: u64,
    pub free_decay_us: f64,
    pub assignment_errors: bool,
    pub kept_floor: f64,
    pub sweep_nbar: Vec<f64>,
    pub sweep_omegan: Vec<f64>,
    pub sweep_omega0: Option<Vec<f64>>,
    pub ts_us: Vec<f64>,
    pub seed: u64,
}

pub fn parse(text: &str, path: &str) -> Result<RunConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: shown.clone(), source })?;
    parse(&text, &shown)
}

fn readout(section: &ReadoutSection, base: ReadoutModel) -> Result<ReadoutModel, ConfigError> {
    let m = ReadoutModel {
        mu_gg: section.mu_gg_sigma.unwrap_or(base.mu_gg),
        mu_not: section.mu_not_sigma.unwrap_or(base.mu_not),
        sigma_gg_ratio: section.sigma_gg_ratio.unwrap_or(base.sigma_gg_ratio),
        threshold: section.threshold_sigma.unwrap_or(base.threshold),
        eps_gg: section.eps_gg.unwrap_or(base.eps_gg),
        eps_not: section.eps_not.unwrap_or(base.eps_not),
    };
    m.validate()?;
    Ok(m)
}

fn dephasing(t1: f64, t2: Option<f64>, tphi: Option<f64>, default: f64, name: &str) -> Result<f64, ConfigError> {
    match (t2, tphi) {
        (Some(_), Some(_)) => Err(ConfigError::Invalid(format!("give at most one of T2_{name}_us and Tphi_{name}_us"))),
        (Some(t2), None) => Ok(tphi_from_t1_t2(t1, t2)?),
        (None, Some(tphi)) => Ok(tphi),
        (None, None) => Ok(default),
    }
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let dev = SystemParams::device();
        let s = &self.system;
        let t1_a = s.T1_A_us.unwrap_or(dev.t1_a_us);
        let t1_b = s.T1_B_us.unwrap_or(dev.t1_b_us);
        let sys = SystemParams {
            chi_a_mhz: s.chi_A_MHz.unwrap_or(dev.chi_a_mhz),
            chi_b_mhz: s.chi_B_MHz.unwrap_or(dev.chi_b_mhz),
            kappa_mhz: s.kappa_MHz.unwrap_or(dev.kappa_mhz),
            t1_a_us: t1_a,
            t1_b_us: t1_b,
            tphi_a_us: dephasing(t1_a, s.T2_A_us, s.Tphi_A_us, dev.tphi_a_us, "A")?,
            tphi_b_us: dephasing(t1_b, s.T2_B_us, s.Tphi_B_us, dev.tphi_b_us, "B")?,
            cavity_levels: s.cavity_levels.unwrap_or(dev.cavity_levels),
            p_e_a: s.p_e_A.unwrap_or(dev.p_e_a),
            p_e_b: s.p_e_B.unwrap_or(dev.p_e_b),
            lab: dev.lab,
        };
        sys.validate()?;

        let opt = DriveParams::optimum(&sys);
        let d = &self.drives;
        let drives = DriveParams {
            nbar: d.nbar.unwrap_or(opt.nbar),
            omega0_mhz: d.omega0_MHz.unwrap_or(opt.omega0_mhz),
            omegan_mhz: d.omegan_MHz.unwrap_or(opt.omegan_mhz),
            n_repump: None,
            phase_n: d.phase_n_rad.unwrap_or(opt.phase_n),
            phase_0: d.phase_0_rad.unwrap_or(opt.phase_0),
        };
        drives.validate()?;
        // pinned here so sweeps over n̄ keep the re-pump tones where they are
        let drives = DriveParams { n_repump: Some(d.n_repump.unwrap_or(drives.repump_index())), ..drives };

        let defaults = SolverSettings::default();
        let v = &self.solver;
        let settings = SolverSettings {
            tol: v.tol.unwrap_or(defaults.tol),
            initial_step_us: v.initial_step_us.unwrap_or(defaults.initial_step_us),
            max_step_us: v.max_step_us.unwrap_or(defaults.max_step_us),
            snapshot_every_us: v.snapshot_every_us.unwrap_or(defaults.snapshot_every_us),
        };
        settings.validate()?;
        let t_final_us = v.t_final_us.unwrap_or(10.0);
        if !(t_final_us > 0.0 && t_final_us.is_finite()) {
            return Err(ConfigError::Invalid("solver.t_final_us must be positive and finite".into()));
        }

        let tomography_readout = readout(&self.readout.tomography, ReadoutModel::tomography())?;
        let parity_monitor = readout(&self.readout.parity_monitor, ReadoutModel::parity_monitor())?;

        let shots_per_setting = self.tomography.shots_per_setting.unwrap_or(500_000);
        if shots_per_setting == 0 {
            return Err(ConfigError::Invalid("tomography.shots_per_setting must be at least 1".into()));
        }
        let free_decay_us = self.tomography.free_decay_us.unwrap_or(0.0);
        if !(free_decay_us >= 0.0 && free_decay_us.is_finite()) {
            return Err(ConfigError::Invalid("tomography.free_decay_us must be finite and non-negative".into()));
        }
        let kept_floor = self.postselect.kept_floor.unwrap_or(DEFAULT_KEPT_FLOOR);
        if !(kept_floor >= 0.0 && kept_floor < 1.0) {
            return Err(ConfigError::Invalid("postselect.kept_floor must lie in [0, 1)".into()));
        }

        let sweep_nbar = self.sweep.nbar.clone().unwrap_or(Axis::range(0.4, 6.0, 15)).values("nbar")?;
        let kappa = sys.kappa_mhz;
        let sweep_omegan =
            self.sweep.omegan_MHz.clone().unwrap_or(Axis::range(0.1 * kappa, 1.1 * kappa, 15)).values("omegan_MHz")?;
        let sweep_omega0 = self.sweep.omega0_MHz.as_ref().map(|a| a.values("omega0_MHz")).transpose()?;

        let ts_us = match &self.convergence.ts_us {
            Some(ts) => ts.clone(),
            None => {
                let n = (t_final_us / settings.snapshot_every_us).round() as usize;
                (0..=n).map(|k| (k as f64 * settings.snapshot_every_us).min(t_final_us)).collect()
            }
        };
        validate_ts(&ts_us)?;

        Ok(Resolved {
            sys,
            drives,
            t_final_us,
            settings,
            tomography_readout,
            parity_monitor,
            shots_per_setting,
            free_decay_us,
            assignment_errors: self.tomography.assignment_errors.unwrap_or(true),
            kept_floor,
            sweep_nbar,
            sweep_omegan,
            sweep_omega0,
            ts_us,
            seed: self.seed.unwrap_or(0),
        })
    }
}

pub fn validate_ts(ts: &[f64]) -> Result<(), ConfigError> {
    if ts.len() < 2 {
        return Err(ConfigError::Invalid("convergence needs at least 2 stabilization times".into()));
    }
    if ts.iter().any(|t| !t.is_finite() || *t < 0.0) || ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ConfigError::Invalid("stabilization times must be non-negative and strictly increasing".into()));
    }
    Ok(())
}

fn section(m: &ReadoutModel) -> ReadoutSection {
    ReadoutSection {
        mu_gg_sigma: Some(m.mu_gg),
        mu_not_sigma: Some(m.mu_not),
        sigma_gg_ratio: Some(m.sigma_gg_ratio),
        threshold_sigma: Some(m.threshold),
        eps_gg: Some(m.eps_gg),
        eps_not: Some(m.eps_not),
    }
}

impl Resolved {
    /// Fully explicit configuration that resolves back to `self`.
    /// Dephasing is written as `Tphi`; infinities serialize as `null`.
    pub fn to_config(&self) -> RunConfig {
        let s = &self.sys;
        RunConfig {
            system: SystemSection {
                chi_A_MHz: Some(s.chi_a_mhz),
                chi_B_MHz: Some(s.chi_b_mhz),
                kappa_MHz: Some(s.kappa_mhz),
                T1_A_us: Some(s.t1_a_us),
                T1_B_us: Some(s.t1_b_us),
                T2_A_us: None,
                T2_B_us: None,
                Tphi_A_us: Some(s.tphi_a_us),
                Tphi_B_us: Some(s.tphi_b_us),
                cavity_levels: Some(s.cavity_levels),
                p_e_A: Some(s.p_e_a),
                p_e_B: Some(s.p_e_b),
            },
            drives: DriveSection {
                nbar: Some(self.drives.nbar),
                omega0_MHz: Some(self.drives.omega0_mhz),
                omegan_MHz: Some(self.drives.omegan_mhz),
                n_repump: Some(self.drives.repump_index()),
                phase_n_rad: Some(self.drives.phase_n),
                phase_0_rad: Some(self.drives.phase_0),
            },
            solver: SolverSection {
                t_final_us: Some(self.t_final_us),
                tol: Some(self.settings.tol),
                snapshot_every_us: Some(self.settings.snapshot_every_us),
                initial_step_us: Some(self.settings.initial_step_us),
                max_step_us: Some(self.settings.max_step_us),
            },
            readout: ReadoutModels { tomography: section(&self.tomography_readout), parity_monitor: section(&self.parity_monitor) },
            tomography: TomographySection {
                shots_per_setting: Some(self.shots_per_setting),
                free_decay_us: Some(self.free_decay_us),
                assignment_errors: Some(self.assignment_errors),
            },
            postselect: PostselectSection { kept_floor: Some(self.kept_floor) },
            sweep: SweepGrid {
                nbar: Some(Axis::list(self.sweep_nbar.clone())),
                omegan_MHz: Some(Axis::list(self.sweep_omegan.clone())),
                omega0_MHz: self.sweep_omega0.clone().map(Axis::list),
            },
            convergence: ConvergenceSection { ts_us: Some(self.ts_us.clone()) },
            seed: Some(self.seed),
        }
    }

    pub fn config_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_config()).expect("config serializes")
    }
}

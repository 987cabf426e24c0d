//! The experiments behind each subcommand. Each returns a serializable
//! record; writing files is left to the caller.

use std::collections::BTreeMap;

use bellstab_core::analysis::{self, BasisWeights, BudgetCase, ErrorBudget, PauliVector};
use bellstab_core::hilbert::partial_trace_cavity;
use bellstab_core::model::zeno_parameter;
use bellstab_core::readout::{condition_on_m1_with_floor, ReadoutModel};
use bellstab_core::solver::{self, SteadyState, StepStats};
use bellstab_core::tomography::{self, RotationSet, Shots};
use bellstab_core::{DensityMatrix, DriveParams, Model, SystemParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{validate_ts, ConfigError, Resolved};
use crate::output::Cell;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failed: {0}")]
    Solver(#[from] bellstab_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weights {
    pub gg: f64,
    pub ee: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
}

impl From<BasisWeights> for Weights {
    fn from(w: BasisWeights) -> Self {
        Self { gg: w.gg, ee: w.ee, phi_plus: w.phi_plus, phi_minus: w.phi_minus }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Steps {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

impl From<StepStats> for Steps {
    fn from(s: StepStats) -> Self {
        Self { accepted: s.accepted, rejected: s.rejected, rhs_evaluations: s.rhs_evaluations }
    }
}

fn pauli_map(p: &PauliVector) -> BTreeMap<String, f64> {
    (0..16)
        .map(|k| {
            let [a, b] = PauliVector::label(k);
            (format!("{a}{b}"), p.0[k])
        })
        .collect()
}

/// Two-qubit diagnostics of a qubit-cavity state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummary {
    pub fidelity: f64,
    pub concurrence: f64,
    pub weights: Weights,
    pub pauli: BTreeMap<String, f64>,
}

pub fn summarize(rho: &DensityMatrix, model: &Model) -> Result<StateSummary, RunError> {
    let reduced = partial_trace_cavity(rho, &model.space)?;
    Ok(StateSummary {
        fidelity: analysis::fidelity(rho),
        concurrence: analysis::concurrence(&reduced)?,
        weights: analysis::basis_weights(&reduced)?.into(),
        pauli: pauli_map(&analysis::pauli_averages(&reduced)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyRecord {
    #[serde(flatten)]
    pub state: StateSummary,
    pub zeno_parameter: Option<f64>,
    pub stationarity_residual: f64,
    pub min_eigenvalue: f64,
    pub n_repump: u32,
    pub steps: Steps,
}

fn run_steady(sys: SystemParams, drives: DriveParams, res: &Resolved) -> Result<(Model, SteadyState), RunError> {
    let model = Model::new(sys, drives)?;
    let ss = solver::steady_state(&model, res.t_final_us, &res.settings)?;
    Ok((model, ss))
}

fn steady_record(model: &Model, ss: &SteadyState) -> Result<SteadyRecord, RunError> {
    Ok(SteadyRecord {
        state: summarize(&ss.rho, model)?,
        zeno_parameter: zeno_parameter(&model.drives, &model.sys).ok(),
        stationarity_residual: ss.stationarity_residual,
        min_eigenvalue: ss.rho.min_eigenvalue()?,
        n_repump: model.drives.repump_index(),
        steps: ss.stats.into(),
    })
}

pub fn steady(res: &Resolved) -> Result<SteadyRecord, RunError> {
    let (model, ss) = run_steady(res.sys, res.drives, res)?;
    steady_record(&model, &ss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub t_us: f64,
    pub fidelity: f64,
    pub zi: f64,
    pub iz: f64,
    pub zz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRecord {
    pub f_inf: f64,
    pub f_0: f64,
    pub tau_us: f64,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub points: Vec<ConvergencePoint>,
    /// `None` when the series cannot be fitted; see `fit_error`.
    pub fit: Option<FitRecord>,
    pub fit_error: Option<String>,
}

impl ConvergenceRecord {
    pub const COLUMNS: [&'static str; 5] = ["t_us", "fidelity", "ZI", "IZ", "ZZ"];

    pub fn rows(&self) -> Vec<Vec<Cell>> {
        self.points.iter().map(|p| vec![p.t_us.into(), p.fidelity.into(), p.zi.into(), p.iz.into(), p.zz.into()]).collect()
    }
}

/// One trajectory sampled at every requested stabilization time.
pub fn convergence(res: &Resolved) -> Result<ConvergenceRecord, RunError> {
    validate_ts(&res.ts_us)?;
    let model = Model::new(res.sys, res.drives)?;
    let traj = solver::evolve_to_times(&model.initial_state(), &res.ts_us, &model, &res.settings)?;
    let points = traj
        .snapshots
        .iter()
        .map(|s| {
            let p = analysis::pauli_averages(&partial_trace_cavity(s, &model.space)?)?;
            Ok(ConvergencePoint { t_us: s.time(), fidelity: analysis::fidelity(s), zi: p.get('Z', 'I'), iz: p.get('I', 'Z'), zz: p.get('Z', 'Z') })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let series: Vec<(f64, f64)> = points.iter().map(|p| (p.t_us, p.fidelity)).collect();
    let (fit, fit_error) = match analysis::fit_exponential(&series) {
        Ok(f) => (Some(FitRecord { f_inf: f.f_inf, f_0: f.f_0, tau_us: f.tau, rms_residual: f.rms_residual }), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ConvergenceRecord { points, fit, fit_error })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub nbar: f64,
    pub omegan_mhz: f64,
    pub omega0_mhz: f64,
    pub n_repump: u32,
    pub fidelity: Option<f64>,
    pub stationarity_residual: Option<f64>,
    pub error: Option<String>,
}

pub const SWEEP_COLUMNS: [&str; 8] =
    ["index", "nbar", "omegan_MHz", "omega0_MHz", "n_repump", "fidelity", "stationarity_residual", "error"];

impl SweepRow {
    pub fn cells(&self) -> Vec<Cell> {
        vec![
            (self.index as u64).into(),
            self.nbar.into(),
            self.omegan_mhz.into(),
            self.omega0_mhz.into(),
            u64::from(self.n_repump).into(),
            self.fidelity.into(),
            self.stationarity_residual.into(),
            self.error.as_deref().map_or(Cell::Empty, Cell::from),
        ]
    }
}

/// Grid points in row-major order (Ω⁰ slowest, then n̄, then Ωⁿ). The
/// re-pump photon index stays at the resolved base value throughout.
pub fn sweep_points(res: &Resolved) -> Vec<DriveParams> {
    let omega0 = res.sweep_omega0.clone().unwrap_or_else(|| vec![res.drives.omega0_mhz]);
    let mut out = Vec::new();
    for &o0 in &omega0 {
        for &nbar in &res.sweep_nbar {
            for &on in &res.sweep_omegan {
                out.push(DriveParams { nbar, omegan_mhz: on, omega0_mhz: o0, ..res.drives });
            }
        }
    }
    out
}

/// Runs each point on the rayon pool. A failing point is reported in its row.
pub fn sweep(res: &Resolved) -> Vec<SweepRow> {
    sweep_points(res)
        .into_par_iter()
        .enumerate()
        .map(|(index, d)| {
            let base = SweepRow {
                index,
                nbar: d.nbar,
                omegan_mhz: d.omegan_mhz,
                omega0_mhz: d.omega0_mhz,
                n_repump: d.repump_index(),
                fidelity: None,
                stationarity_residual: None,
                error: None,
            };
            match run_steady(res.sys, d, res) {
                Ok((_, ss)) => SweepRow {
                    fidelity: Some(analysis::fidelity(&ss.rho)),
                    stationarity_residual: Some(ss.stationarity_residual),
                    ..base
                },
                Err(e) => SweepRow { error: Some(e.to_string()), ..base },
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetRow {
    pub case: &'static str,
    pub chi_a_mhz: f64,
    pub chi_b_mhz: f64,
    pub t1_a_us: f64,
    pub t1_b_us: f64,
    pub tphi_a_us: f64,
    pub tphi_b_us: f64,
    pub fidelity: f64,
    pub delta: f64,
}

pub const BUDGET_COLUMNS: [&str; 9] =
    ["case", "chi_A_MHz", "chi_B_MHz", "T1_A_us", "T1_B_us", "Tphi_A_us", "Tphi_B_us", "fidelity", "delta_from_ideal"];

impl BudgetRow {
    pub fn cells(&self) -> Vec<Cell> {
        vec![
            self.case.into(),
            self.chi_a_mhz.into(),
            self.chi_b_mhz.into(),
            self.t1_a_us.into(),
            self.t1_b_us.into(),
            self.tphi_a_us.into(),
            self.tphi_b_us.into(),
            self.fidelity.into(),
            self.delta.into(),
        ]
    }
}

/// Five configurations with the configured drives held fixed.
pub fn budget(res: &Resolved) -> Result<Vec<BudgetRow>, RunError> {
    let results = BudgetCase::ALL
        .par_iter()
        .map(|&case| {
            let (_, ss) = run_steady(case.system(&res.sys), res.drives, res)?;
            Ok((case, analysis::fidelity(&ss.rho)))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let b = ErrorBudget::from_fidelities(&results)?;
    Ok(b.entries
        .iter()
        .map(|e| {
            let s = e.case.system(&res.sys);
            BudgetRow {
                case: e.case.label(),
                chi_a_mhz: s.chi_a_mhz,
                chi_b_mhz: s.chi_b_mhz,
                t1_a_us: s.t1_a_us,
                t1_b_us: s.t1_b_us,
                tphi_a_us: s.tphi_a_us,
                tphi_b_us: s.tphi_b_us,
                fidelity: e.fidelity,
                delta: e.delta,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conditioned {
    pub fidelity: f64,
    pub concurrence: f64,
    pub weights: Weights,
    pub kept_fraction: f64,
    pub keep_probability_gg: f64,
    pub keep_probability_not_gg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostselectRecord {
    pub threshold_sigma: f64,
    pub unconditioned: StateSummary,
    /// Absent when the kept fraction falls below the floor.
    pub conditioned: Option<Conditioned>,
    pub usable: bool,
    pub note: Option<String>,
    pub fidelity_gain: Option<f64>,
}

pub fn postselect_state(rho: &DensityMatrix, model: &Model, monitor: &ReadoutModel, floor: f64) -> Result<PostselectRecord, RunError> {
    let unconditioned = summarize(rho, model)?;
    let (conditioned, note) = match condition_on_m1_with_floor(rho, monitor, monitor.threshold, floor) {
        Ok(c) => {
            let reduced = partial_trace_cavity(&c.rho, &model.space)?;
            let rec = Conditioned {
                fidelity: analysis::fidelity(&c.rho),
                concurrence: analysis::concurrence(&reduced)?,
                weights: analysis::basis_weights(&reduced)?.into(),
                kept_fraction: c.kept_fraction,
                keep_probability_gg: c.keep_gg,
                keep_probability_not_gg: c.keep_not,
            };
            (Some(rec), None)
        }
        Err(e @ bellstab_core::Error::ConditioningUnusable { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    Ok(PostselectRecord {
        threshold_sigma: monitor.threshold,
        fidelity_gain: conditioned.as_ref().map(|c| c.fidelity - unconditioned.fidelity),
        usable: conditioned.is_some(),
        unconditioned,
        conditioned,
        note,
    })
}

pub fn postselect(res: &Resolved) -> Result<PostselectRecord, RunError> {
    let (model, ss) = run_steady(res.sys, res.drives, res)?;
    postselect_state(&ss.rho, &model, &res.parity_monitor, res.kept_floor)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub fidelity: f64,
    pub pauli: BTreeMap<String, f64>,
}

fn reconstruction(p: &PauliVector) -> Reconstruction {
    Reconstruction { fidelity: p.bell_fidelity(), pauli: pauli_map(p) }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliffordRow {
    pub label: String,
    pub fidelity_exact: f64,
    pub fidelity_sampled: f64,
}

pub const CLIFFORD_COLUMNS: [&str; 3] = ["state", "fidelity_exact", "fidelity_sampled"];

impl CliffordRow {
    pub fn cells(&self) -> Vec<Cell> {
        vec![self.label.as_str().into(), self.fidelity_exact.into(), self.fidelity_sampled.into()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TomographyRecord {
    pub free_decay_us: f64,
    pub shots_per_setting: u64,
    pub assignment_errors: bool,
    pub design_condition_number: f64,
    /// The state handed to the tomography pipeline.
    pub actual: StateSummary,
    /// Noiseless outcomes, with the readout model applied if enabled.
    pub exact: Reconstruction,
    pub sampled: Reconstruction,
    /// Binomial standard error of each sampled average.
    pub standard_errors: BTreeMap<String, f64>,
    pub clifford_mean_exact: f64,
    pub clifford_mean_sampled: f64,
    pub clifford_min_sampled: f64,
    pub clifford_max_sampled: f64,
    #[serde(skip)]
    pub clifford: Vec<CliffordRow>,
}

pub fn tomography(res: &Resolved) -> Result<TomographyRecord, RunError> {
    let (model, ss) = run_steady(res.sys, res.drives, res)?;
    let rho = if res.free_decay_us > 0.0 {
        solver::free_decay(&ss.rho, res.free_decay_us, &model, &res.settings)?
    } else {
        ss.rho
    };
    let actual = summarize(&rho, &model)?;
    let reduced = partial_trace_cavity(&rho, &model.space)?;
    let set = RotationSet::standard();
    let design = tomography::build_design_matrix(&set)?;
    let readout = res.assignment_errors.then_some(&res.tomography_readout);
    let shots = Shots::PerSetting(res.shots_per_setting);

    let exact = tomography::reconstruct(&tomography::simulate_tomography(&reduced, &set, readout, Shots::Exact, res.seed)?, &design);
    let sampled = tomography::reconstruct(&tomography::simulate_tomography(&reduced, &set, readout, shots, res.seed)?, &design);
    let se = tomography::pauli_standard_errors(&reduced, &set, &design, readout, res.shots_per_setting)?;

    // the suite uses its own seed stream family so it never shares draws with the state above
    let suite_seed = res.seed.wrapping_add(1);
    let ce = tomography::clifford_suite(readout, Shots::Exact, suite_seed)?;
    let cs = tomography::clifford_suite(readout, shots, suite_seed)?;
    let clifford: Vec<CliffordRow> = ce
        .iter()
        .zip(&cs)
        .map(|(e, s)| CliffordRow { label: e.label.clone(), fidelity_exact: e.fidelity, fidelity_sampled: s.fidelity })
        .collect();
    let mean = |f: &dyn Fn(&CliffordRow) -> f64| clifford.iter().map(f).sum::<f64>() / clifford.len() as f64;

    Ok(TomographyRecord {
        free_decay_us: res.free_decay_us,
        shots_per_setting: res.shots_per_setting,
        assignment_errors: res.assignment_errors,
        design_condition_number: design.condition_number,
        actual,
        exact: reconstruction(&exact),
        sampled: reconstruction(&sampled),
        standard_errors: pauli_map(&PauliVector(se)),
        clifford_mean_exact: mean(&|r| r.fidelity_exact),
        clifford_mean_sampled: mean(&|r| r.fidelity_sampled),
        clifford_min_sampled: clifford.iter().map(|r| r.fidelity_sampled).fold(f64::INFINITY, f64::min),
        clifford_max_sampled: clifford.iter().map(|r| r.fidelity_sampled).fold(f64::NEG_INFINITY, f64::max),
        clifford,
    })
}

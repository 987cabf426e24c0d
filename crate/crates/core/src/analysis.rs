//! Scalar diagnostics: fidelity to the target Bell state, two-qubit Pauli
//! averages, concurrence, Bell/computational weights, the exponential
//! convergence fit, and the error-budget experiment.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // float math is inherent in core only on newer toolchains
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::hilbert::{kets, kron, qubit, ComplexMatrix};
use crate::linalg::{self, RealMatrix};
use crate::model::{DriveParams, Model, SystemParams};
use crate::solver::{self, DensityMatrix, SolverSettings};

const PAULI_NAMES: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// The 16 averages `⟨P_A ⊗ Q_B⟩`, indexed `4·p + q` with `I, X, Y, Z = 0..4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliVector(pub [f64; 16]);

impl PauliVector {
    pub fn get(&self, a: char, b: char) -> f64 {
        let idx = |c: char| PAULI_NAMES.iter().position(|&p| p == c).expect("Pauli label must be one of I, X, Y, Z");
        self.0[4 * idx(a) + idx(b)]
    }

    pub fn label(index: usize) -> [char; 2] {
        [PAULI_NAMES[index / 4], PAULI_NAMES[index % 4]]
    }

    /// `P_A ⊗ Q_B` for `index = 4p + q`.
    pub fn operator(index: usize) -> ComplexMatrix {
        kron(&qubit::pauli(index / 4), &qubit::pauli(index % 4))
    }

    /// Linear-inversion state `ρ = ¼ Σ ⟨PQ⟩ P⊗Q`; not projected onto physical states.
    pub fn to_density(&self) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for (k, &v) in self.0.iter().enumerate() {
            if v != 0.0 {
                m += &Self::operator(k).scale_real(v / 4.0);
            }
        }
        DensityMatrix::new_unchecked(m, 0.0)
    }

    /// Fidelity to `|φ−⟩`, `(1 − ⟨XX⟩ − ⟨YY⟩ − ⟨ZZ⟩)/4`.
    pub fn bell_fidelity(&self) -> f64 {
        (self.0[0] - self.get('X', 'X') - self.get('Y', 'Y') - self.get('Z', 'Z')) / 4.0
    }
}

fn two_qubit(rho: &DensityMatrix) -> Result<&ComplexMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    Ok(rho.matrix())
}

/// `Tr[(|φ−⟩⟨φ−| ⊗ I_c) ρ]` for a state on `4·N_c` dimensions (`N_c = 1` is
/// the bare two-qubit state).
pub fn fidelity(rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    assert!(d % 4 == 0, "state dimension must be a multiple of 4");
    let nc = d / 4;
    let m = rho.matrix();
    let phi = kets::phi_minus();
    let mut f = C64::new(0.0, 0.0);
    for n in 0..nc {
        for p in 0..4 {
            for q in 0..4 {
                if phi[p].norm() > 0.0 && phi[q].norm() > 0.0 {
                    f += phi[p].conj() * m[(p * nc + n, q * nc + n)] * phi[q];
                }
            }
        }
    }
    f.re
}

pub fn pauli_averages(rho: &DensityMatrix) -> Result<PauliVector> {
    let m = two_qubit(rho)?;
    let mut out = [0.0; 16];
    for (k, v) in out.iter_mut().enumerate() {
        *v = crate::hilbert::trace_product(m, &PauliVector::operator(k))?.re;
    }
    Ok(PauliVector(out))
}

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`, with `λᵢ` the decreasing
/// eigenvalues of `√(√ρ ρ̃ √ρ)` and `ρ̃ = (Y⊗Y) ρ* (Y⊗Y)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    let m = two_qubit(rho)?;
    let yy = kron(&qubit::sigma_y(), &qubit::sigma_y());
    let tilde = yy.matmul(&m.conj()).matmul(&yy);
    let sqrt_rho = linalg::hermitian_function(m, |x| x.max(0.0).sqrt())?;
    let r = sqrt_rho.matmul(&tilde).matmul(&sqrt_rho);
    let mut lambda: Vec<f64> = linalg::hermitian_eigenvalues(&r)?.into_iter().map(|x| x.max(0.0).sqrt()).collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0))
}

/// Populations in `{|gg⟩, |ee⟩, |φ+⟩, |φ−⟩}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisWeights {
    pub gg: f64,
    pub ee: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
}

impl BasisWeights {
    pub fn sum(&self) -> f64 {
        self.gg + self.ee + self.phi_plus + self.phi_minus
    }

    /// Two-qubit state diagonal in this basis.
    pub fn to_density(&self) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for (w, ket) in [
            (self.gg, kets::gg()),
            (self.ee, kets::ee()),
            (self.phi_plus, kets::phi_plus()),
            (self.phi_minus, kets::phi_minus()),
        ] {
            m += &ComplexMatrix::projector(&ket).scale_real(w);
        }
        DensityMatrix::new_unchecked(m, 0.0)
    }
}

pub fn basis_weights(rho: &DensityMatrix) -> Result<BasisWeights> {
    let m = two_qubit(rho)?;
    let w = |ket: [C64; 4]| -> f64 {
        let v = m.apply(&ket);
        ket.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<C64>().re
    };
    Ok(BasisWeights { gg: w(kets::gg()), ee: w(kets::ee()), phi_plus: w(kets::phi_plus()), phi_minus: w(kets::phi_minus()) })
}

/// Least-squares fit of `F(T) = F_∞ − (F_∞ − F₀) e^{−T/τ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    pub f_inf: f64,
    pub f_0: f64,
    pub tau: f64,
    pub rms_residual: f64,
    pub iterations: usize,
}

impl ExponentialFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.f_inf - (self.f_inf - self.f_0) * (-t / self.tau).exp()
    }
}

/// Levenberg–Marquardt on `(F_∞, F₀, ln τ)`, started from the last point,
/// the first point and half the time span.
pub fn fit_exponential(series: &[(f64, f64)]) -> Result<ExponentialFit> {
    if series.len() < 4 {
        return Err(invalid("series", "need at least 4 points"));
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(invalid("series", "times must be strictly increasing"));
    }
    if series.iter().any(|(t, f)| !t.is_finite() || !f.is_finite()) {
        return Err(invalid("series", "values must be finite"));
    }
    let span = series.last().unwrap().0 - series[0].0;
    let (fmin, fmax) = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, f)| (lo.min(f), hi.max(f)));
    let scale = fmax.abs().max(fmin.abs()).max(1.0);
    if fmax - fmin <= 1e-12 * scale {
        return Err(Error::FitFailed(format!("series is constant (spread {:e}); time constant unidentifiable", fmax - fmin)));
    }

    let residuals = |p: &[f64; 3]| -> Vec<f64> {
        let tau = p[2].exp();
        series.iter().map(|&(t, f)| p[0] - (p[0] - p[1]) * (-t / tau).exp() - f).collect()
    };
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();

    let mut p = [series.last().unwrap().1, series[0].1, (0.5 * span).ln()];
    let mut r = residuals(&p);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 0..1000 {
        iterations = it + 1;
        let tau = p[2].exp();
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for (&(t, _), &ri) in series.iter().zip(&r) {
            let e = (-t / tau).exp();
            let j = [1.0 - e, e, -(p[0] - p[1]) * e * t / tau];
            for a in 0..3 {
                jtr[a] += j[a] * ri;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|a| (0..3).map(|b| jtj[a][b] + if a == b { lambda * jtj[a][a].max(1e-30) } else { 0.0 }).collect())
                .collect();
            let Ok(inv) = RealMatrix::from_rows(&rows).and_then(|m| m.inverse()) else {
                lambda *= 10.0;
                continue;
            };
            let delta = inv.mul_vec(&jtr);
            let trial = [p[0] - delta[0], p[1] - delta[1], p[2] - delta[2]];
            let rt = residuals(&trial);
            let ct = cost(&rt);
            if ct.is_finite() && ct <= c {
                let rel = (c - ct) / c.max(1e-300);
                let step = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                p = trial;
                r = rt;
                c = ct;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if rel < 1e-16 || step < 1e-14 || c < 1e-30 {
                    lambda = f64::INFINITY;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || lambda.is_infinite() {
            break;
        }
    }

    let tau = p[2].exp();
    let min_dt = series.windows(2).map(|w| w[1].0 - w[0].0).fold(f64::INFINITY, f64::min);
    if !(tau.is_finite() && tau < 1e3 * span && tau > 1e-3 * min_dt) {
        return Err(Error::FitFailed(format!("time constant {tau:e} is outside the range the samples can resolve")));
    }
    if (p[0] - p[1]).abs() <= 1e-9 * scale {
        return Err(Error::FitFailed(format!("amplitude F_inf - F_0 = {:e} vanishes", p[0] - p[1])));
    }
    Ok(ExponentialFit {
        f_inf: p[0],
        f_0: p[1],
        tau,
        rms_residual: (c / series.len() as f64).sqrt(),
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BudgetCase {
    /// Matched χ, no qubit decoherence.
    Ideal,
    ChiMismatch,
    T1Only,
    TphiOnly,
    Full,
}

impl BudgetCase {
    pub const ALL: [BudgetCase; 5] = [Self::Ideal, Self::ChiMismatch, Self::T1Only, Self::TphiOnly, Self::Full];

    pub fn label(self) -> &'static str {
        match self {
            Self::Ideal => "ideal",
            Self::ChiMismatch => "chi_mismatch",
            Self::T1Only => "t1_only",
            Self::TphiOnly => "tphi_only",
            Self::Full => "full",
        }
    }

    /// Parameters for this case, derived from the full device description.
    /// Matching sets `χ_A = χ_B`.
    pub fn system(self, full: &SystemParams) -> SystemParams {
        let matched = SystemParams { chi_a_mhz: full.chi_b_mhz, ..*full };
        match self {
            Self::Ideal => matched.without_decoherence(),
            Self::ChiMismatch => full.without_decoherence(),
            Self::T1Only => SystemParams { tphi_a_us: f64::INFINITY, tphi_b_us: f64::INFINITY, ..matched },
            Self::TphiOnly => SystemParams { t1_a_us: f64::INFINITY, t1_b_us: f64::INFINITY, ..matched },
            Self::Full => *full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetEntry {
    pub case: BudgetCase,
    pub fidelity: f64,
    /// `F_ideal − F_case`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget {
    pub entries: Vec<BudgetEntry>,
}

impl ErrorBudget {
    /// Assembles a budget from per-case fidelities; the ideal case must be present.
    pub fn from_fidelities(results: &[(BudgetCase, f64)]) -> Result<Self> {
        let ideal = results
            .iter()
            .find(|(c, _)| *c == BudgetCase::Ideal)
            .map(|&(_, f)| f)
            .ok_or_else(|| invalid("budget", "the ideal configuration is required"))?;
        let mut entries: Vec<BudgetEntry> =
            results.iter().map(|&(case, fidelity)| BudgetEntry { case, fidelity, delta: ideal - fidelity }).collect();
        entries.sort_by_key(|e| e.case);
        Ok(Self { entries })
    }

    pub fn get(&self, case: BudgetCase) -> Option<&BudgetEntry> {
        self.entries.iter().find(|e| e.case == case)
    }
}

/// Steady-state fidelity of the model at `t_final`.
pub fn steady_fidelity(sys: SystemParams, drives: DriveParams, t_final: f64, settings: &SolverSettings) -> Result<f64> {
    let model = Model::new(sys, drives)?;
    let ss = solver::steady_state(&model, t_final, settings)?;
    Ok(fidelity(&ss.rho))
}

/// Runs the five budget configurations one after another. The CLI runs
/// them in parallel through [`BudgetCase::system`] instead.
pub fn error_budget(sys: &SystemParams, drives: &DriveParams, t_final: f64, settings: &SolverSettings) -> Result<ErrorBudget> {
    let results = BudgetCase::ALL
        .iter()
        .map(|&case| Ok((case, steady_fidelity(case.system(sys), *drives, t_final, settings)?)))
        .collect::<Result<Vec<_>>>()?;
    ErrorBudget::from_fidelities(&results)
}

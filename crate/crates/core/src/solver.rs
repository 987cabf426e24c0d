//! Time integration of the Lindblad master equation.
//!
//! `dρ/dt = -i[H(t), ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`
//!
//! Operators are dense in [`ComplexMatrix`], but the right-hand side is
//! evaluated with sparse copies of them: every operator in the model has
//! O(dim) non-zeros, which makes one evaluation O(dim²) instead of O(dim³).
//! The integrator is Dormand–Prince 5(4) with a PI step-size controller.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // float math is inherent in core only on newer toolchains
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::hilbert::ComplexMatrix;
use crate::linalg;
use crate::model::{DriveParams, Model};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Trace deviation above which an integration is aborted.
pub const TRACE_ABORT: f64 = 1e-7;
/// Hermiticity defect above which an integration is aborted.
pub const HERMITICITY_ABORT: f64 = 1e-9;

/// A state of the composite system (or of the two qubits alone) at a time in μs.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    time: f64,
}

impl DensityMatrix {
    /// Checks the trace (1e-8), Hermiticity (1e-10) and positivity (-1e-7).
    pub fn new(matrix: ComplexMatrix, time: f64) -> Result<Self> {
        let rho = Self::new_unchecked(matrix, time);
        rho.validate()?;
        Ok(rho)
    }

    pub fn new_unchecked(matrix: ComplexMatrix, time: f64) -> Self {
        assert!(matrix.is_square(), "density matrix must be square");
        Self { matrix, time }
    }

    pub fn from_ket(psi: &[C64]) -> Self {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let m = ComplexMatrix::projector(psi).scale_real(1.0 / norm);
        Self::new_unchecked(m, 0.0)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new_unchecked(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64), 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(Error::InvariantViolation { time: self.time, what: "trace deviation", value: (tr.re - 1.0).abs() });
        }
        let h = self.matrix.hermiticity_defect();
        if h > 1e-10 {
            return Err(Error::InvariantViolation { time: self.time, what: "hermiticity defect", value: h });
        }
        let min = self.min_eigenvalue()?;
        if min < -1e-7 {
            return Err(Error::InvariantViolation { time: self.time, what: "negative eigenvalue", value: min });
        }
        Ok(())
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr(ρρ) = Σ_ij ρ_ij ρ_ji
        crate::hilbert::trace_product(&self.matrix, &self.matrix).unwrap().re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigenvalues(&self.matrix)?[0])
    }
}

/// Coordinate-list sparse operator.
#[derive(Debug, Clone)]
pub(crate) struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub(crate) fn from_dense(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let v = m[(i, j)];
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// `out += c · (A ρ)` for row-major `ρ`, `out` of side `d`.
    #[inline]
    fn left_acc(&self, c: C64, rho: &[C64], out: &mut [C64], d: usize) {
        for &(i, k, v) in &self.entries {
            let f = c * v;
            let src = &rho[k * d..(k + 1) * d];
            let dst = &mut out[i * d..(i + 1) * d];
            for (o, &r) in dst.iter_mut().zip(src) {
                *o += f * r;
            }
        }
    }

    /// `out += c · (ρ A)`.
    #[inline]
    fn right_acc(&self, c: C64, rho: &[C64], out: &mut [C64], d: usize) {
        for &(k, j, v) in &self.entries {
            let f = c * v;
            for i in 0..d {
                out[i * d + j] += f * rho[i * d + k];
            }
        }
    }
}

/// The compiled right-hand side of the master equation for one [`Model`].
#[derive(Debug, Clone)]
pub struct Liouvillian<'m> {
    model: &'m Model,
    /// `H_static − (i/2) Σ γ L†L`
    k_eff: SparseOp,
    k_eff_adj: SparseOp,
    quadrature: SparseOp,
    repump: SparseOp,
    repump_adj: SparseOp,
    jumps: Vec<(SparseOp, SparseOp, f64)>,
    dim: usize,
}

impl<'m> Liouvillian<'m> {
    pub fn new(model: &'m Model) -> Self {
        let mut k = model.static_h.clone();
        for ch in &model.channels {
            let ldl = ch.operator.adjoint().matmul(&ch.operator);
            k += &ldl.scale(C64::new(0.0, -0.5 * ch.rate));
        }
        let jumps = model
            .channels
            .iter()
            .map(|ch| (SparseOp::from_dense(&ch.operator), SparseOp::from_dense(&ch.operator.adjoint()), ch.rate))
            .collect();
        Self {
            model,
            k_eff_adj: SparseOp::from_dense(&k.adjoint()),
            k_eff: SparseOp::from_dense(&k),
            quadrature: SparseOp::from_dense(&model.cavity_quadrature),
            repump: SparseOp::from_dense(&model.repump),
            repump_adj: SparseOp::from_dense(&model.repump.adjoint()),
            jumps,
            dim: model.dim(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes `dρ/dt` at time `t` into `out`. `scratch` must hold `dim²` entries.
    pub fn eval(&self, t: f64, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let d = self.dim;
        out.fill(ZERO);
        let (cx, cp) = self.model.modulation(t);
        let cx = C64::new(cx, 0.0);
        let minus_i = -I;

        // -i H_eff ρ + i ρ H_eff†
        self.k_eff.left_acc(minus_i, rho, out, d);
        self.k_eff_adj.right_acc(I, rho, out, d);
        if cx != ZERO {
            self.quadrature.left_acc(minus_i * cx, rho, out, d);
            self.quadrature.right_acc(I * cx, rho, out, d);
        }
        if cp != ZERO {
            self.repump.left_acc(minus_i * cp, rho, out, d);
            self.repump_adj.left_acc(minus_i * cp.conj(), rho, out, d);
            self.repump_adj.right_acc(I * cp.conj(), rho, out, d);
            self.repump.right_acc(I * cp, rho, out, d);
        }

        // Σ γ L ρ L†
        for (l, l_adj, rate) in &self.jumps {
            scratch.fill(ZERO);
            l.left_acc(C64::new(1.0, 0.0), rho, scratch, d);
            l_adj.right_acc(C64::new(*rate, 0.0), scratch, out, d);
        }
    }
}

/// `dρ/dt` for a single state.
pub fn lindblad_rhs(rho: &DensityMatrix, t: f64, model: &Model) -> Result<ComplexMatrix> {
    let d = model.dim();
    if rho.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho.dim() });
    }
    let lv = Liouvillian::new(model);
    let mut out = vec![ZERO; d * d];
    let mut scratch = vec![ZERO; d * d];
    lv.eval(t, rho.matrix().as_slice(), &mut out, &mut scratch);
    ComplexMatrix::from_vec(d, d, out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Mixed absolute/relative tolerance per matrix entry.
    pub tol: f64,
    pub initial_step_us: f64,
    pub max_step_us: f64,
    /// Snapshot spacing for [`evolve`].
    pub snapshot_every_us: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-8, initial_step_us: 1e-3, max_step_us: 0.05, snapshot_every_us: 0.1 }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(invalid("tol", "must lie in (0, 1)"));
        }
        if !(self.initial_step_us > 0.0 && self.max_step_us >= self.initial_step_us) {
            return Err(invalid("step", "need 0 < initial_step <= max_step"));
        }
        if !(self.snapshot_every_us > 0.0) {
            return Err(invalid("snapshot_every", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    /// Largest normalized local error among accepted steps (≤ 1).
    pub max_local_error: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<DensityMatrix>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time()).collect()
    }

    pub fn last(&self) -> &DensityMatrix {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Workspace {
    k: [Vec<C64>; 7],
    stage: Vec<C64>,
    y_new: Vec<C64>,
    scratch: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            k: core::array::from_fn(|_| vec![ZERO; n]),
            stage: vec![ZERO; n],
            y_new: vec![ZERO; n],
            scratch: vec![ZERO; n],
        }
    }
}

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    out.copy_from_slice(y);
    for &(a, k) in terms {
        if a == 0.0 {
            continue;
        }
        let ha = h * a;
        for (o, &kv) in out.iter_mut().zip(k) {
            *o += kv * ha;
        }
    }
}

/// Integrates from `rho0` and records the state at each of `times`
/// (sorted, strictly increasing, none earlier than `rho0.time()`).
pub fn evolve_to_times(rho0: &DensityMatrix, times: &[f64], model: &Model, settings: &SolverSettings) -> Result<Trajectory> {
    settings.validate()?;
    let d = model.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho0.dim() });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("times", "snapshot times must be strictly increasing"));
    }
    if times.first().is_some_and(|&t| t < rho0.time()) {
        return Err(invalid("times", "snapshot times cannot precede the initial state"));
    }

    let lv = Liouvillian::new(model);
    let n = d * d;
    let mut ws = Workspace::new(n);
    let mut y = rho0.matrix().as_slice().to_vec();
    let mut t = rho0.time();
    let mut h = settings.initial_step_us;
    let mut err_prev = 1e-4f64;
    let mut stats = StepStats::default();
    let mut snapshots = Vec::with_capacity(times.len());
    let tol = settings.tol;

    let record = |y: &[C64], t: f64, snapshots: &mut Vec<DensityMatrix>| -> Result<()> {
        let m = ComplexMatrix::from_vec(d, d, y.to_vec())?;
        let tr = m.trace();
        let dev = (tr - C64::new(1.0, 0.0)).norm();
        if dev > TRACE_ABORT {
            return Err(Error::InvariantViolation { time: t, what: "trace deviation", value: dev });
        }
        let herm = m.hermiticity_defect();
        if herm > HERMITICITY_ABORT {
            return Err(Error::InvariantViolation { time: t, what: "hermiticity defect", value: herm });
        }
        snapshots.push(DensityMatrix::new_unchecked(m, t));
        Ok(())
    };

    lv.eval(t, &y, &mut ws.k[0], &mut ws.scratch);
    stats.rhs_evaluations += 1;

    for &target in times {
        while t < target {
            let remaining = target - t;
            let mut step = h.min(settings.max_step_us);
            let lands = step >= remaining * (1.0 - 1e-12);
            if lands {
                step = remaining;
            }
            if step < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { time: t, step, local_error: err_prev });
            }

            let Workspace { k, stage, y_new, scratch } = &mut ws;
            let [k1, k2, k3, k4, k5, k6, k7] = k;
            combine(stage, &y, step, &[(A21, k1)]);
            lv.eval(t + C2 * step, stage, k2, scratch);
            combine(stage, &y, step, &[(A31, k1), (A32, k2)]);
            lv.eval(t + C3 * step, stage, k3, scratch);
            combine(stage, &y, step, &[(A41, k1), (A42, k2), (A43, k3)]);
            lv.eval(t + C4 * step, stage, k4, scratch);
            combine(stage, &y, step, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
            lv.eval(t + C5 * step, stage, k5, scratch);
            combine(stage, &y, step, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
            lv.eval(t + step, stage, k6, scratch);
            combine(y_new, &y, step, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
            lv.eval(t + step, y_new, k7, scratch);
            stats.rhs_evaluations += 6;

            let mut acc = 0.0;
            for idx in 0..n {
                let e = (k1[idx] * E1 + k3[idx] * E3 + k4[idx] * E4 + k5[idx] * E5 + k6[idx] * E6 + k7[idx] * E7) * step;
                let sc = tol + tol * y[idx].norm().max(y_new[idx].norm());
                acc += e.norm_sqr() / (sc * sc);
            }
            let err = (acc / n as f64).sqrt();

            if err <= 1.0 {
                t = if lands { target } else { t + step };
                y.copy_from_slice(y_new);
                core::mem::swap(k1, k7);
                stats.accepted += 1;
                stats.max_local_error = stats.max_local_error.max(err);
                let e = err.max(1e-10);
                let fac = 0.9 * e.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
                let grown = step * fac.clamp(0.2, 5.0);
                // a step shortened to land on a snapshot says nothing about the natural step size
                h = if lands { h.max(grown) } else { grown };
                err_prev = e;
            } else {
                stats.rejected += 1;
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
                h = step * fac;
                err_prev = err.max(1e-10);
            }
        }
        record(&y, t, &mut snapshots)?;
    }

    Ok(Trajectory { snapshots, stats })
}

/// Integrates to `t_end`, with snapshots every `settings.snapshot_every_us`
/// (the initial state and `t_end` are always included).
pub fn evolve(rho0: &DensityMatrix, t_end: f64, model: &Model, settings: &SolverSettings) -> Result<Trajectory> {
    settings.validate()?;
    let t0 = rho0.time();
    if !(t_end >= t0) {
        return Err(invalid("t_end", "must not precede the initial time"));
    }
    let dt = settings.snapshot_every_us;
    let mut times = vec![t0];
    let mut k = 1u64;
    loop {
        let t = t0 + k as f64 * dt;
        if t >= t_end - 1e-9 * dt {
            break;
        }
        times.push(t);
        k += 1;
    }
    if t_end > t0 {
        times.push(t_end);
    }
    evolve_to_times(rho0, &times, model, settings)
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `‖ρ(t_f) − ρ(t_f − T_d)‖_F` over one drive period.
    pub stationarity_residual: f64,
    pub stats: StepStats,
}

/// `ρ(t_final)` from the model's initial state, plus a one-period stationarity residual.
pub fn steady_state(model: &Model, t_final: f64, settings: &SolverSettings) -> Result<SteadyState> {
    let rho0 = model.initial_state();
    let period = model.drive_period();
    let mut times = Vec::with_capacity(2);
    let has_lookback = period.is_finite() && t_final - period > 0.0;
    if has_lookback {
        times.push(t_final - period);
    }
    times.push(t_final);
    let traj = evolve_to_times(&rho0, &times, model, settings)?;
    let rho = traj.last().clone();
    let stationarity_residual = if has_lookback {
        (rho.matrix() - traj.snapshots[0].matrix()).frobenius_norm()
    } else {
        f64::NAN
    };
    Ok(SteadyState { rho, stationarity_residual, stats: traj.stats })
}

/// Lets `rho` evolve for `duration` with every drive off and all dissipators on.
pub fn free_decay(rho: &DensityMatrix, duration: f64, model: &Model, settings: &SolverSettings) -> Result<DensityMatrix> {
    if duration <= 0.0 {
        return Ok(rho.clone());
    }
    let idle = Model::new(model.sys, DriveParams::off())?;
    let traj = evolve_to_times(rho, &[rho.time() + duration], &idle, settings)?;
    Ok(traj.last().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{number_operator, qubit, Subsystem};
    use crate::model::SystemParams;
    use approx::assert_abs_diff_eq;

    /// Dense textbook form, independent of the sparse kernel.
    fn dense_rhs(rho: &ComplexMatrix, t: f64, model: &Model) -> ComplexMatrix {
        let h = model.hamiltonian_at(t);
        let mut out = h.commutator(rho).scale(-I);
        for ch in &model.channels {
            let l = &ch.operator;
            let ld = l.adjoint();
            let ldl = ld.matmul(l);
            let jump = l.matmul(rho).matmul(&ld);
            let anti = &ldl.matmul(rho) + &rho.matmul(&ldl);
            out += &(&jump - &anti.scale_real(0.5)).scale_real(ch.rate);
        }
        out
    }

    fn small_device(levels: usize) -> SystemParams {
        SystemParams { cavity_levels: levels, ..SystemParams::device() }
    }

    fn pseudo_random_state(d: usize, salt: f64) -> ComplexMatrix {
        // G G† / Tr, with G filled deterministically
        let g = ComplexMatrix::from_fn(d, d, |i, j| {
            let x = (i * 31 + j * 17) as f64 + salt;
            C64::new((x * 0.7).sin(), (x * 1.3).cos())
        });
        let m = g.matmul(&g.adjoint());
        let tr = m.trace().re;
        m.scale_real(1.0 / tr)
    }

    #[test]
    fn sparse_rhs_matches_dense_formula() {
        let sys = small_device(5);
        let model = Model::new(sys, DriveParams { nbar: 2.0, ..DriveParams::optimum(&sys) }).unwrap();
        let rho = pseudo_random_state(model.dim(), 0.3);
        for &t in &[0.0, 0.031, 1.7] {
            let fast = lindblad_rhs(&DensityMatrix::new_unchecked(rho.clone(), t), t, &model).unwrap();
            let slow = dense_rhs(&rho, t, &model);
            assert!(fast.max_abs_diff(&slow) < 1e-11, "t = {t}");
        }
    }

    #[test]
    fn ground_vacuum_is_dark_without_drives() {
        let model = Model::new(small_device(6), DriveParams::off()).unwrap();
        let rho = DensityMatrix::from_ket(&model.space.basis_ket(0, 0, 0));
        let d = lindblad_rhs(&rho, 0.0, &model).unwrap();
        assert_eq!(d.frobenius_norm(), 0.0);
    }

    #[test]
    fn photon_decay_rate() {
        let sys = small_device(6).without_decoherence();
        let model = Model::new(sys, DriveParams::off()).unwrap();
        let rho = DensityMatrix::from_ket(&model.space.basis_ket(0, 0, 1));
        let d = lindblad_rhs(&rho, 0.0, &model).unwrap();
        let n = model.space.embed(&number_operator(6).unwrap(), Subsystem::Cavity).unwrap();
        let dn = crate::hilbert::trace_product(&d, &n).unwrap();
        assert_abs_diff_eq!(dn.re, -sys.kappa(), epsilon = 1e-12);
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let sys = small_device(5);
        let model = Model::new(sys, DriveParams::optimum(&sys)).unwrap();
        for salt in [0.1, 2.0, 7.7] {
            let rho = DensityMatrix::new_unchecked(pseudo_random_state(model.dim(), salt), 0.0);
            let d = lindblad_rhs(&rho, 0.4 * salt, &model).unwrap();
            assert!(d.trace().norm() <= 1e-12);
            assert!(d.hermiticity_defect() <= 1e-12);
        }
    }

    #[test]
    fn rhs_rejects_wrong_dimension() {
        let model = Model::new(small_device(3), DriveParams::off()).unwrap();
        assert!(lindblad_rhs(&DensityMatrix::maximally_mixed(4), 0.0, &model).is_err());
    }

    #[test]
    fn analytic_cavity_decay() {
        let sys = small_device(6).without_decoherence();
        let model = Model::new(sys, DriveParams::off()).unwrap();
        let rho0 = DensityMatrix::from_ket(&model.space.basis_ket(0, 0, 3));
        let t = 1.0 / sys.kappa();
        let traj = evolve(&rho0, t, &model, &SolverSettings::default()).unwrap();
        let n = model.space.embed(&number_operator(6).unwrap(), Subsystem::Cavity).unwrap();
        let got = crate::hilbert::expectation(traj.last(), &n).unwrap().re;
        let want = 3.0 / core::f64::consts::E;
        assert!((got - want).abs() / want < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn analytic_qubit_relaxation() {
        let sys = SystemParams {
            kappa_mhz: 0.0,
            t1_b_us: f64::INFINITY,
            tphi_a_us: f64::INFINITY,
            tphi_b_us: f64::INFINITY,
            ..small_device(2)
        };
        let model = Model::new(sys, DriveParams::off()).unwrap();
        let rho0 = DensityMatrix::from_ket(&model.space.basis_ket(1, 0, 0));
        let traj = evolve(&rho0, 20.0, &model, &SolverSettings { snapshot_every_us: 2.5, ..Default::default() }).unwrap();
        let z_a = model.space.embed(&qubit::sigma_z(), Subsystem::A).unwrap();
        for s in &traj.snapshots {
            let z = crate::hilbert::expectation(s, &z_a).unwrap().re;
            // Z|e⟩ = −|e⟩, so ⟨Z_A⟩ = 1 − 2 e^{−t/T1}
            assert_abs_diff_eq!(z, 1.0 - 2.0 * (-s.time() / 16.0).exp(), epsilon = 1e-7);
        }
    }

    #[test]
    fn zero_photon_drive_rabi_oscillation() {
        // H = Ω⁰ σ_x on qubit A only: P_e(t) = sin²(Ω⁰ t) with Ω⁰ in rad/μs.
        let sys = SystemParams { kappa_mhz: 0.0, ..small_device(2) }.without_decoherence();
        let drives = DriveParams { omega0_mhz: 0.85, phase_0: 0.0, ..DriveParams::off() };
        let model = Model::new(SystemParams { chi_a_mhz: 0.0, chi_b_mhz: 0.0, ..sys }, drives).unwrap();
        let rho0 = DensityMatrix::from_ket(&model.space.basis_ket(0, 0, 0));
        let traj = evolve(&rho0, 1.2, &model, &SolverSettings { snapshot_every_us: 0.05, ..Default::default() }).unwrap();
        let omega = core::f64::consts::TAU * 0.85;
        let ex_a = model.space.embed(&ComplexMatrix::projector(&[ZERO, C64::new(1.0, 0.0)]), Subsystem::A).unwrap();
        for s in &traj.snapshots {
            let p = crate::hilbert::expectation(s, &ex_a).unwrap().re;
            let want = (omega * s.time()).sin().powi(2);
            assert_abs_diff_eq!(p, want, epsilon = 1e-7);
        }
    }

    #[test]
    fn unitary_limit_conserves_purity() {
        let sys = SystemParams { kappa_mhz: 0.0, ..small_device(6) }.without_decoherence();
        let model = Model::new(sys, DriveParams::optimum(&SystemParams::device())).unwrap();
        let rho0 = DensityMatrix::from_ket(&model.space.basis_ket(0, 0, 0));
        let settings = SolverSettings { tol: 1e-10, ..Default::default() };
        let traj = evolve(&rho0, 1.0, &model, &settings).unwrap();
        for s in &traj.snapshots {
            assert!((s.purity() - 1.0).abs() <= 1e-8, "purity {} at {}", s.purity(), s.time());
        }
    }

    #[test]
    fn undriven_steady_state_is_ground() {
        let model = Model::new(small_device(5), DriveParams::off()).unwrap();
        let ss = steady_state(&model, 2.0, &SolverSettings::default()).unwrap();
        let target = DensityMatrix::from_ket(&model.space.basis_ket(0, 0, 0));
        assert!(ss.rho.matrix().max_abs_diff(target.matrix()) < 1e-6);
        assert!(ss.stationarity_residual < 1e-12);
    }

    #[test]
    fn snapshot_times_are_respected() {
        let model = Model::new(small_device(3), DriveParams::off()).unwrap();
        let rho0 = model.initial_state();
        let traj = evolve(&rho0, 0.35, &model, &SolverSettings::default()).unwrap();
        let times = traj.times();
        assert_eq!(times.len(), 5);
        assert_eq!(times[0], 0.0);
        assert_eq!(*times.last().unwrap(), 0.35);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert!(evolve_to_times(&rho0, &[0.2, 0.1], &model, &SolverSettings::default()).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let bad = ComplexMatrix::diagonal(&[C64::new(1.2, 0.0), C64::new(-0.2, 0.0)]);
        assert!(DensityMatrix::new(bad, 0.0).is_err());
        let ok = ComplexMatrix::diagonal(&[C64::new(0.7, 0.0), C64::new(0.3, 0.0)]);
        assert!(DensityMatrix::new(ok, 0.0).is_ok());
    }
}

//! Single-shot dispersive joint readout: Gaussian outcome model for the
//! `gg` vs not-`gg` measurement, assignment errors, histograms and
//! post-selection on the parity monitor.
//!
//! Outcomes are in units of the pooled width `σ = (σ_gg + σ_not)/2`. The
//! `gg` distribution sits at the larger mean and a shot is assigned `gg`
//! when `I ≥ threshold`.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // float math is inherent in core only on newer toolchains
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::hilbert::ComplexMatrix;
use crate::solver::DensityMatrix;

/// Kept fractions below this are reported as unusable conditioning.
pub const DEFAULT_KEPT_FLOOR: f64 = 1e-6;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
    }
}

/// Independent generator for `stream` under a run seed. Parallel batches
/// take one stream each, so results do not depend on scheduling.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutModel {
    pub mu_gg: f64,
    pub mu_not: f64,
    /// `σ_gg / σ_not`.
    pub sigma_gg_ratio: f64,
    pub threshold: f64,
    /// Probability that a `gg` shot is relabelled not-`gg` before sampling.
    pub eps_gg: f64,
    /// Probability that a not-`gg` shot is relabelled `gg`.
    pub eps_not: f64,
}

/// `P(correct assignment | state class)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignmentFidelity {
    pub gg: f64,
    pub not_gg: f64,
}

impl ReadoutModel {
    pub fn new(mu_gg: f64, mu_not: f64, sigma_gg_ratio: f64, threshold: f64, eps_gg: f64, eps_not: f64) -> Result<Self> {
        let m = Self { mu_gg, mu_not, sigma_gg_ratio, threshold, eps_gg, eps_not };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_gg.is_finite() && self.mu_not.is_finite()) {
            return Err(invalid("mu", "means must be finite"));
        }
        if !(self.mu_gg > self.mu_not) {
            return Err(invalid("separation", "mu_gg must exceed mu_not"));
        }
        if !(self.sigma_gg_ratio > 0.0 && self.sigma_gg_ratio.is_finite()) {
            return Err(invalid("sigma_gg_ratio", "must be positive and finite"));
        }
        if self.threshold.is_nan() {
            return Err(invalid("threshold", "must not be NaN"));
        }
        for (name, e) in [("eps_gg", self.eps_gg), ("eps_not", self.eps_not)] {
            if !(0.0..0.5).contains(&e) {
                return Err(invalid(name, "assignment-error rates must lie in [0, 0.5)"));
            }
        }
        Ok(())
    }

    /// Tomography readout: 5.5σ separation, `gg` width 0.75 of the other,
    /// threshold at equal overlap error, flip rates calibrated so the
    /// correct-assignment probabilities are 96% (`gg`) and 97% (others).
    pub fn tomography() -> Self {
        let base = Self { mu_gg: 5.5, mu_not: 0.0, sigma_gg_ratio: 0.75, threshold: 0.0, eps_gg: 0.0, eps_not: 0.0 };
        base.with_threshold(base.balanced_threshold())
            .calibrated(0.96, 0.97)
            .expect("tomography readout calibration is feasible")
    }

    /// Parity monitor: two equal Gaussians 2σ apart, `gg` at `+1`, kept
    /// shots below −2.2.
    pub fn parity_monitor() -> Self {
        Self { mu_gg: 1.0, mu_not: -1.0, sigma_gg_ratio: 1.0, threshold: -2.2, eps_gg: 0.0, eps_not: 0.0 }
    }

    pub fn with_threshold(self, threshold: f64) -> Self {
        Self { threshold, ..self }
    }

    pub fn without_flips(self) -> Self {
        Self { eps_gg: 0.0, eps_not: 0.0, ..self }
    }

    pub fn separation(&self) -> f64 {
        self.mu_gg - self.mu_not
    }

    pub fn sigma_gg(&self) -> f64 {
        2.0 * self.sigma_gg_ratio / (1.0 + self.sigma_gg_ratio)
    }

    pub fn sigma_not(&self) -> f64 {
        2.0 / (1.0 + self.sigma_gg_ratio)
    }

    /// Threshold at which both Gaussian overlap errors are equal.
    pub fn balanced_threshold(&self) -> f64 {
        let (sg, sn) = (self.sigma_gg(), self.sigma_not());
        (self.mu_not * sg + self.mu_gg * sn) / (sg + sn)
    }

    /// `(P(I < th | gg Gaussian), P(I ≥ th | not-gg Gaussian))`.
    pub fn overlap_errors(&self) -> (f64, f64) {
        let miss_gg = normal_cdf((self.threshold - self.mu_gg) / self.sigma_gg());
        let miss_not = 1.0 - normal_cdf((self.threshold - self.mu_not) / self.sigma_not());
        (miss_gg, miss_not)
    }

    /// `1 − ε_gg − ε_not` from the Gaussian overlap alone.
    pub fn overlap_fidelity(&self) -> f64 {
        let (a, b) = self.overlap_errors();
        1.0 - a - b
    }

    pub fn assignment_fidelity(&self) -> AssignmentFidelity {
        let (og, on) = self.overlap_errors();
        AssignmentFidelity {
            gg: (1.0 - self.eps_gg) * (1.0 - og) + self.eps_gg * on,
            not_gg: (1.0 - self.eps_not) * (1.0 - on) + self.eps_not * og,
        }
    }

    /// Solves the flip rates that give the requested correct-assignment
    /// probabilities at the current threshold.
    pub fn calibrated(self, target_gg: f64, target_not: f64) -> Result<Self> {
        let (og, on) = self.overlap_errors();
        let span = 1.0 - og - on;
        if span <= 0.0 {
            return Err(invalid("threshold", "Gaussian overlap leaves no room for calibration"));
        }
        let m = Self { eps_gg: (1.0 - og - target_gg) / span, eps_not: (1.0 - on - target_not) / span, ..self };
        m.validate()?;
        Ok(m)
    }

    /// Probability that a shot in each class lands in the kept (not-`gg`) window.
    pub fn keep_probabilities(&self) -> (f64, f64) {
        let f = self.assignment_fidelity();
        (1.0 - f.gg, f.not_gg)
    }

    pub fn is_assigned_gg(&self, outcome: f64) -> bool {
        outcome >= self.threshold
    }

    fn draw(&self, rng: &mut impl Rng, gg: bool) -> f64 {
        let flipped = rng.random::<f64>() < if gg { self.eps_gg } else { self.eps_not };
        let (mu, sigma) = if gg != flipped { (self.mu_gg, self.sigma_gg()) } else { (self.mu_not, self.sigma_not()) };
        Normal::new(mu, sigma).expect("validated width").sample(rng)
    }
}

fn populations(rho: &DensityMatrix) -> Result<[f64; 4]> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    let m = rho.matrix();
    let mut p = [0.0; 4];
    for (k, v) in p.iter_mut().enumerate() {
        *v = m[(k, k)].re.max(0.0);
    }
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        return Err(invalid("rho", "state has no population"));
    }
    p.iter_mut().for_each(|x| *x /= total);
    Ok(p)
}

/// Draws `shots` outcomes from a two-qubit state.
pub fn sample_outcomes(rho: &DensityMatrix, model: &ReadoutModel, shots: usize, seed: u64) -> Result<Vec<f64>> {
    sample_outcomes_with(rho, model, shots, &mut rng_stream(seed, 0))
}

pub fn sample_outcomes_with(rho: &DensityMatrix, model: &ReadoutModel, shots: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if shots == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    model.validate()?;
    let p = populations(rho)?;
    Ok((0..shots)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut label = 3;
            for (k, &pk) in p.iter().enumerate() {
                acc += pk;
                if u < acc {
                    label = k;
                    break;
                }
            }
            model.draw(rng, label == 0)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` edges, or none for an empty histogram.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Bins anchored at 0: bin `k` covers `[k·w, (k+1)·w)`.
pub fn histogram(samples: &[f64], bin_width: f64) -> Result<Histogram> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(invalid("bin_width", "must be positive and finite"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(invalid("samples", "must be finite"));
    }
    if samples.is_empty() {
        return Ok(Histogram { edges: Vec::new(), counts: Vec::new(), total: 0 });
    }
    let bin = |x: f64| (x / bin_width).floor() as i64;
    let lo = samples.iter().map(|&x| bin(x)).min().unwrap();
    let hi = samples.iter().map(|&x| bin(x)).max().unwrap();
    let mut counts = alloc::vec![0u64; (hi - lo + 1) as usize];
    for &x in samples {
        counts[(bin(x) - lo) as usize] += 1;
    }
    let edges = (lo..=hi + 1).map(|k| k as f64 * bin_width).collect();
    Ok(Histogram { edges, counts, total: samples.len() as u64 })
}

/// Sample mean and (population) standard deviation.
pub fn moments(samples: &[f64]) -> Option<(f64, f64)> {
    if samples.is_empty() {
        return None;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

#[derive(Debug, Clone)]
pub struct Conditioned {
    pub rho: DensityMatrix,
    pub kept_fraction: f64,
    pub keep_gg: f64,
    pub keep_not: f64,
}

/// Post-selects on the parity monitor reporting not-`gg` (`I < threshold`).
///
/// Works on the full qubit-cavity state (or the bare 4×4 state); the `gg`
/// block and the rest are weighted separately and coherence between them
/// is dropped.
pub fn condition_on_m1(rho: &DensityMatrix, model: &ReadoutModel, threshold: f64) -> Result<Conditioned> {
    condition_on_m1_with_floor(rho, model, threshold, DEFAULT_KEPT_FLOOR)
}

pub fn condition_on_m1_with_floor(rho: &DensityMatrix, model: &ReadoutModel, threshold: f64, floor: f64) -> Result<Conditioned> {
    let model = model.with_threshold(threshold);
    model.validate()?;
    let d = rho.dim();
    if d % 4 != 0 || d == 0 {
        return Err(invalid("rho", "dimension must be a multiple of 4"));
    }
    let nc = d / 4;
    let (keep_gg, keep_not) = model.keep_probabilities();
    let m = rho.matrix();
    let w_gg: f64 = (0..nc).map(|i| m[(i, i)].re).sum();
    let w_not = m.trace().re - w_gg;
    let kept_fraction = keep_gg * w_gg + keep_not * w_not;
    if !(kept_fraction >= floor) || kept_fraction <= 0.0 {
        return Err(Error::ConditioningUnusable { kept_fraction, floor });
    }
    if keep_gg == keep_not {
        // uniform weighting leaves the state as it is
        return Ok(Conditioned { rho: rho.clone(), kept_fraction, keep_gg, keep_not });
    }
    let out = ComplexMatrix::from_fn(d, d, |i, j| match (i < nc, j < nc) {
        (true, true) => m[(i, j)] * (keep_gg / kept_fraction),
        (false, false) => m[(i, j)] * (keep_not / kept_fraction),
        _ => C64::new(0.0, 0.0),
    });
    Ok(Conditioned { rho: DensityMatrix::new_unchecked(out, rho.time()), kept_fraction, keep_gg, keep_not })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{basis_weights, fidelity, BasisWeights};
    use crate::hilbert::kets;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn separating() -> ReadoutModel {
        ReadoutModel::new(10.0, -10.0, 1.0, 0.0, 0.0, 0.0).unwrap()
    }

    fn reference_weights() -> BasisWeights {
        BasisWeights { gg: 0.15, ee: 0.10, phi_plus: 0.08, phi_minus: 0.67 }
    }

    #[test]
    fn cdf_reference_points() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(normal_cdf(1.959963984540054), 0.975, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_cdf(-3.0), 0.0013498980316301, epsilon = 1e-14);
        assert_eq!(normal_cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn tomography_readout_matches_reference_rates() {
        let m = ReadoutModel::tomography();
        assert_abs_diff_eq!(m.separation(), 5.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.sigma_gg() / m.sigma_not(), 0.75, epsilon = 1e-15);
        let (a, b) = m.overlap_errors();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        // 1 − 2·Q(2.75) = 0.99404
        assert_abs_diff_eq!(m.overlap_fidelity(), 0.995, epsilon = 1.5e-3);
        let f = m.assignment_fidelity();
        assert_abs_diff_eq!(f.gg, 0.96, epsilon = 1e-12);
        assert_abs_diff_eq!(f.not_gg, 0.97, epsilon = 1e-12);
        assert!(m.eps_gg > m.eps_not && m.eps_not > 0.0);
    }

    #[test]
    fn degenerate_thresholds() {
        let m = ReadoutModel::tomography();
        let high = m.with_threshold(f64::INFINITY).assignment_fidelity();
        assert_eq!((high.gg, high.not_gg), (0.0, 1.0));
        let low = m.with_threshold(f64::NEG_INFINITY).assignment_fidelity();
        assert_eq!((low.gg, low.not_gg), (1.0, 0.0));
    }

    #[test]
    fn validation() {
        assert!(ReadoutModel::new(0.0, 1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(ReadoutModel::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(ReadoutModel::new(1.0, 0.0, 1.0, f64::NAN, 0.0, 0.0).is_err());
        assert!(ReadoutModel::new(1.0, 0.0, 1.0, 0.5, 0.5, 0.0).is_err());
        assert!(ReadoutModel::new(1.0, 0.0, 1.0, 0.5, 0.0, -0.1).is_err());
        assert!(ReadoutModel::parity_monitor().validate().is_ok());
    }

    #[test]
    fn pure_gg_sample_mean() {
        let m = ReadoutModel::tomography().without_flips();
        let shots = 20_000;
        let x = sample_outcomes(&DensityMatrix::from_ket(&kets::gg()), &m, shots, 7).unwrap();
        let (mean, std) = moments(&x).unwrap();
        assert!((mean - m.mu_gg).abs() < 3.0 * m.sigma_gg() / (shots as f64).sqrt());
        assert_abs_diff_eq!(std, m.sigma_gg(), epsilon = 0.03);
    }

    #[test]
    fn odd_states_never_look_like_gg() {
        let m = ReadoutModel::tomography().without_flips();
        let x = sample_outcomes(&DensityMatrix::from_ket(&kets::phi_minus()), &m, 20_000, 3).unwrap();
        let (mean, _) = moments(&x).unwrap();
        assert!((mean - m.mu_not).abs() < 3.0 * m.sigma_not() / (20_000f64).sqrt());
        // a few overlap tails only
        let above = x.iter().filter(|&&v| m.is_assigned_gg(v)).count() as f64 / x.len() as f64;
        assert!(above < 0.01);
    }

    #[test]
    fn samples_are_reproducible() {
        let m = ReadoutModel::tomography();
        let rho = DensityMatrix::maximally_mixed(4);
        let a = sample_outcomes(&rho, &m, 1000, 11).unwrap();
        let b = sample_outcomes(&rho, &m, 1000, 11).unwrap();
        let c = sample_outcomes(&rho, &m, 1000, 12).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, c);
        assert!(sample_outcomes(&rho, &m, 0, 1).is_err());
    }

    #[test]
    fn bimodal_mixture_matches_cdf() {
        let m = ReadoutModel::tomography().without_flips();
        let mix = BasisWeights { gg: 0.5, ee: 0.5, phi_plus: 0.0, phi_minus: 0.0 }.to_density();
        let n = 200_000;
        let x = sample_outcomes(&mix, &m, n, 5).unwrap();
        let h = histogram(&x, 0.5).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), n as u64);
        let cdf = |v: f64| {
            0.5 * normal_cdf((v - m.mu_gg) / m.sigma_gg()) + 0.5 * normal_cdf((v - m.mu_not) / m.sigma_not())
        };
        for (k, &c) in h.counts.iter().enumerate() {
            let expect = n as f64 * (cdf(h.edges[k + 1]) - cdf(h.edges[k]));
            assert!((c as f64 - expect).abs() <= 4.0 * expect.sqrt().max(1.0), "bin {k}: {c} vs {expect}");
        }
        // the emptiest bin between the two peaks sits near the threshold
        let centers = h.centers();
        let valley = (0..h.counts.len())
            .filter(|&k| centers[k] > m.mu_not && centers[k] < m.mu_gg)
            .min_by_key(|&k| h.counts[k])
            .unwrap();
        assert!((centers[valley] - m.threshold).abs() < 1.0);
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&[], 0.1).unwrap();
        assert_eq!((h.total, h.counts.len(), h.edges.len()), (0, 0, 0));
        let h = histogram(&[0.05, 0.15, 0.16, -0.01], 0.1).unwrap();
        assert_eq!(h.counts, [1, 1, 2]);
        assert_abs_diff_eq!(h.edges[0], -0.1, epsilon = 1e-15);
        assert!(histogram(&[1.0], 0.0).is_err());
        assert!(histogram(&[f64::NAN], 1.0).is_err());
    }

    #[test]
    fn single_gaussian_histogram_matches_cdf() {
        let m = ReadoutModel::parity_monitor();
        let n = 1_000_000;
        let x = sample_outcomes(&DensityMatrix::from_ket(&kets::gg()), &m, n, 99).unwrap();
        let h = histogram(&x, 0.25).unwrap();
        for (k, &c) in h.counts.iter().enumerate() {
            let expect = n as f64 * (normal_cdf(h.edges[k + 1] - 1.0) - normal_cdf(h.edges[k] - 1.0));
            assert!((c as f64 - expect).abs() <= 4.0 * expect.sqrt().max(1.0));
        }
    }

    #[test]
    fn width_ratio_recovered_from_samples() {
        let m = ReadoutModel::tomography().without_flips();
        let gg = sample_outcomes(&DensityMatrix::from_ket(&kets::gg()), &m, 100_000, 1).unwrap();
        let not = sample_outcomes(&DensityMatrix::from_ket(&kets::ee()), &m, 100_000, 2).unwrap();
        let ratio = moments(&gg).unwrap().1 / moments(&not).unwrap().1;
        assert_abs_diff_eq!(ratio, 0.75, epsilon = 0.01);
    }

    #[test]
    fn conditioning_on_reference_weights() {
        let rho = reference_weights().to_density();
        let c = condition_on_m1(&rho, &separating(), 0.0).unwrap();
        assert_abs_diff_eq!(fidelity(&c.rho), 0.67 / 0.85, epsilon = 1e-9);
        assert_abs_diff_eq!(fidelity(&c.rho), 0.79, epsilon = 5e-3);
        assert_abs_diff_eq!(c.kept_fraction, 0.85, epsilon = 1e-12);
    }

    #[test]
    fn conditioning_pure_odd_state() {
        let rho = DensityMatrix::from_ket(&kets::phi_minus());
        let m = ReadoutModel::parity_monitor();
        let c = condition_on_m1(&rho, &m, -2.2).unwrap();
        assert!(c.rho.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        assert_abs_diff_eq!(c.kept_fraction, normal_cdf(-1.2), epsilon = 1e-15);
    }

    #[test]
    fn conditioning_keep_everything() {
        let rho = reference_weights().to_density();
        let c = condition_on_m1(&rho, &ReadoutModel::parity_monitor(), f64::INFINITY).unwrap();
        assert_abs_diff_eq!(c.kept_fraction, 1.0, epsilon = 1e-12);
        assert_eq!(fidelity(&c.rho), fidelity(&rho));
    }

    #[test]
    fn conditioning_floor() {
        let rho = reference_weights().to_density();
        let err = condition_on_m1(&rho, &ReadoutModel::parity_monitor(), f64::NEG_INFINITY).unwrap_err();
        assert!(matches!(err, Error::ConditioningUnusable { .. }));
        assert!(condition_on_m1_with_floor(&rho, &ReadoutModel::parity_monitor(), -2.2, 0.5).is_err());
    }

    #[test]
    fn parity_monitor_against_tail_reweighting() {
        let w = reference_weights();
        let rho = w.to_density();
        let c = condition_on_m1(&rho, &ReadoutModel::parity_monitor(), -2.2).unwrap();
        // analytic oracle: Gaussian tails Φ(−3.2) and Φ(−1.2) reweight the two classes
        let (pg, pn) = (normal_cdf(-3.2), normal_cdf(-1.2));
        let expect = pn * w.phi_minus / (pg * w.gg + pn * (1.0 - w.gg));
        assert_abs_diff_eq!(fidelity(&c.rho), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(c.kept_fraction, pg * w.gg + pn * (1.0 - w.gg), epsilon = 1e-12);
    }

    #[test]
    fn conditioning_works_on_full_state() {
        let space = crate::hilbert::HilbertSpace::new(3).unwrap();
        let mut m = ComplexMatrix::zeros(12, 12);
        let psi = space.product_ket(&kets::phi_minus(), 1);
        m += &ComplexMatrix::projector(&psi).scale_real(0.6);
        m += &ComplexMatrix::projector(&space.basis_ket(0, 0, 0)).scale_real(0.4);
        let rho = DensityMatrix::new_unchecked(m, 0.0);
        let c = condition_on_m1(&rho, &separating(), 0.0).unwrap();
        assert_abs_diff_eq!(fidelity(&c.rho), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.kept_fraction, 0.6, epsilon = 1e-12);
    }

    fn weights_state(raw: [f64; 4], coherence: f64) -> DensityMatrix {
        let total: f64 = raw.iter().sum();
        let w = BasisWeights { gg: raw[0] / total, ee: raw[1] / total, phi_plus: raw[2] / total, phi_minus: raw[3] / total };
        let mut m = w.to_density().into_matrix();
        // some gg/ee coherence, bounded so the state stays positive
        let c = coherence * (w.gg * w.ee).sqrt();
        m[(0, 3)] += C64::new(c, 0.0);
        m[(3, 0)] += C64::new(c, 0.0);
        DensityMatrix::new_unchecked(m, 0.0)
    }

    proptest! {
        #[test]
        fn conditioned_state_is_valid(raw in proptest::array::uniform4(0.01f64..1.0), coh in -1.0f64..1.0, th in -4.0f64..4.0) {
            let rho = weights_state(raw, coh);
            let c = condition_on_m1(&rho, &ReadoutModel::parity_monitor(), th).unwrap();
            prop_assert!((c.rho.trace().re - 1.0).abs() < 1e-12);
            prop_assert!(c.rho.min_eigenvalue().unwrap() >= -1e-9);
            prop_assert!(c.rho.matrix().is_hermitian(1e-14));
        }

        #[test]
        fn stricter_threshold_never_adds_gg(raw in proptest::array::uniform4(0.01f64..1.0), th in -2.5f64..4.0, dt in 0.0f64..2.0) {
            let rho = weights_state(raw, 0.0);
            let m = ReadoutModel::parity_monitor();
            let loose = basis_weights(&condition_on_m1(&rho, &m, th).unwrap().rho).unwrap();
            let strict = basis_weights(&condition_on_m1(&rho, &m, th - dt).unwrap().rho).unwrap();
            prop_assert!(strict.gg <= loose.gg + 1e-12);
        }

        #[test]
        fn separating_threshold_reweights_exactly(raw in proptest::array::uniform4(0.01f64..1.0)) {
            let rho = weights_state(raw, 0.0);
            let w = basis_weights(&rho).unwrap();
            let c = condition_on_m1(&rho, &separating(), 0.0).unwrap();
            let expect = w.phi_minus / (w.phi_minus + w.ee + w.phi_plus);
            prop_assert!((fidelity(&c.rho) - expect).abs() <= 1e-9);
        }
    }
}

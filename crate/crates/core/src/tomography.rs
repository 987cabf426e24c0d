//! Joint-readout state tomography: 4×4 pre-rotation pairs, each followed
//! by a measurement of `|gg⟩⟨gg|`, inverted back to Pauli averages.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // float math is inherent in core only on newer toolchains
use num_traits::Float;
use rand_distr::{Binomial, Distribution};

use crate::analysis::PauliVector;
use crate::error::{invalid, Error, Result};
use crate::hilbert::{kron, qubit, ComplexMatrix};
use crate::linalg::RealMatrix;
use crate::readout::{rng_stream, ReadoutModel};
use crate::solver::DensityMatrix;

/// `exp(−iθσ/2)` for a single-qubit Pauli `σ`.
pub fn rotation(sigma: &ComplexMatrix, theta: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    &qubit::identity().scale_real(c) + &sigma.scale(C64::new(0.0, -s))
}

#[derive(Debug, Clone)]
pub struct RotationSet {
    pub unitaries: [ComplexMatrix; 4],
    pub labels: [&'static str; 4],
}

impl RotationSet {
    /// `{Id, R_x(π), R_x(π/2), R_y(π/2)}`.
    pub fn standard() -> Self {
        use core::f64::consts::{FRAC_PI_2, PI};
        Self {
            unitaries: [
                qubit::identity(),
                rotation(&qubit::sigma_x(), PI),
                rotation(&qubit::sigma_x(), FRAC_PI_2),
                rotation(&qubit::sigma_y(), FRAC_PI_2),
            ],
            labels: ["Id", "Rx(pi)", "Rx(pi/2)", "Ry(pi/2)"],
        }
    }

    /// Two-qubit rotation for setting `r = 4i + j`.
    pub fn pair(&self, r: usize) -> ComplexMatrix {
        kron(&self.unitaries[r / 4], &self.unitaries[r % 4])
    }

    pub fn pair_label(&self, r: usize) -> String {
        format!("{}/{}", self.labels[r / 4], self.labels[r % 4])
    }
}

impl Default for RotationSet {
    fn default() -> Self {
        Self::standard()
    }
}

/// Maps a Pauli vector to the 16 expected `⟨P_gg⟩` outcomes.
///
/// Row `4i + j` holds `¼ Tr[P_k U† P_gg U]` for `U = U_i ⊗ U_j`.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub matrix: RealMatrix,
    pub condition_number: f64,
    /// Least-squares map from `y − ¼` to the 15 non-identity averages,
    /// which pins `⟨II⟩ = 1`.
    constrained: Vec<[f64; 16]>,
}

pub fn build_design_matrix(set: &RotationSet) -> Result<DesignMatrix> {
    let rows: Vec<Vec<f64>> = (0..16)
        .map(|r| {
            let u = set.pair(r);
            (0..16)
                .map(|k| {
                    let v = u.matmul(&PauliVector::operator(k)).matmul(&u.adjoint());
                    0.25 * v[(0, 0)].re
                })
                .collect()
        })
        .collect();
    let matrix = RealMatrix::from_rows(&rows)?;
    matrix.inverse()?;
    let condition_number = matrix.condition_number()?;
    if !condition_number.is_finite() {
        return Err(Error::SingularMatrix);
    }

    // normal equations on the 15 columns k ≥ 1
    let mut ata = RealMatrix::zeros(15);
    for a in 0..15 {
        for b in 0..15 {
            ata.set(a, b, (0..16).map(|r| rows[r][a + 1] * rows[r][b + 1]).sum());
        }
    }
    let inv = ata.inverse()?;
    let constrained = (0..15)
        .map(|a| {
            let mut out = [0.0; 16];
            for (r, o) in out.iter_mut().enumerate() {
                *o = (0..15).map(|b| inv.get(a, b) * rows[r][b + 1]).sum();
            }
            out
        })
        .collect();
    Ok(DesignMatrix { matrix, condition_number, constrained })
}

/// Exact expectation values or a finite number of repetitions per setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Exact,
    PerSetting(u64),
}

fn gg_population(rho: &ComplexMatrix, u: &ComplexMatrix) -> f64 {
    // ⟨gg| U ρ U† |gg⟩ needs only the first row of U
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..4 {
        for q in 0..4 {
            acc += u[(0, p)] * rho[(p, q)] * u[(0, q)].conj();
        }
    }
    acc.re.clamp(0.0, 1.0)
}

/// Outcome of each of the 16 settings: `P(assigned gg)`, exact or estimated.
///
/// Setting `r` draws from stream `r` of `seed`.
pub fn simulate_tomography(
    rho: &DensityMatrix,
    set: &RotationSet,
    readout: Option<&ReadoutModel>,
    shots: Shots,
    seed: u64,
) -> Result<[f64; 16]> {
    simulate_on_streams(rho, set, readout, shots, seed, 0)
}

fn simulate_on_streams(
    rho: &DensityMatrix,
    set: &RotationSet,
    readout: Option<&ReadoutModel>,
    shots: Shots,
    seed: u64,
    stream_base: u64,
) -> Result<[f64; 16]> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    let assign = match readout {
        Some(m) => {
            m.validate()?;
            let f = m.assignment_fidelity();
            (f.gg, 1.0 - f.not_gg)
        }
        None => (1.0, 0.0),
    };
    let mut out = [0.0; 16];
    for (r, o) in out.iter_mut().enumerate() {
        let p = gg_population(rho.matrix(), &set.pair(r));
        let p = (p * assign.0 + (1.0 - p) * assign.1).clamp(0.0, 1.0);
        *o = match shots {
            Shots::Exact => p,
            Shots::PerSetting(0) => return Err(invalid("shots", "must be at least 1")),
            Shots::PerSetting(n) => {
                let mut rng = rng_stream(seed, stream_base + r as u64);
                let k = Binomial::new(n, p).map_err(|e| invalid("shots", format!("{e}")))?.sample(&mut rng);
                k as f64 / n as f64
            }
        };
    }
    Ok(out)
}

/// Linear inversion with `⟨II⟩` fixed to 1 and the other 15 averages
/// fitted by least squares; exact on noiseless data.
pub fn reconstruct(outcomes: &[f64; 16], design: &DesignMatrix) -> PauliVector {
    let mut p = [0.0; 16];
    p[0] = 1.0;
    for (a, row) in design.constrained.iter().enumerate() {
        p[a + 1] = row.iter().zip(outcomes).map(|(w, y)| w * (y - 0.25)).sum();
    }
    PauliVector(p)
}

/// Plain `D⁻¹ y`, with `⟨II⟩` left free.
pub fn reconstruct_unconstrained(outcomes: &[f64; 16], design: &DesignMatrix) -> Result<PauliVector> {
    let v = design.matrix.inverse()?.mul_vec(outcomes);
    let mut p = [0.0; 16];
    p.copy_from_slice(&v);
    Ok(PauliVector(p))
}

/// Binomial standard error of each reconstructed average at `n` shots per setting.
pub fn pauli_standard_errors(
    rho: &DensityMatrix,
    set: &RotationSet,
    design: &DesignMatrix,
    readout: Option<&ReadoutModel>,
    shots_per_setting: u64,
) -> Result<[f64; 16]> {
    if shots_per_setting == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    let y = simulate_tomography(rho, set, readout, Shots::Exact, 0)?;
    let mut se = [0.0; 16];
    for (a, row) in design.constrained.iter().enumerate() {
        let var: f64 = row.iter().zip(&y).map(|(w, p)| w * w * p * (1.0 - p)).sum();
        se[a + 1] = (var / shots_per_setting as f64).sqrt();
    }
    Ok(se)
}

/// The six single-qubit stabilizer states, labelled `+X, −X, +Y, −Y, +Z, −Z`.
pub fn single_qubit_cliffords() -> [(&'static str, [C64; 2]); 6] {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    [
        ("+X", [r(h), r(h)]),
        ("-X", [r(h), r(-h)]),
        ("+Y", [r(h), i(h)]),
        ("-Y", [r(h), i(-h)]),
        ("+Z", [r(1.0), r(0.0)]),
        ("-Z", [r(0.0), r(1.0)]),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordPoint {
    pub label: String,
    pub fidelity: f64,
}

/// Runs the pipeline on all 36 product stabilizer states. State `c` uses
/// streams `16c..16c+16` of `seed`.
pub fn clifford_suite(readout: Option<&ReadoutModel>, shots: Shots, seed: u64) -> Result<Vec<CliffordPoint>> {
    let set = RotationSet::standard();
    let design = build_design_matrix(&set)?;
    let states = single_qubit_cliffords();
    let mut out = Vec::with_capacity(36);
    for (ia, (la, a)) in states.iter().enumerate() {
        for (ib, (lb, b)) in states.iter().enumerate() {
            let psi = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
            let rho = DensityMatrix::from_ket(&psi);
            let c = (6 * ia + ib) as u64;
            let y = simulate_on_streams(&rho, &set, readout, shots, seed, 16 * c)?;
            let rec = reconstruct(&y, &design).to_density();
            let v = rec.matrix().apply(&psi);
            let fidelity = psi.iter().zip(&v).map(|(x, y)| x.conj() * y).sum::<C64>().re;
            out.push(CliffordPoint { label: format!("{la},{lb}"), fidelity });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::pauli_averages;
    use crate::hilbert::kets;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn random_state(entries: &[f64]) -> DensityMatrix {
        let g = ComplexMatrix::from_fn(4, 4, |i, j| {
            C64::new(entries[(i * 4 + j) % entries.len()], entries[(3 * i + 5 * j + 2) % entries.len()])
        });
        let m = g.matmul(&g.adjoint());
        let tr = m.trace().re;
        DensityMatrix::new_unchecked(m.scale_real(1.0 / tr), 0.0)
    }

    fn row(design: &DesignMatrix, r: usize) -> Vec<f64> {
        design.matrix.row(r).to_vec()
    }

    fn pauli_row(terms: &[(&str, f64)]) -> Vec<f64> {
        let mut v = alloc::vec![0.0; 16];
        for (name, c) in terms {
            let ch: Vec<char> = name.chars().collect();
            let idx = |c: char| ['I', 'X', 'Y', 'Z'].iter().position(|&p| p == c).unwrap();
            v[4 * idx(ch[0]) + idx(ch[1])] = *c;
        }
        v
    }

    #[test]
    fn rotations_are_unitary() {
        let set = RotationSet::standard();
        for u in &set.unitaries {
            assert!(u.matmul(&u.adjoint()).max_abs_diff(&qubit::identity()) < 1e-12);
        }
        let rx = &set.unitaries[1];
        let sq = rx.matmul(rx);
        assert!(sq.max_abs_diff(&qubit::identity().scale_real(-1.0)) < 1e-12);
        // the same projector comes back after two π rotations
        let p = ComplexMatrix::projector(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(sq.matmul(&p).matmul(&sq.adjoint()).max_abs_diff(&p) < 1e-12);
    }

    #[test]
    fn design_rows() {
        let d = build_design_matrix(&RotationSet::standard()).unwrap();
        let expect = pauli_row(&[("II", 0.25), ("ZI", 0.25), ("IZ", 0.25), ("ZZ", 0.25)]);
        for (a, b) in row(&d, 0).iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        let expect = pauli_row(&[("II", 0.25), ("ZI", -0.25), ("IZ", 0.25), ("ZZ", -0.25)]);
        for (a, b) in row(&d, 4).iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn design_conditioning() {
        let d = build_design_matrix(&RotationSet::standard()).unwrap();
        assert!(d.condition_number.is_finite());
        assert!(d.condition_number <= 20.0, "condition number {}", d.condition_number);
    }

    #[test]
    fn degenerate_set_is_singular() {
        let mut set = RotationSet::standard();
        set.unitaries[3] = set.unitaries[0].clone();
        assert!(matches!(build_design_matrix(&set), Err(Error::SingularMatrix)));
    }

    #[test]
    fn exact_outcome_examples() {
        let set = RotationSet::standard();
        let y = simulate_tomography(&DensityMatrix::from_ket(&kets::gg()), &set, None, Shots::Exact, 0).unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-15);
        let y = simulate_tomography(&DensityMatrix::from_ket(&kets::phi_minus()), &set, None, Shots::Exact, 0).unwrap();
        assert_abs_diff_eq!(y[0], 0.0, epsilon = 1e-15);
        // Rx(π/2) on both qubits of the singlet
        assert_abs_diff_eq!(y[10], 0.0, epsilon = 1e-15);
        let y = simulate_tomography(&DensityMatrix::from_ket(&kets::phi_plus()), &set, None, Shots::Exact, 0).unwrap();
        assert_abs_diff_eq!(y[10], 0.5, epsilon = 1e-15);
        assert!(simulate_tomography(&DensityMatrix::maximally_mixed(8), &set, None, Shots::Exact, 0).is_err());
        assert!(simulate_tomography(&DensityMatrix::maximally_mixed(4), &set, None, Shots::PerSetting(0), 0).is_err());
    }

    #[test]
    fn reconstruct_examples() {
        let set = RotationSet::standard();
        let d = build_design_matrix(&set).unwrap();
        let y = simulate_tomography(&DensityMatrix::from_ket(&kets::gg()), &set, None, Shots::Exact, 0).unwrap();
        let p = reconstruct(&y, &d);
        for k in 0..16 {
            let expect = if [0, 3, 12, 15].contains(&k) { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(p.0[k], expect, epsilon = 1e-12);
        }
        let y = simulate_tomography(&DensityMatrix::from_ket(&kets::phi_minus()), &set, None, Shots::Exact, 0).unwrap();
        let p = reconstruct(&y, &d);
        assert_abs_diff_eq!(p.get('X', 'X'), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.get('Y', 'Y'), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.get('Z', 'Z'), -1.0, epsilon = 1e-12);
        let q = reconstruct_unconstrained(&y, &d).unwrap();
        assert!(q.0.iter().zip(&p.0).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn fifty_random_round_trips() {
        let set = RotationSet::standard();
        let d = build_design_matrix(&set).unwrap();
        let mut worst = 0.0f64;
        for s in 0..50 {
            let e: Vec<f64> = (0..23).map(|k| ((k * 31 + s * 17) as f64 * 0.37).sin()).collect();
            let rho = random_state(&e);
            let y = simulate_tomography(&rho, &set, None, Shots::Exact, 0).unwrap();
            let rec = reconstruct(&y, &d);
            let truth = pauli_averages(&rho).unwrap();
            worst = rec.0.iter().zip(&truth.0).fold(worst, |m, (a, b)| m.max((a - b).abs()));
        }
        assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn ideal_clifford_suite() {
        let pts = clifford_suite(None, Shots::Exact, 0).unwrap();
        assert_eq!(pts.len(), 36);
        for p in &pts {
            assert_abs_diff_eq!(p.fidelity, 1.0, epsilon = 1e-10);
        }
        assert_eq!(pts[0].label, "+X,+X");
        assert_eq!(pts[35].label, "-Z,-Z");
    }

    #[test]
    fn clifford_suite_with_assignment_errors() {
        let m = ReadoutModel::tomography();
        let exact = clifford_suite(Some(&m), Shots::Exact, 0).unwrap();
        let avg = exact.iter().map(|p| p.fidelity).sum::<f64>() / 36.0;
        assert!(avg < 0.99 && avg > 0.85, "{avg}");
        let sampled = clifford_suite(Some(&m), Shots::PerSetting(20_000), 4).unwrap();
        let avg_s = sampled.iter().map(|p| p.fidelity).sum::<f64>() / 36.0;
        assert_abs_diff_eq!(avg_s, avg, epsilon = 0.01);
    }

    #[test]
    fn shot_noise_shrinks_at_monte_carlo_rate() {
        let set = RotationSet::standard();
        let d = build_design_matrix(&set).unwrap();
        let rho = random_state(&[0.3, -0.7, 0.1, 0.9, -0.2, 0.5, 0.4]);
        let truth = reconstruct(&simulate_tomography(&rho, &set, None, Shots::Exact, 0).unwrap(), &d);
        let rms = |n: u64| {
            let mut acc = 0.0;
            let reps = 40;
            for s in 0..reps {
                let rec = reconstruct(&simulate_tomography(&rho, &set, None, Shots::PerSetting(n), s).unwrap(), &d);
                acc += rec.0.iter().zip(&truth.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            }
            (acc / reps as f64).sqrt()
        };
        let ratio = rms(1_000) / rms(100_000);
        // √100 = 10
        assert!(ratio > 7.0 && ratio < 14.0, "{ratio}");
    }

    #[test]
    fn shot_mode_is_seeded() {
        let set = RotationSet::standard();
        let rho = DensityMatrix::maximally_mixed(4);
        let a = simulate_tomography(&rho, &set, None, Shots::PerSetting(500), 9).unwrap();
        let b = simulate_tomography(&rho, &set, None, Shots::PerSetting(500), 9).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn round_trip_and_identity(entries in proptest::collection::vec(-1.0f64..1.0, 16..24), seed in 0u64..1000) {
            let set = RotationSet::standard();
            let d = build_design_matrix(&set).unwrap();
            let rho = random_state(&entries);
            let y = simulate_tomography(&rho, &set, None, Shots::Exact, 0).unwrap();
            let rec = reconstruct(&y, &d);
            let truth = pauli_averages(&rho).unwrap();
            for (a, b) in rec.0.iter().zip(&truth.0) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
            let noisy = simulate_tomography(&rho, &set, Some(&ReadoutModel::tomography()), Shots::PerSetting(100), seed).unwrap();
            prop_assert_eq!(reconstruct(&noisy, &d).0[0], 1.0);
        }
    }
}

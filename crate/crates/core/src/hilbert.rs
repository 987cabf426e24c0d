//! Dense complex operator algebra on the composite space
//! qubit A ⊗ qubit B ⊗ cavity (Fock levels `0..N_c`).
//!
//! Basis index of `|i_A, i_B, n⟩` is `(i_A * 2 + i_B) * N_c + n`, with
//! `|g⟩ = 0` and `|e⟩ = 1` on each qubit. `Z|g⟩ = +|g⟩`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // float math is inherent in core only on newer toolchains
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::solver::DensityMatrix;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries; fails unless `rows * cols == data.len()`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Convenience constructor from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// Projector `|ψ⟩⟨ψ|`.
    pub fn projector(psi: &[C64]) -> Self {
        Self::outer(psi, psi)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn try_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: rhs.rows });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix product; panics on incompatible shapes. Use [`Self::try_matmul`]
    /// when the shapes come from user input.
    pub fn matmul(&self, rhs: &Self) -> Self {
        self.try_matmul(rhs).expect("incompatible matrix shapes")
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "vector length must match column count");
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `max_ij |M_ij - conj(M_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * br, a.cols * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Truncated cavity lowering operator, `a|n⟩ = √n |n-1⟩`.
pub fn annihilation(levels: usize) -> Result<ComplexMatrix> {
    if levels < 2 {
        return Err(invalid("cavity_levels", "need at least 2 Fock levels"));
    }
    let mut a = ComplexMatrix::zeros(levels, levels);
    for n in 1..levels {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

pub fn number_operator(levels: usize) -> Result<ComplexMatrix> {
    let a = annihilation(levels)?;
    Ok(a.adjoint().matmul(&a))
}

/// Single-qubit operators in the `{|g⟩, |e⟩}` basis.
pub mod qubit {
    use super::*;

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    /// `σ_y` with `σ_x σ_y = i σ_z`.
    pub fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_vec(2, 2, vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]).unwrap()
    }

    /// `σ_z = |g⟩⟨g| - |e⟩⟨e|`.
    pub fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    /// Raising operator `|e⟩⟨g|`.
    pub fn sigma_plus() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0]).unwrap()
    }

    /// Lowering operator `|g⟩⟨e|`.
    pub fn sigma_minus() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap()
    }

    /// Pauli matrix by index: 0 = I, 1 = X, 2 = Y, 3 = Z.
    pub fn pauli(index: usize) -> ComplexMatrix {
        match index {
            0 => identity(),
            1 => sigma_x(),
            2 => sigma_y(),
            3 => sigma_z(),
            _ => panic!("Pauli index out of range: {index}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subsystem {
    A,
    B,
    Cavity,
}

/// Qubit A ⊗ qubit B ⊗ cavity with a fixed Fock truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    cavity_levels: usize,
}

impl HilbertSpace {
    pub const QUBITS: usize = 2;

    pub fn new(cavity_levels: usize) -> Result<Self> {
        if cavity_levels < 2 {
            return Err(invalid("cavity_levels", "need at least 2 Fock levels"));
        }
        Ok(Self { cavity_levels })
    }

    #[inline]
    pub fn cavity_levels(&self) -> usize {
        self.cavity_levels
    }

    #[inline]
    pub fn dim(&self) -> usize {
        4 * self.cavity_levels
    }

    pub fn subsystem_dim(&self, which: Subsystem) -> usize {
        match which {
            Subsystem::A | Subsystem::B => 2,
            Subsystem::Cavity => self.cavity_levels,
        }
    }

    /// Basis index of `|a, b, n⟩` (qubit labels 0 = g, 1 = e).
    #[inline]
    pub fn index(&self, a: usize, b: usize, n: usize) -> usize {
        debug_assert!(a < 2 && b < 2 && n < self.cavity_levels);
        (a * 2 + b) * self.cavity_levels + n
    }

    /// Computational basis ket.
    pub fn basis_ket(&self, a: usize, b: usize, n: usize) -> Vec<C64> {
        let mut v = vec![ZERO; self.dim()];
        v[self.index(a, b, n)] = ONE;
        v
    }

    /// `|q⟩ ⊗ |n⟩` for a two-qubit ket `q` in the order `gg, ge, eg, ee`.
    pub fn product_ket(&self, qubits: &[C64; 4], n: usize) -> Vec<C64> {
        let mut v = vec![ZERO; self.dim()];
        for (q, &amp) in qubits.iter().enumerate() {
            v[q * self.cavity_levels + n] = amp;
        }
        v
    }

    /// Lifts a subsystem operator to the full space, `I ⊗ … ⊗ op ⊗ … ⊗ I`.
    pub fn embed(&self, op: &ComplexMatrix, which: Subsystem) -> Result<ComplexMatrix> {
        let d = self.subsystem_dim(which);
        if op.rows() != d || op.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: op.rows().max(op.cols()) });
        }
        let i2 = qubit::identity();
        let ic = ComplexMatrix::identity(self.cavity_levels);
        Ok(match which {
            Subsystem::A => kron(&kron(op, &i2), &ic),
            Subsystem::B => kron(&kron(&i2, op), &ic),
            Subsystem::Cavity => kron(&ComplexMatrix::identity(4), op),
        })
    }

    /// Lifts a two-qubit (4×4) operator to the full space, `op ⊗ I_c`.
    pub fn embed_qubits(&self, op: &ComplexMatrix) -> Result<ComplexMatrix> {
        if op.rows() != 4 || op.cols() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: op.rows().max(op.cols()) });
        }
        Ok(kron(op, &ComplexMatrix::identity(self.cavity_levels)))
    }
}

/// `Tr(ρ O)`.
pub fn expectation(rho: &DensityMatrix, op: &ComplexMatrix) -> Result<C64> {
    trace_product(rho.matrix(), op)
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    if a.cols() != b.rows() || a.rows() != b.cols() {
        return Err(Error::DimensionMismatch { expected: a.cols(), found: b.rows() });
    }
    let mut acc = ZERO;
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    Ok(acc)
}

/// Traces out the cavity, returning the 4×4 two-qubit state.
pub fn partial_trace_cavity(rho: &DensityMatrix, space: &HilbertSpace) -> Result<DensityMatrix> {
    let m = rho.matrix();
    if m.rows() != space.dim() || !m.is_square() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: m.rows() });
    }
    let nc = space.cavity_levels();
    let reduced = ComplexMatrix::from_fn(4, 4, |p, q| (0..nc).map(|n| m[(p * nc + n, q * nc + n)]).sum());
    Ok(DensityMatrix::new_unchecked(reduced, rho.time()))
}

/// Two-qubit kets in the `gg, ge, eg, ee` ordering.
pub mod kets {
    use super::*;

    const H: f64 = core::f64::consts::FRAC_1_SQRT_2;

    pub fn gg() -> [C64; 4] {
        [ONE, ZERO, ZERO, ZERO]
    }

    pub fn ge() -> [C64; 4] {
        [ZERO, ONE, ZERO, ZERO]
    }

    pub fn eg() -> [C64; 4] {
        [ZERO, ZERO, ONE, ZERO]
    }

    pub fn ee() -> [C64; 4] {
        [ZERO, ZERO, ZERO, ONE]
    }

    /// Target state `(|ge⟩ - |eg⟩)/√2`.
    pub fn phi_minus() -> [C64; 4] {
        [ZERO, C64::new(H, 0.0), C64::new(-H, 0.0), ZERO]
    }

    /// `(|ge⟩ + |eg⟩)/√2`.
    pub fn phi_plus() -> [C64; 4] {
        [ZERO, C64::new(H, 0.0), C64::new(H, 0.0), ZERO]
    }
}

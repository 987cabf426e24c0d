//! Physical parameters, the rotating-frame Hamiltonian and the dissipators.
//!
//! Parameters are given as ordinary frequencies in MHz (ν = ω/2π) and times
//! in μs. The ×2π conversion to angular units happens once, in
//! [`Model::new`]; everything downstream works in rad/μs.
//!
//! The simulation frame rotates at the zero-photon qubit frequencies and at
//! the mean of the two cavity frequencies `ω_c^gg` and `ω_c^ee`. In that frame
//!
//! ```text
//! H(t) = (χ_A Z_A/2 + χ_B Z_B/2) a†a
//!      + 2 ε_c cos(χ̄ t) (a + a†)
//!      + Ω⁰ (X_A + cos φ₀ X_B + sin φ₀ Y_B)
//!      + Ωⁿ (e^{+i n χ̄ t} (σ+_A + e^{i φ_n} σ+_B) + h.c.)
//! ```
//!
//! with `χ̄ = (χ_A + χ_B)/2`, `Z|g⟩ = +|g⟩` and `σ+ = |e⟩⟨g|`. With this sign
//! convention the n-photon transition of each qubit sits at `-n χ_j` in the
//! rotating frame, so the re-pump tone (lab frequency `ω⁰ - n χ̄`) carries
//! `e^{+i n χ̄ t}` on `σ+`.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // float math is inherent in core only on newer toolchains
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::hilbert::{annihilation, kets, qubit, ComplexMatrix, HilbertSpace, Subsystem};
use crate::solver::DensityMatrix;

/// Lab-frame constants of the device. They drop out of the rotating-frame,
/// two-level simulation and are carried for reference only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabReference {
    pub qubit_a_ghz: f64,
    pub qubit_b_ghz: f64,
    pub cavity_gg_ghz: f64,
    pub anharmonicity_a_mhz: f64,
    pub anharmonicity_b_mhz: f64,
    pub q_in: f64,
    pub q_out: f64,
}

impl LabReference {
    pub const DEVICE: Self = Self {
        qubit_a_ghz: 5.238,
        qubit_b_ghz: 6.304,
        cavity_gg_ghz: 7.453,
        anharmonicity_a_mhz: 220.0,
        anharmonicity_b_mhz: 200.0,
        q_in: 100_000.0,
        q_out: 4_500.0,
    };
}

/// Qubit–qubit–cavity constants. Infinite `t1_*`/`tphi_*` switch the
/// corresponding channel off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub chi_a_mhz: f64,
    pub chi_b_mhz: f64,
    pub kappa_mhz: f64,
    pub t1_a_us: f64,
    pub t1_b_us: f64,
    pub tphi_a_us: f64,
    pub tphi_b_us: f64,
    pub cavity_levels: usize,
    /// Initial excited-state population of each qubit (thermal start).
    pub p_e_a: f64,
    pub p_e_b: f64,
    pub lab: LabReference,
}

impl SystemParams {
    /// The measured device: T_φ follows from the measured T₁ and Ramsey T₂.
    pub fn device() -> Self {
        Self {
            chi_a_mhz: 6.5,
            chi_b_mhz: 5.9,
            kappa_mhz: 1.7,
            t1_a_us: 16.0,
            t1_b_us: 9.0,
            tphi_a_us: tphi_from_t1_t2(16.0, 8.0).unwrap(),
            tphi_b_us: tphi_from_t1_t2(9.0, 12.0).unwrap(),
            cavity_levels: 15,
            p_e_a: 0.0,
            p_e_b: 0.0,
            lab: LabReference::DEVICE,
        }
    }

    /// Matched dispersive shifts (χ_A = χ_B = χ_B of the device) and no qubit decoherence.
    pub fn ideal() -> Self {
        Self { chi_a_mhz: 5.9, ..Self::device() }.without_decoherence()
    }

    pub fn without_decoherence(self) -> Self {
        Self {
            t1_a_us: f64::INFINITY,
            t1_b_us: f64::INFINITY,
            tphi_a_us: f64::INFINITY,
            tphi_b_us: f64::INFINITY,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_nan() || v < 0.0 {
                Err(invalid(name, "must be non-negative"))
            } else {
                Ok(())
            }
        };
        positive("chi_A", self.chi_a_mhz)?;
        positive("chi_B", self.chi_b_mhz)?;
        positive("kappa", self.kappa_mhz)?;
        if !self.kappa_mhz.is_finite() || !self.chi_a_mhz.is_finite() || !self.chi_b_mhz.is_finite() {
            return Err(invalid("kappa", "frequencies must be finite"));
        }
        for (name, t) in [
            ("T1_A", self.t1_a_us),
            ("T1_B", self.t1_b_us),
            ("Tphi_A", self.tphi_a_us),
            ("Tphi_B", self.tphi_b_us),
        ] {
            if t.is_nan() || t <= 0.0 {
                return Err(invalid(name, "must be positive (use infinity to disable)"));
            }
        }
        if self.cavity_levels < 2 {
            return Err(invalid("cavity_levels", "need at least 2 Fock levels"));
        }
        for (name, p) in [("p_e_A", self.p_e_a), ("p_e_B", self.p_e_b)] {
            if !(0.0..0.5).contains(&p) {
                return Err(invalid(name, "must lie in [0, 0.5)"));
            }
        }
        Ok(())
    }

    /// `(χ_A + χ_B)/2` in rad/μs.
    pub fn chi_bar(&self) -> f64 {
        TAU * 0.5 * (self.chi_a_mhz + self.chi_b_mhz)
    }

    /// κ in rad/μs.
    pub fn kappa(&self) -> f64 {
        TAU * self.kappa_mhz
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::device()
    }
}

/// The six-tone drive configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    /// Mean photon number the cavity tones build up for even-parity qubits.
    pub nbar: f64,
    /// Zero-photon Rabi amplitude Ω⁰ (MHz), coefficient of σ_x.
    pub omega0_mhz: f64,
    /// n-photon Rabi amplitude Ωⁿ (MHz), coefficient of `σ+ e^{iνt} + h.c.`.
    pub omegan_mhz: f64,
    /// Photon index of the re-pump tones; `None` means `round(nbar)`.
    pub n_repump: Option<u32>,
    /// Phase of Bob's n-photon tone relative to Alice's (rad).
    pub phase_n: f64,
    /// Phase of Bob's zero-photon tone relative to Alice's (rad).
    pub phase_0: f64,
}

impl DriveParams {
    /// n̄ = 3 and Ω⁰ = Ωⁿ = κ/2.
    pub fn optimum(sys: &SystemParams) -> Self {
        Self {
            nbar: 3.0,
            omega0_mhz: sys.kappa_mhz / 2.0,
            omegan_mhz: sys.kappa_mhz / 2.0,
            n_repump: None,
            phase_n: PI,
            phase_0: 0.0,
        }
    }

    pub fn off() -> Self {
        Self { nbar: 0.0, omega0_mhz: 0.0, omegan_mhz: 0.0, n_repump: None, phase_n: PI, phase_0: 0.0 }
    }

    pub fn repump_index(&self) -> u32 {
        self.n_repump.unwrap_or_else(|| self.nbar.round() as u32)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nbar >= 0.0 && self.nbar.is_finite()) {
            return Err(invalid("nbar", "must be a finite non-negative number"));
        }
        if !(self.omega0_mhz >= 0.0 && self.omega0_mhz.is_finite()) {
            return Err(invalid("omega0", "must be a finite non-negative amplitude"));
        }
        if !(self.omegan_mhz >= 0.0 && self.omegan_mhz.is_finite()) {
            return Err(invalid("omegan", "must be a finite non-negative amplitude"));
        }
        if !self.phase_n.is_finite() || !self.phase_0.is_finite() {
            return Err(invalid("phase", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseChannel {
    pub operator: ComplexMatrix,
    /// Rate multiplying `D[operator]`, in 1/μs.
    pub rate: f64,
    pub label: &'static str,
}

/// `1/T_φ = 1/T₂ − 1/(2T₁)`.
pub fn tphi_from_t1_t2(t1_us: f64, t2_us: f64) -> Result<f64> {
    if !(t1_us > 0.0 && t2_us > 0.0) {
        return Err(invalid("T1/T2", "must be positive"));
    }
    let rate = 1.0 / t2_us - 1.0 / (2.0 * t1_us);
    if rate < 0.0 {
        return Err(Error::UnphysicalCoherence { t1: t1_us, t2: t2_us });
    }
    Ok(if rate == 0.0 { f64::INFINITY } else { 1.0 / rate })
}

/// Cavity drive amplitude `ε_c = κ √n̄ / 2`, same units as `kappa`.
pub fn epsilon_from_nbar(kappa: f64, nbar: f64) -> Result<f64> {
    if nbar.is_nan() || nbar < 0.0 {
        return Err(invalid("nbar", "must be non-negative"));
    }
    Ok(kappa * nbar.sqrt() / 2.0)
}

/// Ratio of the parity-measurement rate `n̄ κ/2` to the Rabi rate Ω⁰.
pub fn zeno_parameter(drives: &DriveParams, sys: &SystemParams) -> Result<f64> {
    if drives.omega0_mhz.is_nan() || drives.omega0_mhz <= 0.0 {
        return Err(invalid("omega0", "Zeno parameter needs a non-zero Rabi amplitude"));
    }
    Ok(drives.nbar * sys.kappa_mhz / 2.0 / drives.omega0_mhz)
}

/// `|φ−⟩⟨φ−| ⊗ I_c`.
pub fn bell_projector(space: &HilbertSpace) -> ComplexMatrix {
    space.embed_qubits(&ComplexMatrix::projector(&kets::phi_minus())).unwrap()
}

/// Qubit relaxation, pure dephasing and cavity decay. Zero-rate channels are omitted.
pub fn collapse_channels(sys: &SystemParams, space: &HilbertSpace) -> Vec<CollapseChannel> {
    let mut out = Vec::with_capacity(5);
    let mut push = |operator: ComplexMatrix, rate: f64, label| {
        if rate > 0.0 {
            out.push(CollapseChannel { operator, rate, label });
        }
    };
    let a = annihilation(space.cavity_levels()).unwrap();
    push(space.embed(&a, Subsystem::Cavity).unwrap(), sys.kappa(), "cavity decay");
    let sm = qubit::sigma_minus();
    let sz = qubit::sigma_z();
    push(space.embed(&sm, Subsystem::A).unwrap(), 1.0 / sys.t1_a_us, "T1 A");
    push(space.embed(&sm, Subsystem::B).unwrap(), 1.0 / sys.t1_b_us, "T1 B");
    push(space.embed(&sz, Subsystem::A).unwrap(), 1.0 / (2.0 * sys.tphi_a_us), "Tphi A");
    push(space.embed(&sz, Subsystem::B).unwrap(), 1.0 / (2.0 * sys.tphi_b_us), "Tphi B");
    out
}

/// Everything the integrator needs: the Hamiltonian split into its static
/// part and the two time-modulated tone families, plus the dissipators.
#[derive(Debug, Clone)]
pub struct Model {
    pub space: HilbertSpace,
    pub sys: SystemParams,
    pub drives: DriveParams,
    /// Dispersive term plus the zero-photon Rabi drives.
    pub(crate) static_h: ComplexMatrix,
    /// `a + a†`.
    pub(crate) cavity_quadrature: ComplexMatrix,
    /// `σ+_A + e^{iφ_n} σ+_B`.
    pub(crate) repump: ComplexMatrix,
    pub(crate) eps_c: f64,
    pub(crate) omega_n: f64,
    pub(crate) chi_bar: f64,
    pub(crate) n_repump: u32,
    pub channels: Vec<CollapseChannel>,
}

impl Model {
    pub fn new(sys: SystemParams, drives: DriveParams) -> Result<Self> {
        sys.validate()?;
        drives.validate()?;
        let space = HilbertSpace::new(sys.cavity_levels)?;
        let a = space.embed(&annihilation(space.cavity_levels())?, Subsystem::Cavity)?;
        let ad = a.adjoint();
        let n_op = ad.matmul(&a);

        let z_a = space.embed(&qubit::sigma_z(), Subsystem::A)?;
        let z_b = space.embed(&qubit::sigma_z(), Subsystem::B)?;
        let chi_a = TAU * sys.chi_a_mhz;
        let chi_b = TAU * sys.chi_b_mhz;
        let dispersive = (&z_a.scale_real(chi_a / 2.0) + &z_b.scale_real(chi_b / 2.0)).matmul(&n_op);

        let omega0 = TAU * drives.omega0_mhz;
        let (s0, c0) = drives.phase_0.sin_cos();
        let x_a = space.embed(&qubit::sigma_x(), Subsystem::A)?;
        let bob0 = &qubit::sigma_x().scale_real(c0) + &qubit::sigma_y().scale_real(s0);
        let rabi0 = (&x_a + &space.embed(&bob0, Subsystem::B)?).scale_real(omega0);

        let sp = qubit::sigma_plus();
        let repump = &space.embed(&sp, Subsystem::A)?
            + &space.embed(&sp, Subsystem::B)?.scale(C64::from_polar(1.0, drives.phase_n));

        Ok(Self {
            space,
            static_h: &dispersive + &rabi0,
            cavity_quadrature: &a + &ad,
            repump,
            eps_c: epsilon_from_nbar(sys.kappa(), drives.nbar)?,
            omega_n: TAU * drives.omegan_mhz,
            chi_bar: sys.chi_bar(),
            n_repump: drives.repump_index(),
            channels: collapse_channels(&sys, &space),
            sys,
            drives,
        })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Period of the cavity-tone beat `2π/χ̄` (μs); `H(t)` repeats with it.
    pub fn drive_period(&self) -> f64 {
        if self.chi_bar > 0.0 {
            TAU / self.chi_bar
        } else {
            f64::INFINITY
        }
    }

    /// Coefficients `(c_x, c_+)` of the time-dependent part
    /// `c_x (a + a†) + c_+ R + conj(c_+) R†` at time `t`.
    #[inline]
    pub(crate) fn modulation(&self, t: f64) -> (f64, C64) {
        let cx = 2.0 * self.eps_c * (self.chi_bar * t).cos();
        let cp = C64::from_polar(self.omega_n, self.n_repump as f64 * self.chi_bar * t);
        (cx, cp)
    }

    pub fn hamiltonian_at(&self, t: f64) -> ComplexMatrix {
        let (cx, cp) = self.modulation(t);
        let mut h = self.static_h.clone();
        h += &self.cavity_quadrature.scale_real(cx);
        let r = self.repump.scale(cp);
        h += &r;
        h += &r.adjoint();
        h
    }

    /// Thermal qubits (populations `p_e_a`, `p_e_b`) with an empty cavity.
    pub fn initial_state(&self) -> DensityMatrix {
        let qa = [1.0 - self.sys.p_e_a, self.sys.p_e_a];
        let qb = [1.0 - self.sys.p_e_b, self.sys.p_e_b];
        let mut m = ComplexMatrix::zeros(self.dim(), self.dim());
        for a in 0..2 {
            for b in 0..2 {
                let i = self.space.index(a, b, 0);
                m[(i, i)] = C64::new(qa[a] * qb[b], 0.0);
            }
        }
        DensityMatrix::new_unchecked(m, 0.0)
    }

    pub fn bell_projector(&self) -> ComplexMatrix {
        bell_projector(&self.space)
    }
}

/// Free-standing form of [`Model::hamiltonian_at`].
pub fn hamiltonian_at(t: f64, sys: &SystemParams, drives: &DriveParams, space: &HilbertSpace) -> Result<ComplexMatrix> {
    if space.cavity_levels() != sys.cavity_levels {
        return Err(Error::DimensionMismatch { expected: sys.cavity_levels, found: space.cavity_levels() });
    }
    Ok(Model::new(*sys, *drives)?.hamiltonian_at(t))
}

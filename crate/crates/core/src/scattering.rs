//! Frequency-domain responses of the open and mirror-terminated line.
//!
//! With e^{−iωt} time dependence and the helper functions
//! R_0 = 1 − ω²/ω_0², R_J = (C_c Z_0/2)·ω·(1 − ω²/ω_J²), N = R_0 − iR_J:
//!
//! * open-line reflection r = iR_J/N and transmission t = R_0/N, so that
//!   r + 1 = t and |r|² + |t|² = 1 on the real axis;
//! * field trapped between transmon and mirror, relative to the incoming
//!   field, f = R_0/D with D = R_0 − iR_J(1 − e^{iωT});
//! * full reflection of the terminated line Γ = r − t²e^{iωT}/(1 + re^{iωT}),
//!   of unit modulus.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::convention::Convention;
use crate::error::Result;
use crate::grid;
use crate::params::CircuitParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Evaluates R_0, R_J and N for one parameter set.
#[derive(Debug, Clone, Copy)]
pub struct HelperFunctions {
    omega_0_sq: f64,
    omega_j_sq: f64,
    half_cc_z0: f64,
}

impl HelperFunctions {
    pub fn new(p: &CircuitParams) -> Self {
        let w0 = p.omega_0();
        let wj = p.omega_j();
        Self {
            omega_0_sq: w0 * w0,
            omega_j_sq: wj * wj,
            half_cc_z0: 0.5 * p.c_c() * p.z_0(),
        }
    }

    pub fn r0(&self, w: f64) -> f64 {
        1.0 - w * w / self.omega_0_sq
    }

    pub fn rj(&self, w: f64) -> f64 {
        self.half_cc_z0 * w * (1.0 - w * w / self.omega_j_sq)
    }

    pub fn n(&self, w: f64) -> Complex64 {
        Complex64::new(self.r0(w), -self.rj(w))
    }

    pub fn r0_c(&self, z: Complex64) -> Complex64 {
        1.0 - z * z / self.omega_0_sq
    }

    pub fn rj_c(&self, z: Complex64) -> Complex64 {
        self.half_cc_z0 * z * (1.0 - z * z / self.omega_j_sq)
    }

    pub fn r0_prime(&self, z: Complex64) -> Complex64 {
        -2.0 * z / self.omega_0_sq
    }

    pub fn rj_prime(&self, z: Complex64) -> Complex64 {
        self.half_cc_z0 * (1.0 - 3.0 * z * z / self.omega_j_sq)
    }

    /// Open-line reflection at real ω.
    pub fn reflection(&self, w: f64) -> Complex64 {
        I * self.rj(w) / self.n(w)
    }

    pub fn transmission(&self, w: f64) -> Complex64 {
        self.r0(w) / self.n(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResponseKind {
    ReflectionR,
    TransmissionT,
    TrappedF,
    /// Reflection of the whole mirror-terminated structure.
    MirrorReflection,
}

impl ResponseKind {
    pub fn name(self) -> &'static str {
        match self {
            ResponseKind::ReflectionR => "reflection_r",
            ResponseKind::TransmissionT => "transmission_t",
            ResponseKind::TrappedF => "trapped_f",
            ResponseKind::MirrorReflection => "mirror_reflection",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexResponse {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub kind: ResponseKind,
    pub convention: Convention,
}

impl ComplexResponse {
    fn build<F: Fn(f64) -> Complex64>(grid: &[f64], kind: ResponseKind, eval: F) -> Result<Self> {
        grid::validate(grid)?;
        Ok(Self {
            grid: grid.to_vec(),
            values: grid.iter().map(|&w| eval(w)).collect(),
            kind,
            convention: Convention::ExpMinusIwt,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Re-expresses the values in another sign convention.
    pub fn with_convention(mut self, c: Convention) -> Self {
        if c != self.convention {
            for v in &mut self.values {
                *v = v.conj();
            }
            self.convention = c;
        }
        self
    }

    /// Indices of strict local maxima of |value|.
    pub fn peak_indices(&self) -> Vec<usize> {
        let m = self.magnitudes();
        (1..m.len().saturating_sub(1))
            .filter(|&i| m[i] > m[i - 1] && m[i] >= m[i + 1])
            .collect()
    }
}

pub fn reflection_open(p: &CircuitParams, grid: &[f64]) -> Result<ComplexResponse> {
    let h = HelperFunctions::new(p);
    ComplexResponse::build(grid, ResponseKind::ReflectionR, |w| h.reflection(w))
}

pub fn transmission_open(p: &CircuitParams, grid: &[f64]) -> Result<ComplexResponse> {
    let h = HelperFunctions::new(p);
    ComplexResponse::build(grid, ResponseKind::TransmissionT, |w| h.transmission(w))
}

/// Largest violation of r + 1 = t over a grid.
pub fn identity_error(p: &CircuitParams, grid: &[f64]) -> f64 {
    let h = HelperFunctions::new(p);
    grid.iter()
        .map(|&w| (h.reflection(w) + 1.0 - h.transmission(w)).norm())
        .fold(0.0, f64::max)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        libm::sin(x) / x
    }
}

/// Trapped field f at real ω, evaluated in a form that stays finite at
/// ω = ω_0. There R_0 and D vanish together when ω_0T ∈ 2πℤ and the limit
/// is taken analytically.
pub(crate) fn trapped_at(h: &HelperFunctions, omega_0: f64, t: f64, w: f64) -> Complex64 {
    // R_0 = δ·a and D = δ·a − 2R_J e^{iωT/2} sin(ωT/2), δ = ω − ω_0
    let d = w - omega_0;
    let a = -(1.0 + w / omega_0) / omega_0;
    let half = 0.5 * omega_0 * t;
    let (s, c) = (libm::sin(half), libm::cos(half));
    let rj = h.rj(w);
    let ph = Complex64::from_polar(1.0, 0.5 * w * t);
    if d == 0.0 {
        if s.abs() < 1e-12 {
            return a / (a - rj * c * t * ph);
        }
        return Complex64::new(0.0, 0.0);
    }
    let x = 0.5 * d * t;
    let bracket = s * libm::cos(x) / d + c * 0.5 * t * sinc(x);
    a / (a - 2.0 * rj * ph * bracket)
}

pub fn trapped_field(p: &CircuitParams, grid: &[f64]) -> Result<ComplexResponse> {
    let t = p.mirror_delay()?;
    let h = HelperFunctions::new(p);
    let w0 = p.omega_0();
    ComplexResponse::build(grid, ResponseKind::TrappedF, |w| trapped_at(&h, w0, t, w))
}

pub fn mirror_reflection(p: &CircuitParams, grid: &[f64]) -> Result<ComplexResponse> {
    let t = p.mirror_delay()?;
    let h = HelperFunctions::new(p);
    ComplexResponse::build(grid, ResponseKind::MirrorReflection, |w| {
        let r = h.reflection(w);
        let tr = h.transmission(w);
        let e = Complex64::from_polar(1.0, w * t);
        r - tr * tr * e / (1.0 + r * e)
    })
}

/// Closed-form resonance estimate from the single-pole expansions.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticResonance {
    pub label: String,
    pub center: f64,
    /// Energy damping rate, equal to the FWHM of |·|².
    pub width: f64,
    /// False where the single-pole expansion is known to fail.
    pub valid: bool,
}

/// Lamb-shifted transmon and qubit lines plus cavity modes 1…n_max.
///
/// The qubit line sits at ω_0 − γ_0 sin(ω_0T)/2, the real part of the zero
/// of D obtained by expanding R_0 and R_J to first order about ω_0.
///
/// The transmon entry is flagged invalid when |sin(ω_J T/2)| < 0.1, close to
/// the Rabi condition. The low-impedance qubit entry is flagged invalid when
/// Z_0 > Z_J.
pub fn analytic_resonances(p: &CircuitParams, n_max: u32) -> Result<Vec<AnalyticResonance>> {
    let t = p.mirror_delay()?;
    let d = p.derive();
    let h = HelperFunctions::new(p);
    let mut out = Vec::new();

    let sj = libm::sin(0.5 * d.omega_j * t);
    let cj = libm::cos(0.5 * d.omega_j * t);
    out.push(AnalyticResonance {
        label: "transmon".into(),
        center: d.omega_j + 0.25 * d.gamma_j * cj / sj,
        width: d.gamma_j_mirror,
        valid: sj.abs() >= 0.1,
    });
    let s0 = libm::sin(0.5 * d.omega_0 * t);
    out.push(AnalyticResonance {
        label: "qubit".into(),
        center: d.omega_0 - 0.5 * d.gamma_0 * libm::sin(d.omega_0 * t),
        width: 2.0 * d.gamma_0 * s0 * s0,
        valid: p.z_0() <= d.z_j,
    });
    let wc = 2.0 * PI / t;
    for n in 1..=n_max {
        let w = wc * f64::from(n);
        let tn = h.transmission(w);
        out.push(AnalyticResonance {
            label: alloc::format!("cavity {n}"),
            center: w + h.r0(w) / (t * h.rj(w)),
            width: tn.norm_sqr() / t,
            valid: true,
        });
    }
    Ok(out)
}

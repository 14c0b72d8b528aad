//! Circuit parameters and the closed-form scales derived from them.
//!
//! Everything downstream works in the unit system ω_J = 1, Z_J = 1
//! (equivalently C_J = L_J = 1). [`dimensionless`] builds parameter sets
//! directly in those units from the ratios used throughout the figures,
//! and [`CircuitParams::normalized`] maps an SI set onto them.

use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Linearized transmon capacitively coupled to a transmission line.
///
/// `delay` is the round-trip time T = 2L/v to the mirror and back. `None`
/// means an open (semi-infinite, unterminated) line; every mirror-dependent
/// quantity is then reported as absent rather than computed with T = ∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    c_c: f64,
    c_j: f64,
    l_j: f64,
    z_0: f64,
    delay: Option<f64>,
}

fn positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { field, value })
    }
}

impl CircuitParams {
    pub fn new(c_c: f64, c_j: f64, l_j: f64, z_0: f64, delay: Option<f64>) -> Result<Self> {
        Ok(Self {
            c_c: positive("c_c", c_c)?,
            c_j: positive("c_j", c_j)?,
            l_j: positive("l_j", l_j)?,
            z_0: positive("z_0", z_0)?,
            delay: delay.map(|t| positive("delay", t)).transpose()?,
        })
    }

    pub fn c_c(&self) -> f64 {
        self.c_c
    }

    pub fn c_j(&self) -> f64 {
        self.c_j
    }

    pub fn l_j(&self) -> f64 {
        self.l_j
    }

    pub fn z_0(&self) -> f64 {
        self.z_0
    }

    pub fn delay(&self) -> Option<f64> {
        self.delay
    }

    pub fn has_mirror(&self) -> bool {
        self.delay.is_some()
    }

    pub(crate) fn mirror_delay(&self) -> Result<f64> {
        self.delay.ok_or(Error::MirrorRequired)
    }

    /// Same circuit terminated by a mirror at round-trip delay `delay`.
    pub fn with_delay(self, delay: f64) -> Result<Self> {
        Ok(Self {
            delay: Some(positive("delay", delay)?),
            ..self
        })
    }

    /// Same circuit on an open line.
    pub fn without_mirror(self) -> Self {
        Self {
            delay: None,
            ..self
        }
    }

    pub fn omega_j(&self) -> f64 {
        1.0 / libm::sqrt(self.l_j * self.c_j)
    }

    pub fn omega_0(&self) -> f64 {
        1.0 / libm::sqrt(self.l_j * (self.c_c + self.c_j))
    }

    pub fn z_j(&self) -> f64 {
        libm::sqrt(self.l_j / self.c_j)
    }

    /// Re-expresses the circuit in units where ω_J = 1 and Z_J = 1.
    pub fn normalized(&self) -> Self {
        let omega_j = self.omega_j();
        Self {
            c_c: self.c_c / self.c_j,
            c_j: 1.0,
            l_j: 1.0,
            z_0: self.z_0 / self.z_j(),
            delay: self.delay.map(|t| t * omega_j),
        }
    }

    pub fn derive(&self) -> DerivedScales {
        derive(self)
    }
}

/// Closed-form frequencies, impedances and rates of a [`CircuitParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScales {
    /// Bare transmon frequency 1/√(L_J C_J).
    pub omega_j: f64,
    /// Coupled (grounded-node) frequency 1/√(L_J (C_c + C_J)).
    pub omega_0: f64,
    /// Fundamental cavity frequency 2π/T; absent on an open line.
    pub omega_c: Option<f64>,
    /// Series capacitance C_c C_J/(C_c + C_J).
    pub c_sigma: f64,
    pub z_j: f64,
    /// High-impedance emission rate 2/(Z_0 C_J).
    pub gamma_j: f64,
    /// Low-impedance emission rate Z_0 C_c²/(2 L_J (C_J + C_c)²).
    pub gamma_0: f64,
    /// Emission rate in front of a mirror, away from cavity resonances.
    pub gamma_j_mirror: f64,
    /// Vacuum Rabi splitting 2/√(T C_J Z_0); absent on an open line.
    pub rabi: Option<f64>,
}

pub fn derive(p: &CircuitParams) -> DerivedScales {
    let sum = p.c_c + p.c_j;
    DerivedScales {
        omega_j: p.omega_j(),
        omega_0: p.omega_0(),
        omega_c: p.delay.map(|t| 2.0 * PI / t),
        c_sigma: p.c_c * p.c_j / sum,
        z_j: p.z_j(),
        gamma_j: 2.0 / (p.z_0 * p.c_j),
        gamma_0: p.z_0 * p.c_c * p.c_c / (2.0 * p.l_j * sum * sum),
        gamma_j_mirror: 1.0 / (p.z_0 * p.c_j),
        rabi: p.delay.map(|t| 2.0 / libm::sqrt(t * p.c_j * p.z_0)),
    }
}

impl DerivedScales {
    /// Rabi splitting written through the resonance index n, assuming
    /// T = 2πn/ω_J: 2ω_J/√(2πn Z_0/Z_J).
    pub fn rabi_at_resonance(&self, z_0: f64, n: u32) -> f64 {
        2.0 * self.omega_j / libm::sqrt(2.0 * PI * f64::from(n) * z_0 / self.z_j)
    }

    /// Low-impedance emission rate in the form Z_0 ω_0² C_c²/(2(C_c + C_J)).
    pub fn gamma_0_alt(p: &CircuitParams) -> f64 {
        let w0 = p.omega_0();
        p.z_0 * w0 * w0 * p.c_c * p.c_c / (2.0 * (p.c_c + p.c_j))
    }
}

/// Dimensionless description of a parameter point, as used to label the
/// figures: C_c/C_J, Z_0/Z_J and the mirror placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratios {
    pub cc_over_cj: f64,
    pub z0_over_zj: f64,
    /// ω_c/ω_J with T = 2πn/ω_c.
    pub omega_c_over_omega_j: Option<f64>,
    /// Cavity index used with `omega_c_over_omega_j`.
    pub n: u32,
    /// Explicit round-trip delay in units of 1/ω_J.
    pub delay: Option<f64>,
}

impl Ratios {
    /// Open line.
    pub fn new(cc_over_cj: f64, z0_over_zj: f64) -> Self {
        Self {
            cc_over_cj,
            z0_over_zj,
            omega_c_over_omega_j: None,
            n: 1,
            delay: None,
        }
    }

    pub fn cavity(self, omega_c_over_omega_j: f64, n: u32) -> Self {
        Self {
            omega_c_over_omega_j: Some(omega_c_over_omega_j),
            n,
            ..self
        }
    }

    pub fn delay(self, delay: f64) -> Self {
        Self {
            delay: Some(delay),
            ..self
        }
    }

    /// Mirror placed so that ω_0 T = 2πn (the dark-state condition).
    pub fn dark_state(cc_over_cj: f64, z0_over_zj: f64, n: u32) -> Self {
        Self::new(cc_over_cj, z0_over_zj).cavity(1.0 / libm::sqrt(1.0 + cc_over_cj), n)
    }
}

/// Converts C_c/(C_c + C_J) into C_c/C_J.
pub fn cc_fraction_to_ratio(fraction: f64) -> f64 {
    fraction / (1.0 - fraction)
}

/// Builds a concrete parameter set in units ω_J = 1, Z_J = 1.
///
/// With neither a cavity ratio nor an explicit delay the line is open. Both
/// may be given only if they agree to 1e-9 relative.
pub fn dimensionless(r: &Ratios) -> Result<CircuitParams> {
    let cc = positive("cc_over_cj", r.cc_over_cj)?;
    let z0 = positive("z0_over_zj", r.z0_over_zj)?;
    let implied = match r.omega_c_over_omega_j {
        Some(ratio) => {
            let ratio = positive("omega_c_over_omega_j", ratio)?;
            if r.n == 0 {
                return Err(Error::InvalidConfig("cavity index n must be at least 1"));
            }
            Some(2.0 * PI * f64::from(r.n) / ratio)
        }
        None => None,
    };
    let delay = match (implied, r.delay) {
        (Some(a), Some(b)) => {
            if (a - b).abs() > 1e-9 * a {
                return Err(Error::ContradictoryDelay {
                    implied: a,
                    explicit: b,
                });
            }
            Some(a)
        }
        (a, b) => a.or(b),
    };
    CircuitParams::new(cc, 1.0, 1.0, z0, delay)
}

//! Named parameter points for the emission figures.

use mirrorqed_core::params::{cc_fraction_to_ratio, dimensionless, Ratios};
use mirrorqed_core::{CircuitParams, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// C_c/C_J = 0.1, Z_0/Z_J = 1000, ω_c = ω_J.
    Fig4,
    /// C_c/C_J = 0.02, Z_0/Z_J = 1000, ω_c = ω_J.
    S1a,
    /// C_c/(C_c+C_J) = 0.02, Z_0/Z_J = 1000, ω_c = ω_0 (dark state).
    S1b,
    /// C_c/(C_c+C_J) = 0.3, Z_0/Z_J = 1000, ω_c = ω_0 (dark state).
    S1c,
    /// C_c/C_J = 0.3, Z_0/Z_J = 1000, ω_c = ω_J.
    S1d,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig4,
        Preset::S1a,
        Preset::S1b,
        Preset::S1c,
        Preset::S1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig4 => "fig4",
            Preset::S1a => "s1a",
            Preset::S1b => "s1b",
            Preset::S1c => "s1c",
            Preset::S1d => "s1d",
        }
    }

    pub fn ratios(self) -> Ratios {
        match self {
            Preset::Fig4 => Ratios::new(0.1, 1000.0).cavity(1.0, 1),
            Preset::S1a => Ratios::new(0.02, 1000.0).cavity(1.0, 1),
            Preset::S1b => Ratios::dark_state(cc_fraction_to_ratio(0.02), 1000.0, 1),
            Preset::S1c => Ratios::dark_state(cc_fraction_to_ratio(0.3), 1000.0, 1),
            Preset::S1d => Ratios::new(0.3, 1000.0).cavity(1.0, 1),
        }
    }

    pub fn params(self) -> Result<CircuitParams> {
        dimensionless(&self.ratios())
    }

    /// True when the mirror sits at the dark-state distance.
    pub fn dark_state(self) -> bool {
        matches!(self, Preset::S1b | Preset::S1c)
    }
}

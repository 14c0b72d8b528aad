//! Fourier sign convention.

use num_complex::Complex64;

/// Time dependence assumed for a complex frequency-domain amplitude.
///
/// Under `ExpMinusIwt` a signal is x(t) = Re[X e^{−iωt}], decaying modes sit
/// at Im ω < 0 and a round trip to the mirror multiplies by e^{+iωT}. The
/// other choice conjugates every response and every pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Convention {
    #[default]
    ExpMinusIwt,
    ExpPlusIwt,
}

impl Convention {
    /// Maps a value computed under `ExpMinusIwt` into this convention.
    pub fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Convention::ExpMinusIwt => z,
            Convention::ExpPlusIwt => z.conj(),
        }
    }

    /// Sign of Im ω on the decaying half-plane.
    pub fn decaying_sign(self) -> f64 {
        match self {
            Convention::ExpMinusIwt => -1.0,
            Convention::ExpPlusIwt => 1.0,
        }
    }
}

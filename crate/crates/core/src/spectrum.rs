//! Fourier analysis of sampled trajectories at arbitrary frequencies.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::grid::linspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
}

fn weight(window: Window, k: usize, n: usize) -> f64 {
    match window {
        Window::Rectangular => 1.0,
        Window::Hann => {
            let s = libm::sin(PI * k as f64 / (n - 1).max(1) as f64);
            s * s
        }
    }
}

/// Σ w_k x_k e^{iω t_k}·h for samples x_k at t_k = t0 + k·h.
pub fn transform(x: &[f64], t0: f64, h: f64, omega: f64, window: Window) -> Complex64 {
    let n = x.len();
    let step = Complex64::from_polar(1.0, omega * h);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut z = Complex64::new(1.0, 0.0);
    for (k, &v) in x.iter().enumerate() {
        // resynchronise the running phase to keep rounding from piling up
        if k % 1024 == 0 {
            z = Complex64::from_polar(1.0, omega * h * k as f64);
        }
        acc += z * (v * weight(window, k, n));
        z *= step;
    }
    acc * Complex64::from_polar(h, omega * t0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub omega: f64,
    pub magnitude: f64,
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Local maxima of |X(ω)| on [lo, hi], located on a `count`-point scan and
/// refined by golden-section search. Sorted by decreasing magnitude.
pub fn spectral_peaks(
    x: &[f64],
    t0: f64,
    h: f64,
    lo: f64,
    hi: f64,
    count: usize,
    window: Window,
) -> Vec<SpectralPeak> {
    let grid = linspace(lo, hi, count);
    let mag = |w: f64| transform(x, t0, h, w, window).norm();
    let vals: Vec<f64> = grid.iter().map(|&w| mag(w)).collect();
    let mut peaks: Vec<SpectralPeak> = (1..count.saturating_sub(1))
        .filter(|&i| vals[i] > vals[i - 1] && vals[i] >= vals[i + 1])
        .map(|i| {
            let tol = 1e-10 * (1.0 + grid[i].abs());
            let w = golden_max(mag, grid[i - 1], grid[i + 1], tol);
            SpectralPeak {
                omega: w,
                magnitude: mag(w),
            }
        })
        .collect();
    peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locates_two_tones() {
        let h = 0.05;
        let x: Vec<f64> = (0..40000)
            .map(|k| {
                let t = k as f64 * h;
                libm::cos(0.987 * t) + 0.5 * libm::cos(1.013 * t)
            })
            .collect();
        let p = spectral_peaks(&x, 0.0, h, 0.95, 1.05, 400, Window::Hann);
        assert!((p[0].omega - 0.987).abs() < 1e-5);
        assert!((p[1].omega - 1.013).abs() < 1e-5);
    }
}

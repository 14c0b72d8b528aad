//! Lorentzian fits of resonance lineshapes.

use alloc::vec::Vec;

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::scattering::ComplexResponse;

pub const MIN_POINTS: usize = 8;
const MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceFit {
    pub center: f64,
    pub fwhm: f64,
    /// Height of the Lorentzian above the background. For a dip this is the
    /// depth of 1 − |·|².
    pub amplitude: f64,
    pub background: f64,
    /// RMS deviation between data and model.
    pub residual: f64,
    pub dip: bool,
}

fn model(p: &Vector4<f64>, x: f64) -> f64 {
    let u = (x - p[0]) / p[1];
    p[3] + p[2] / (1.0 + u * u)
}

fn jacobian_row(p: &Vector4<f64>, x: f64) -> Vector4<f64> {
    let u = (x - p[0]) / p[1];
    let l = 1.0 / (1.0 + u * u);
    let dl_du = -2.0 * u * l * l;
    Vector4::new(
        p[2] * dl_du * (-1.0 / p[1]),
        p[2] * dl_du * (-u / p[1]),
        l,
        1.0,
    )
}

fn cost(p: &Vector4<f64>, x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - model(p, xi);
            r * r
        })
        .sum()
}

/// Least-squares fit of B + A/(1 + ((x − c)/h)²) with FWHM = 2h.
pub fn fit_lorentzian(x: &[f64], y: &[f64], dip: bool) -> Result<ResonanceFit> {
    let n = x.len();
    if n < MIN_POINTS {
        return Err(Error::TooFewPoints {
            lo: x.first().copied().unwrap_or(f64::NAN),
            hi: x.last().copied().unwrap_or(f64::NAN),
            points: n,
            min: MIN_POINTS,
        });
    }
    let x0 = 0.5 * (x[0] + x[n - 1]);
    let xs = 0.5 * (x[n - 1] - x[0]);
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    let ys = if ymax > ymin { ymax - ymin } else { 1.0 };
    let xn: Vec<f64> = x.iter().map(|&v| (v - x0) / xs).collect();
    let yn: Vec<f64> = y.iter().map(|&v| (v - ymin) / ys).collect();

    let imax = (0..n).max_by(|&a, &b| yn[a].total_cmp(&yn[b])).unwrap();
    let base = yn[0].min(yn[n - 1]);
    let half = 0.5 * (yn[imax] + base);
    let mut lo = imax;
    while lo > 0 && yn[lo] > half {
        lo -= 1;
    }
    let mut hi = imax;
    while hi + 1 < n && yn[hi] > half {
        hi += 1;
    }
    let h0 = (0.5 * (xn[hi] - xn[lo])).max(0.5 * (xn[1] - xn[0]));
    let mut p = Vector4::new(xn[imax], h0, yn[imax] - base, base);
    let mut c = cost(&p, &xn, &yn);
    let mut lambda = 1e-3;
    let mut converged = false;

    for _ in 0..MAX_ITER {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for (&xi, &yi) in xn.iter().zip(&yn) {
            let j = jacobian_row(&p, xi);
            let r = yi - model(&p, xi);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut accepted = false;
        while lambda < 1e12 {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p + step;
            trial[1] = trial[1].abs();
            let tc = cost(&trial, &xn, &yn);
            if tc.is_finite() && tc <= c {
                let rel = (c - tc) / c.max(1e-300);
                let small = step.norm() < 1e-12 * (1.0 + p.norm());
                p = trial;
                c = tc;
                lambda = (lambda * 0.3).max(1e-15);
                accepted = true;
                if rel < 1e-14 || small {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: at a minimum to working precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged || !p.iter().all(|v| v.is_finite()) || p[1] <= 0.0 {
        return Err(Error::FitDidNotConverge {
            iterations: MAX_ITER,
        });
    }
    Ok(ResonanceFit {
        center: x0 + p[0] * xs,
        fwhm: 2.0 * p[1] * xs,
        amplitude: p[2] * ys,
        background: ymin + p[3] * ys,
        residual: libm::sqrt(c / n as f64) * ys,
        dip,
    })
}

/// Fits the resonance of `response` inside `[lo, hi]`.
///
/// Peaks are fit on |v|², dips on 1 − |v|². A window is treated as a dip
/// when the median of |v|² lies closer to its maximum than to its minimum.
pub fn fit_resonance(response: &ComplexResponse, lo: f64, hi: f64) -> Result<ResonanceFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&w, v) in response.grid.iter().zip(&response.values) {
        if w >= lo && w <= hi {
            x.push(w);
            y.push(v.norm_sqr());
        }
    }
    if x.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            lo,
            hi,
            points: x.len(),
            min: MIN_POINTS,
        });
    }
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let (min, max, med) = (
        sorted[0],
        sorted[sorted.len() - 1],
        sorted[sorted.len() / 2],
    );
    let dip = med - min > max - med;
    if dip {
        for v in &mut y {
            *v = 1.0 - *v;
        }
    }
    fit_lorentzian(&x, &y, dip)
}

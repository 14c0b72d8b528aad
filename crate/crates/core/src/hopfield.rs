//! Transmon coupled to N cavity modes with counter-rotating terms kept,
//! diagonalized in the Hopfield basis (x, y, m_1, h_1, …, m_N, h_N).
//!
//! The eigenproblem matrix M satisfies ηM = S with S symmetric and
//! η = diag(1, −1, 1, −1, …), so eigenvectors are orthogonal in the
//! indefinite η-product and v^T η v has the sign of the eigenvalue when S
//! is positive definite. Normalizing v^T η v = ±1 is the bosonicity
//! condition.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::CircuitParams;
use crate::scattering::{trapped_at, HelperFunctions};

#[derive(Debug, Clone, PartialEq)]
pub struct HopfieldProblem {
    pub omega_a: f64,
    pub mode_freqs: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl HopfieldProblem {
    pub fn n_modes(&self) -> usize {
        self.mode_freqs.len()
    }

    pub fn dimension(&self) -> usize {
        2 * self.n_modes() + 2
    }

    /// The eigenproblem matrix in the printed sign pattern.
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.dimension();
        let mut m = DMatrix::zeros(d, d);
        m[(0, 0)] = self.omega_a;
        m[(1, 1)] = -self.omega_a;
        for (n, (&w, &g)) in self.mode_freqs.iter().zip(&self.couplings).enumerate() {
            let (a, b) = (2 + 2 * n, 3 + 2 * n);
            m[(a, a)] = w;
            m[(b, b)] = -w;
            for row in [0, 1] {
                m[(row, a)] = g;
                m[(row, b)] = -g;
            }
            for row in [a, b] {
                m[(row, 0)] = g;
                m[(row, 1)] = -g;
            }
        }
        m
    }

    fn metric(&self, k: usize) -> f64 {
        if k.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Modes nω_c for n = 1…N, all coupled with g = Ω/2 where Ω = 2/√(T C_J Z_0)
/// is evaluated at the actual delay.
pub fn build(p: &CircuitParams, n_modes: usize) -> Result<HopfieldProblem> {
    build_with_couplings(p, n_modes, None)
}

/// As [`build`], optionally replacing the mode-independent coupling by a
/// per-mode list.
pub fn build_with_couplings(
    p: &CircuitParams,
    n_modes: usize,
    couplings: Option<&[f64]>,
) -> Result<HopfieldProblem> {
    let t = p.mirror_delay()?;
    if n_modes == 0 {
        return Err(Error::InvalidConfig("at least one cavity mode is required"));
    }
    let d = p.derive();
    let wc = 2.0 * PI / t;
    let g = 0.5 * d.rabi.ok_or(Error::MirrorRequired)?;
    let couplings = match couplings {
        Some(c) if c.len() != n_modes => {
            return Err(Error::InvalidConfig(
                "coupling override must list one value per mode",
            ))
        }
        Some(c) => c.to_vec(),
        None => alloc::vec![g; n_modes],
    };
    Ok(HopfieldProblem {
        omega_a: d.omega_j,
        mode_freqs: (1..=n_modes).map(|n| n as f64 * wc).collect(),
        couplings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfieldSpectrum {
    /// Real eigenfrequencies in increasing order.
    pub eigenfrequencies: Vec<f64>,
    /// Hopfield coefficients (x, y, m_1, h_1, …) per eigenfrequency.
    pub coefficient_vectors: Vec<Vec<f64>>,
    /// |x|² − |y|² + Σ(|m_n|² − |h_n|²) after normalization.
    pub bosonicity: Vec<f64>,
    /// Eigenvalues with a non-negligible imaginary part (unstable region).
    pub complex_eigenvalues: Vec<Complex64>,
}

impl HopfieldSpectrum {
    pub fn positive(&self) -> Vec<f64> {
        self.eigenfrequencies
            .iter()
            .copied()
            .filter(|&w| w > 0.0)
            .collect()
    }

    /// Largest distance between the spectrum and its negative.
    pub fn pairing_error(&self) -> f64 {
        let e = &self.eigenfrequencies;
        let n = e.len();
        (0..n)
            .map(|i| (e[i] + e[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }
}

pub fn diagonalize(problem: &HopfieldProblem) -> Result<HopfieldSpectrum> {
    let m = problem.matrix();
    let dim = problem.dimension();
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut values: Vec<Complex64> = m.clone().complex_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.re.total_cmp(&b.re));

    let mut out = HopfieldSpectrum {
        eigenfrequencies: Vec::new(),
        coefficient_vectors: Vec::new(),
        bosonicity: Vec::new(),
        complex_eigenvalues: Vec::new(),
    };
    for lam in values {
        if lam.im.abs() > 1e-9 * scale {
            out.complex_eigenvalues.push(lam);
            continue;
        }
        let (w, v) = eigenvector(&m, problem, lam.re, scale)?;
        let norm: f64 = (0..dim).map(|k| problem.metric(k) * v[k] * v[k]).sum();
        if norm.abs() < 1e-12 {
            return Err(Error::Defective { value: w });
        }
        let s = 1.0 / libm::sqrt(norm.abs());
        let v: Vec<f64> = v.iter().map(|x| x * s).collect();
        let b: f64 = (0..dim).map(|k| problem.metric(k) * v[k] * v[k]).sum();
        out.eigenfrequencies.push(w);
        out.coefficient_vectors.push(v);
        out.bosonicity.push(b);
    }
    Ok(out)
}

/// Inverse iteration at a slightly shifted eigenvalue, followed by an
/// η-weighted Rayleigh quotient.
fn eigenvector(
    m: &DMatrix<f64>,
    problem: &HopfieldProblem,
    lam: f64,
    scale: f64,
) -> Result<(f64, Vec<f64>)> {
    let dim = m.nrows();
    let shift = lam + 1e-10 * scale.max(1.0);
    let mut a = m.clone();
    for k in 0..dim {
        a[(k, k)] -= shift;
    }
    let lu = a.lu();
    let mut v = nalgebra::DVector::from_fn(dim, |k, _| 1.0 + 0.1 * k as f64);
    for _ in 0..4 {
        v = lu.solve(&v).ok_or(Error::Defective { value: lam })?;
        let n = v.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Defective { value: lam });
        }
        v /= n;
    }
    let mv = m * &v;
    let num: f64 = (0..dim).map(|k| problem.metric(k) * v[k] * mv[k]).sum();
    let den: f64 = (0..dim).map(|k| problem.metric(k) * v[k] * v[k]).sum();
    let w = if den.abs() > 1e-12 { num / den } else { lam };
    let resid = (mv - &v * w).norm();
    if resid > 1e-8 * scale.max(1.0) {
        return Err(Error::Defective { value: lam });
    }
    Ok((w, v.iter().copied().collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlaySlice {
    pub omega_j_t: f64,
    /// Positive eigenfrequencies inside the frequency grid.
    pub eigenfrequencies: Vec<f64>,
    /// Local maxima of |f| exceeding 1.
    pub ridges: Vec<f64>,
    /// Distance from each ridge to its nearest eigenfrequency, in grid cells.
    pub distances: Vec<f64>,
    /// Eigenfrequencies with no ridge within three cells.
    pub unmatched: Vec<f64>,
    pub max_bosonicity_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Overlay {
    pub slices: Vec<OverlaySlice>,
    pub cell: f64,
}

impl Overlay {
    pub fn max_distance(&self) -> f64 {
        self.slices
            .iter()
            .flat_map(|s| s.distances.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn ridges(&self) -> usize {
        self.slices.iter().map(|s| s.ridges.len()).sum()
    }

    pub fn within(&self, cells: f64) -> usize {
        self.slices
            .iter()
            .flat_map(|s| s.distances.iter())
            .filter(|&&d| d <= cells)
            .count()
    }

    pub fn max_bosonicity_error(&self) -> f64 {
        self.slices
            .iter()
            .map(|s| s.max_bosonicity_error)
            .fold(0.0, f64::max)
    }
}

/// One ω_J T slice of the comparison between |f| ridges and eigenfrequencies.
/// `freq_grid` must be uniform.
pub fn overlay_slice(
    p: &CircuitParams,
    n_modes: usize,
    omega_j_t: f64,
    freq_grid: &[f64],
) -> Result<OverlaySlice> {
    crate::grid::validate(freq_grid)?;
    if freq_grid.len() < 3 {
        return Err(Error::InvalidGrid {
            index: freq_grid.len(),
        });
    }
    let wj = p.omega_j();
    let q = p.with_delay(omega_j_t / wj)?;
    let spec = diagonalize(&build(&q, n_modes)?)?;
    let (lo, hi) = (freq_grid[0], freq_grid[freq_grid.len() - 1]);
    let cell = (hi - lo) / (freq_grid.len() - 1) as f64;
    let eig: Vec<f64> = spec
        .positive()
        .into_iter()
        .filter(|&w| w >= lo && w <= hi)
        .collect();

    let h = HelperFunctions::new(&q);
    let t = q.mirror_delay()?;
    let w0 = q.omega_0();
    let mag: Vec<f64> = freq_grid
        .iter()
        .map(|&w| trapped_at(&h, w0, t, w).norm())
        .collect();
    let ridges: Vec<f64> = (1..mag.len() - 1)
        .filter(|&i| mag[i] > 1.0 && mag[i] > mag[i - 1] && mag[i] >= mag[i + 1])
        .map(|i| freq_grid[i])
        .collect();
    let nearest = |x: f64, set: &[f64]| {
        set.iter()
            .map(|&e| (e - x).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let distances = ridges.iter().map(|&r| nearest(r, &eig) / cell).collect();
    let unmatched = eig
        .iter()
        .copied()
        .filter(|&e| nearest(e, &ridges) > 3.0 * cell)
        .collect();
    let max_bosonicity_error = spec
        .eigenfrequencies
        .iter()
        .zip(&spec.bosonicity)
        .filter(|(&w, _)| w > 0.0)
        .map(|(_, &b)| (b - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(OverlaySlice {
        omega_j_t,
        eigenfrequencies: eig,
        ridges,
        distances,
        unmatched,
        max_bosonicity_error,
    })
}

pub fn overlay(
    p: &CircuitParams,
    n_modes: usize,
    t_grid: &[f64],
    freq_grid: &[f64],
) -> Result<Overlay> {
    let slices = t_grid
        .iter()
        .map(|&wt| overlay_slice(p, n_modes, wt, freq_grid))
        .collect::<Result<Vec<_>>>()?;
    let cell = (freq_grid[freq_grid.len() - 1] - freq_grid[0]) / (freq_grid.len() - 1) as f64;
    Ok(Overlay { slices, cell })
}

/// Largest shift of the two positive eigenfrequencies nearest ω_J when the
/// mode count goes from `n1` to `n2`.
pub fn n_convergence(p: &CircuitParams, n1: usize, n2: usize) -> Result<f64> {
    let wj = p.omega_j();
    let near = |n: usize| -> Result<Vec<f64>> {
        let mut pos = diagonalize(&build(p, n)?)?.positive();
        pos.sort_by(|a, b| (a - wj).abs().total_cmp(&(b - wj).abs()));
        pos.truncate(2);
        pos.sort_by(f64::total_cmp);
        Ok(pos)
    };
    let (a, b) = (near(n1)?, near(n2)?);
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{dimensionless, Ratios};

    fn rabi_point() -> CircuitParams {
        dimensionless(&Ratios::new(0.1, 1000.0).cavity(1.0, 1)).unwrap()
    }

    #[test]
    fn printed_matrix_layout() {
        let pb = build(&rabi_point(), 2).unwrap();
        let m = pb.matrix();
        let g = pb.couplings[0];
        assert_eq!(m.nrows(), 6);
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(1, 1)], -1.0);
        assert_eq!(m[(4, 4)], 2.0);
        assert_eq!(m[(5, 5)], -2.0);
        assert_eq!((m[(0, 2)], m[(0, 3)], m[(1, 2)], m[(1, 3)]), (g, -g, g, -g));
        assert_eq!((m[(2, 0)], m[(2, 1)], m[(3, 0)], m[(3, 1)]), (g, -g, g, -g));
        assert_eq!(m[(2, 4)], 0.0);
        assert_ne!(m, m.transpose());
        // η M is symmetric
        let eta = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(6, |k, _| pb.metric(k)));
        let s = &eta * &m;
        assert_eq!(s, s.transpose());
    }

    #[test]
    fn zero_coupling_spectrum() {
        let p = dimensionless(&Ratios::new(0.1, 1000.0).cavity(0.7, 1)).unwrap();
        let pb = build_with_couplings(&p, 3, Some(&[0.0, 0.0, 0.0])).unwrap();
        let s = diagonalize(&pb).unwrap();
        let mut expect = alloc::vec![1.0, -1.0, 0.7, -0.7, 1.4, -1.4, 2.1, -2.1];
        expect.sort_by(f64::total_cmp);
        for (a, b) in s.eigenfrequencies.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pairing_and_bosonicity() {
        let s = diagonalize(&build(&rabi_point(), 8).unwrap()).unwrap();
        assert_eq!(s.eigenfrequencies.len(), 18);
        assert!(s.complex_eigenvalues.is_empty());
        assert!(s.pairing_error() < 1e-10);
        for (w, b) in s.eigenfrequencies.iter().zip(&s.bosonicity) {
            assert!((b - w.signum()).abs() < 1e-8);
        }
    }

    #[test]
    fn errors() {
        assert!(build(&rabi_point().without_mirror(), 2).is_err());
        assert!(build(&rabi_point(), 0).is_err());
        assert!(build_with_couplings(&rabi_point(), 2, Some(&[0.1])).is_err());
    }
}

//! Frequency grids.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `count` evenly spaced points on [start, stop], endpoints included.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => alloc::vec![start],
        _ => {
            let h = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        stop
                    } else {
                        start + h * i as f64
                    }
                })
                .collect()
        }
    }
}

/// Logarithmically spaced points from 10^a to 10^b.
pub fn logspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    linspace(a, b, count)
        .into_iter()
        .map(|e| libm::pow(10.0, e))
        .collect()
}

/// Default transmon-scale grid: 4001 points on [0.9, 1.1]·ω_J.
pub fn transmon_default(omega_j: f64) -> Vec<f64> {
    linspace(0.9 * omega_j, 1.1 * omega_j, 4001)
}

/// Checks that a grid is positive and strictly increasing.
pub fn validate(grid: &[f64]) -> Result<()> {
    for (i, &w) in grid.iter().enumerate() {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidGrid { index: i });
        }
        if i > 0 && w <= grid[i - 1] {
            return Err(Error::InvalidGrid { index: i });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub levels: u32,
    pub factor: usize,
    /// Largest change of the sampled function across one interval, as a
    /// fraction of its range on the base grid. Larger jumps are subdivided.
    pub max_step: f64,
}

impl Default for Refinement {
    fn default() -> Self {
        Self {
            levels: 3,
            factor: 8,
            max_step: 0.01,
        }
    }
}

fn steps(vals: &[f64]) -> Vec<f64> {
    vals.windows(2).map(|v| (v[1] - v[0]).abs()).collect()
}

/// Refines `base` where `eval` jumps between samples and returns the refined
/// grid with `eval` sampled on it. Each level subdivides the marked intervals
/// created by the previous level (and their immediate neighbours).
pub fn refine<F: Fn(f64) -> f64>(base: &[f64], eval: F, cfg: Refinement) -> (Vec<f64>, Vec<f64>) {
    let mut grid: Vec<f64> = base.to_vec();
    let mut vals: Vec<f64> = grid.iter().map(|&w| eval(w)).collect();
    if grid.len() < 3 || cfg.factor < 2 {
        return (grid, vals);
    }
    let (lo, hi) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let limit = cfg.max_step * (hi - lo);
    if limit.is_nan() || limit <= 0.0 {
        return (grid, vals);
    }
    let mut s = steps(&vals);
    // level of each interval: only intervals at the current level are split
    let mut level: Vec<u32> = alloc::vec![0; s.len()];

    for lv in 0..cfg.levels {
        let n = s.len();
        let mut mark = alloc::vec![false; n];
        for i in 0..n {
            if level[i] == lv && s[i] > limit {
                mark[i] = true;
                if i > 0 && level[i - 1] == lv {
                    mark[i - 1] = true;
                }
                if i + 1 < n && level[i + 1] == lv {
                    mark[i + 1] = true;
                }
            }
        }
        if !mark.iter().any(|&m| m) {
            break;
        }
        let mut g = Vec::with_capacity(grid.len() * 2);
        let mut v = Vec::with_capacity(grid.len() * 2);
        let mut l = Vec::with_capacity(grid.len() * 2);
        for i in 0..n {
            g.push(grid[i]);
            v.push(vals[i]);
            if mark[i] {
                let h = (grid[i + 1] - grid[i]) / cfg.factor as f64;
                for k in 1..cfg.factor {
                    let w = grid[i] + h * k as f64;
                    g.push(w);
                    v.push(eval(w));
                }
                l.extend(core::iter::repeat_n(lv + 1, cfg.factor));
            } else {
                l.push(level[i]);
            }
        }
        g.push(grid[n]);
        v.push(vals[n]);
        grid = g;
        vals = v;
        level = l;
        s = steps(&vals);
    }
    (grid, vals)
}

//! Complex poles of the terminated line and the residue expansion of the
//! transmon dynamics.
//!
//! Poles are zeros of the characteristic function
//! D(z) = R_0(z) − iR_J(z)(1 − e^{izT}) (or N(z) = R_0 − iR_J on the open
//! line). They are located by counting zeros with the argument principle on
//! rectangles, bisecting until each cell holds one zero, and polishing with
//! Newton's method.
//!
//! With φ_J(0) = φ0 and all charges zero, the Laplace transform of the flux is
//! Φ(s) = Num(s)/Den(s) where, for a = s(1 − e^{−sT}) and b = 2/Z_0,
//!
//! ```text
//! Den(s) = (a + b/C_Σ)·C_J·s² + (a + b/C_c)/L_J
//! Num(s) = (a + b/C_Σ)·C_J·s·φ0
//! ```
//!
//! and Den(−iω) = K·D(ω) with K = 2/(Z_0 C_c L_J). Each pole ω_k contributes
//! c_k e^{−iω_k t} with c_k = Num(s_k)/(iK·D'(ω_k)).

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::convention::Convention;
use crate::emission::qubit_energy;
use crate::error::{Error, Result};
use crate::params::CircuitParams;
use crate::scattering::HelperFunctions;

const I: Complex64 = Complex64::new(0.0, 1.0);
const BOUNDARY_TOL: f64 = 1e-10;
const POLISH_TOL: f64 = 1e-12;
const MAX_ARG_STEP: f64 = PI / 4.0;
const INTEGRALITY_TOL: f64 = 1e-3;
pub const MISMATCH_LIMIT: f64 = 0.01;

/// Closed rectangle in the complex frequency plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Self {
        Self {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_lo, self.im_lo),
            Complex64::new(self.re_hi, self.im_lo),
            Complex64::new(self.re_hi, self.im_hi),
            Complex64::new(self.re_lo, self.im_hi),
        ]
    }

    fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_lo + self.re_hi),
            0.5 * (self.im_lo + self.im_hi),
        )
    }

    fn diameter(&self) -> f64 {
        libm::hypot(self.re_hi - self.re_lo, self.im_hi - self.im_lo)
    }

    fn grown(&self, d: f64) -> Self {
        Self::new(
            self.re_lo - d,
            self.re_hi + d,
            self.im_lo - d,
            self.im_hi + d,
        )
    }
}

/// Default search window: Re ∈ [0.5, 3.5]·ω_J, Im ∈ [−5γ_J, 0].
pub fn default_window(p: &CircuitParams) -> Rect {
    let d = p.derive();
    Rect::new(0.5 * d.omega_j, 3.5 * d.omega_j, -5.0 * d.gamma_j, 0.0)
}

/// Window used for time-domain reconstruction. It reaches down to zero
/// frequency so that slow modes are included, and deep enough in Im to hold
/// the overdamped pole of the open line.
pub fn reconstruction_window(p: &CircuitParams) -> Rect {
    let d = p.derive();
    let mut depth = (5.0 * d.gamma_j).max(0.5 * d.omega_j);
    if !p.has_mirror() {
        depth = depth.max(4.0 / (p.z_0() * d.c_sigma));
    }
    Rect::new(-0.02 * d.omega_j, 3.5 * d.omega_j, -depth, 1e-3 * d.gamma_j)
}

/// D(z) and its derivative for one parameter set.
#[derive(Debug, Clone, Copy)]
pub struct Characteristic {
    h: HelperFunctions,
    delay: Option<f64>,
}

impl Characteristic {
    pub fn new(p: &CircuitParams) -> Self {
        Self {
            h: HelperFunctions::new(p),
            delay: p.delay(),
        }
    }

    pub fn open(p: &CircuitParams) -> Self {
        Self {
            h: HelperFunctions::new(p),
            delay: None,
        }
    }

    fn feedback(&self, z: Complex64) -> Complex64 {
        match self.delay {
            // 1 − e^{izT}
            Some(t) => 1.0 - (I * z * t).exp(),
            None => Complex64::new(1.0, 0.0),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.h.r0_c(z) - I * self.h.rj_c(z) * self.feedback(z)
    }

    /// Magnitude of the individual terms, the reference for "zero".
    pub fn scale(&self, z: Complex64) -> f64 {
        let e = match self.delay {
            Some(t) => 1.0 + (I * z * t).exp().norm(),
            None => 1.0,
        };
        1.0 + self.h.r0_c(z).norm() + self.h.rj_c(z).norm() * e
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let base = self.h.r0_prime(z) - I * self.h.rj_prime(z) * self.feedback(z);
        match self.delay {
            Some(t) => base - t * self.h.rj_c(z) * (I * z * t).exp(),
            None => base,
        }
    }
}

/// D(z) of the mirror-terminated line.
pub fn characteristic(p: &CircuitParams, z: Complex64) -> Result<Complex64> {
    p.mirror_delay()?;
    Ok(Characteristic::new(p).eval(z))
}

/// N(z) of the open line.
pub fn characteristic_open(p: &CircuitParams, z: Complex64) -> Complex64 {
    Characteristic::open(p).eval(z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub z: Complex64,
    pub residue_phi: Complex64,
    pub residue_p_j: Complex64,
    pub residue_p_0: Complex64,
    pub label: String,
    /// Generated as −z̄ of a searched pole rather than found directly.
    pub partner: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MethodReport {
    /// Zero count of the final window from the contour integral.
    pub winding: i64,
    pub cells: usize,
    pub boundary_samples: usize,
    pub newton_iterations_max: usize,
    /// Number of times the window was enlarged to move its edge off a zero.
    pub expansions: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    pub poles: Vec<Pole>,
    pub search_window: Rect,
    pub method_report: MethodReport,
    pub convention: Convention,
    pub mirror: bool,
}

struct Finder<'a> {
    d: &'a Characteristic,
    samples_per_unit: f64,
    report: MethodReport,
}

impl<'a> Finder<'a> {
    fn new(d: &'a Characteristic) -> Self {
        let samples_per_unit = match d.delay {
            Some(t) => (16.0 * t / (2.0 * PI)).max(16.0),
            None => 16.0,
        };
        Self {
            d,
            samples_per_unit,
            report: MethodReport::default(),
        }
    }

    /// D(z) and |D/D'|, an estimate of the distance to the nearest zero.
    fn value(&mut self, z: Complex64) -> Result<(Complex64, f64)> {
        self.report.boundary_samples += 1;
        let v = self.d.eval(z);
        if v.norm() < BOUNDARY_TOL * self.d.scale(z) {
            return Err(Error::BoundaryZero { re: z.re, im: z.im });
        }
        Ok((v, v.norm() / self.d.derivative(z).norm()))
    }

    fn edge(&mut self, a: Complex64, b: Complex64) -> Result<f64> {
        let n = libm::ceil((b - a).norm() * self.samples_per_unit).max(16.0) as usize;
        let mut total = 0.0;
        let mut za = a;
        let mut fa = self.value(a)?;
        for k in 1..=n {
            let zb = a + (b - a) * (k as f64 / n as f64);
            let fb = self.value(zb)?;
            total += self.segment(za, fa, zb, fb, 0)?;
            za = zb;
            fa = fb;
        }
        Ok(total)
    }

    /// Change of arg D along [a, b]. The segment is split until the phase
    /// step is small and the segment is shorter than the distance to any
    /// nearby zero, so that two close zeros cannot hide a full turn.
    fn segment(
        &mut self,
        a: Complex64,
        fa: (Complex64, f64),
        b: Complex64,
        fb: (Complex64, f64),
        depth: u32,
    ) -> Result<f64> {
        let step = (fb.0 * fa.0.conj()).arg();
        let len = (b - a).norm();
        if (step.abs() < MAX_ARG_STEP && len < 0.5 * fa.1.min(fb.1)) || depth > 60 {
            return Ok(step);
        }
        let m = 0.5 * (a + b);
        let fm = self.value(m)?;
        Ok(self.segment(a, fa, m, fm, depth + 1)? + self.segment(m, fm, b, fb, depth + 1)?)
    }

    fn winding(&mut self, r: &Rect) -> Result<i64> {
        let c = r.corners();
        let mut total = 0.0;
        for k in 0..4 {
            total += self.edge(c[k], c[(k + 1) % 4])?;
        }
        let w = total / (2.0 * PI);
        let n = libm::round(w);
        if (w - n).abs() > INTEGRALITY_TOL {
            return Err(Error::NonIntegerWinding { value: w });
        }
        Ok(n as i64)
    }

    fn newton(&mut self, mut z: Complex64) -> Option<Complex64> {
        for it in 1..=100 {
            let f = self.d.eval(z);
            let df = self.d.derivative(z);
            if df.norm() == 0.0 {
                return None;
            }
            let step = f / df;
            z -= step;
            self.report.newton_iterations_max = self.report.newton_iterations_max.max(it);
            if !z.re.is_finite() || !z.im.is_finite() {
                return None;
            }
            if step.norm() <= 1e-15 * (1.0 + z.norm())
                || self.d.eval(z).norm() < 1e-15 * self.d.scale(z)
            {
                break;
            }
        }
        (self.d.eval(z).norm() < POLISH_TOL * self.d.scale(z)).then_some(z)
    }

    /// (1/2πi)∮ z D'/D dz on the cell boundary: the zero itself when the
    /// cell holds exactly one.
    fn centroid(&self, r: &Rect) -> Complex64 {
        let c = r.corners();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..4 {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            let n = 256;
            let dz = (b - a) / n as f64;
            for j in 0..n {
                let z = a + dz * (j as f64 + 0.5);
                acc += z * self.d.derivative(z) / self.d.eval(z) * dz;
            }
        }
        acc / (2.0 * PI * I)
    }

    fn isolate(&mut self, r: Rect, count: i64, out: &mut Vec<Complex64>) -> Result<()> {
        self.report.cells += 1;
        if count == 0 {
            return Ok(());
        }
        let margin = 1e-9 * (1.0 + r.diameter());
        if count == 1 {
            let grown = r.grown(margin);
            let root = self
                .newton(r.center())
                .filter(|z| grown.contains(*z))
                .or_else(|| {
                    self.newton(self.centroid(&r))
                        .filter(|z| grown.contains(*z))
                });
            if let Some(z) = root {
                out.push(z);
                return Ok(());
            }
            if r.diameter() < 1e-10 {
                return Err(Error::NewtonFailed {
                    re_lo: r.re_lo,
                    re_hi: r.re_hi,
                    im_lo: r.im_lo,
                    im_hi: r.im_hi,
                });
            }
            // Newton left the cell: shrink it and try again
        } else if r.diameter() < 1e-10 {
            // a multiple zero: polish once and repeat it
            let z = self.newton(r.center()).unwrap_or(r.center());
            for _ in 0..count {
                out.push(z);
            }
            return Ok(());
        }
        let mut last = None;
        for frac in [0.5123, 0.4711, 0.5377, 0.4513, 0.5891] {
            let (a, b) = if r.re_hi - r.re_lo >= r.im_hi - r.im_lo {
                let x = r.re_lo + frac * (r.re_hi - r.re_lo);
                (
                    Rect::new(r.re_lo, x, r.im_lo, r.im_hi),
                    Rect::new(x, r.re_hi, r.im_lo, r.im_hi),
                )
            } else {
                let y = r.im_lo + frac * (r.im_hi - r.im_lo);
                (
                    Rect::new(r.re_lo, r.re_hi, r.im_lo, y),
                    Rect::new(r.re_lo, r.re_hi, y, r.im_hi),
                )
            };
            let counts = self.winding(&a).and_then(|ca| Ok((ca, self.winding(&b)?)));
            match counts {
                Ok((ca, cb)) => {
                    if ca + cb != count {
                        return Err(Error::InconsistentCount {
                            parent: count,
                            children: ca + cb,
                        });
                    }
                    self.isolate(a, ca, out)?;
                    return self.isolate(b, cb, out);
                }
                Err(e @ Error::BoundaryZero { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or(Error::InvalidConfig("cell could not be split")))
    }
}

fn locate(d: &Characteristic, window: Rect) -> Result<(Vec<Complex64>, Rect, MethodReport)> {
    let mut finder = Finder::new(d);
    let mut w = window;
    let size = (w.re_hi - w.re_lo).max(w.im_hi - w.im_lo);
    let mut expansions = 0;
    let count = loop {
        match finder.winding(&w) {
            Ok(n) => break n,
            Err(Error::BoundaryZero { .. }) if expansions < 8 => {
                expansions += 1;
                let grow = 1e-4 * size * f64::from(1u32 << expansions);
                w = w.grown(grow);
            }
            Err(e) => return Err(e),
        }
    };
    finder.report.winding = count;
    finder.report.expansions = expansions;
    let mut roots = Vec::new();
    finder.isolate(w, count, &mut roots)?;
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok((roots, w, finder.report))
}

/// Residues of φ_J, p_J and p_0 at pole ω for φ_J(0) = φ0.
fn residues(p: &CircuitParams, d: &Characteristic, w: Complex64, phi0: f64) -> [Complex64; 3] {
    let s = -I * w;
    let b = 2.0 / p.z_0();
    let a = match d.delay {
        Some(t) => s * (1.0 - (-s * t).exp()),
        None => s,
    };
    let c_sigma = p.derive().c_sigma;
    let num = (a + b / c_sigma) * p.c_j() * s * phi0;
    let k = 2.0 / (p.z_0() * p.c_c() * p.l_j());
    let c = num / (I * k * d.derivative(w));
    let pj = -c / (p.l_j() * s);
    let p0 = p.c_j() * s * c + c / (p.l_j() * s);
    [c, pj, p0]
}

fn label(p: &CircuitParams, z: Complex64) -> String {
    let d = p.derive();
    let x = z.re;
    if x.abs() < 1e-9 * d.omega_j {
        return "overdamped".into();
    }
    let mut best = (libm::fabs(x - d.omega_j), String::from("transmon"));
    if let Some(wc) = d.omega_c {
        let n = libm::round(x / wc);
        if n < 1.0 {
            return "low-frequency".into();
        }
        let dist = (x - n * wc).abs();
        if dist < best.0 {
            best = (dist, alloc::format!("cavity {}", n as u32));
        }
    }
    best.1
}

/// Poles of the response inside `window` with residues for φ_J(0) = 1.
///
/// With a mirror the characteristic function is D; otherwise it is N. A zero
/// lying on the window edge enlarges the window slightly; the number of such
/// enlargements is reported.
pub fn find_poles(p: &CircuitParams, window: Rect) -> Result<PoleSet> {
    let d = Characteristic::new(p);
    let (roots, w, report) = locate(&d, window)?;
    let poles = roots
        .into_iter()
        .map(|z| {
            let [c, pj, p0] = residues(p, &d, z, 1.0);
            Pole {
                z,
                residue_phi: c,
                residue_p_j: pj,
                residue_p_0: p0,
                label: label(p, z),
                partner: false,
            }
        })
        .collect();
    Ok(PoleSet {
        poles,
        search_window: w,
        method_report: report,
        convention: Convention::ExpMinusIwt,
        mirror: p.has_mirror(),
    })
}

impl PoleSet {
    /// Searched poles plus their partners −z̄ (with conjugate residues), the
    /// complete set for a real signal. Poles on the imaginary axis are their
    /// own partners; searched poles left of it are dropped since their
    /// partners are already present.
    pub fn with_partners(&self) -> Vec<Pole> {
        let mut out = Vec::new();
        for pole in &self.poles {
            let tol = 1e-9 * (1.0 + pole.z.norm());
            if pole.z.re < -tol {
                continue;
            }
            out.push(pole.clone());
            if pole.z.re > tol {
                out.push(Pole {
                    z: -pole.z.conj(),
                    residue_phi: pole.residue_phi.conj(),
                    residue_p_j: pole.residue_p_j.conj(),
                    residue_p_0: pole.residue_p_0.conj(),
                    label: pole.label.clone(),
                    partner: true,
                });
            }
        }
        out
    }

    /// The same poles under another sign convention: every pole and residue
    /// is conjugated.
    pub fn with_convention(mut self, c: Convention) -> Self {
        if c != self.convention {
            for pole in &mut self.poles {
                pole.z = pole.z.conj();
                pole.residue_phi = pole.residue_phi.conj();
                pole.residue_p_j = pole.residue_p_j.conj();
                pole.residue_p_0 = pole.residue_p_0.conj();
            }
            core::mem::swap(&mut self.search_window.im_lo, &mut self.search_window.im_hi);
            self.search_window.im_lo = -self.search_window.im_lo;
            self.search_window.im_hi = -self.search_window.im_hi;
            self.convention = c;
        }
        self
    }

    /// The two poles closest to `omega`, ordered by real part.
    pub fn pair_near(&self, omega: f64) -> Option<(Complex64, Complex64)> {
        let mut zs: Vec<Complex64> = self.poles.iter().map(|p| p.z).collect();
        zs.sort_by(|a, b| (a - omega).norm().total_cmp(&(b - omega).norm()));
        if zs.len() < 2 {
            return None;
        }
        let (a, b) = (zs[0], zs[1]);
        Some(if a.re <= b.re { (a, b) } else { (b, a) })
    }

    /// Σ residue_phi over the full set, the reconstructed φ_J(0) before
    /// normalization.
    pub fn residue_sum(&self) -> Complex64 {
        self.with_partners().iter().map(|p| p.residue_phi).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub t: Vec<f64>,
    pub phi_j: Vec<f64>,
    pub p_j: Vec<f64>,
    pub p_0: Vec<f64>,
    pub e_q: Vec<f64>,
    /// Largest relative miss of the initial conditions before normalization.
    pub mismatch: f64,
    /// Factor applied to all residues so that φ_J(0) = 1.
    pub normalization: f64,
}

/// Time series from the residue expansion over `poles` (and partners).
pub fn reconstruct(p: &CircuitParams, poles: &PoleSet, t: &[f64]) -> Result<Reconstruction> {
    let set = poles.with_partners();
    let sign = match poles.convention {
        Convention::ExpMinusIwt => -1.0,
        Convention::ExpPlusIwt => 1.0,
    };
    let sum_phi: Complex64 = set.iter().map(|q| q.residue_phi).sum();
    let sum_pj: Complex64 = set.iter().map(|q| q.residue_p_j).sum();
    let sum_p0: Complex64 = set.iter().map(|q| q.residue_p_0).sum();
    let charge = 1.0 / p.z_j();
    let mismatch = (sum_phi - 1.0)
        .norm()
        .max(sum_pj.norm() / charge)
        .max(sum_p0.norm() / charge);
    if mismatch.is_nan() || mismatch > MISMATCH_LIMIT {
        return Err(Error::TruncationInsufficient {
            mismatch,
            limit: MISMATCH_LIMIT,
        });
    }
    let norm = 1.0 / sum_phi.re;
    let n = t.len();
    let (mut phi, mut pj, mut p0) = (
        alloc::vec![0.0; n],
        alloc::vec![0.0; n],
        alloc::vec![0.0; n],
    );
    for q in &set {
        for (i, &ti) in t.iter().enumerate() {
            let e = (I * q.z * (sign * ti)).exp();
            phi[i] += (q.residue_phi * e).re * norm;
            pj[i] += (q.residue_p_j * e).re * norm;
            p0[i] += (q.residue_p_0 * e).re * norm;
        }
    }
    let e_q = (0..n)
        .map(|i| qubit_energy(p, phi[i], pj[i], p0[i]))
        .collect();
    Ok(Reconstruction {
        t: t.to_vec(),
        phi_j: phi,
        p_j: pj,
        p_0: p0,
        e_q,
        mismatch,
        normalization: norm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiRow {
    pub cc_over_cj: f64,
    pub z0_over_zj: f64,
    /// Numerical splitting, absent when the pair is not resolved.
    pub omega_numeric: Option<f64>,
    pub omega_analytic: f64,
    pub relative_error: Option<f64>,
    /// Signed (Ω^N − Ω^A)/Ω^A, absent when unresolved.
    pub signed_error: Option<f64>,
    pub resolved: bool,
    pub pair: Option<(Complex64, Complex64)>,
}

/// Splitting of the pole pair near ω_J at the Rabi condition T = 2π/ω_J.
pub fn rabi_row(cc_over_cj: f64, z0_over_zj: f64) -> Result<RabiRow> {
    let p = crate::params::dimensionless(
        &crate::params::Ratios::new(cc_over_cj, z0_over_zj).cavity(1.0, 1),
    )?;
    let d = p.derive();
    let omega_a = d.rabi.ok_or(Error::MirrorRequired)?;
    let depth = (5.0 * d.gamma_j).max(0.01);
    let set = find_poles(&p, Rect::new(0.5, 1.5, -depth, 0.0))?;
    let pair = set.pair_near(d.omega_j);
    let (omega_n, resolved) = match pair {
        Some((a, b)) => {
            let split = b.re - a.re;
            let width = 2.0 * a.im.abs().max(b.im.abs());
            (split, split > 3.0 * width)
        }
        None => (0.0, false),
    };
    let signed = (omega_n - omega_a) / omega_a;
    Ok(RabiRow {
        cc_over_cj,
        z0_over_zj,
        omega_numeric: resolved.then_some(omega_n),
        omega_analytic: omega_a,
        relative_error: resolved.then_some(signed.abs()),
        signed_error: resolved.then_some(signed),
        resolved,
        pair,
    })
}

/// Table of Ω^N against Ω^A over all combinations of the given ratios.
pub fn rabi_numeric_vs_analytic(cc_ratios: &[f64], z0_ratios: &[f64]) -> Result<Vec<RabiRow>> {
    let mut rows = Vec::with_capacity(cc_ratios.len() * z0_ratios.len());
    for &cc in cc_ratios {
        for &z in z0_ratios {
            rows.push(rabi_row(cc, z)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{dimensionless, Ratios};
    use approx::assert_relative_eq;

    fn fig4() -> CircuitParams {
        dimensionless(&Ratios::new(0.1, 1000.0).cavity(1.0, 1)).unwrap()
    }

    #[test]
    fn characteristic_special_values() {
        let p = fig4();
        assert_eq!(
            characteristic(&p, Complex64::new(0.0, 0.0)).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        assert!(characteristic(&p.without_mirror(), Complex64::new(1.0, 0.0)).is_err());
        let dark = dimensionless(&Ratios::dark_state(0.1, 1000.0, 1)).unwrap();
        let v = characteristic(&dark, Complex64::new(dark.omega_0(), 0.0)).unwrap();
        assert!(v.norm() < 1e-9);
        let weak = dimensionless(&Ratios::new(1e-14, 1.0).cavity(0.7, 1)).unwrap();
        let z = Complex64::new(0.8, -0.1);
        let v = characteristic(&weak, z).unwrap();
        assert!((v - (1.0 - z * z)).norm() < 1e-12);
    }

    #[test]
    fn laplace_denominator_matches_characteristic() {
        for p in [
            fig4(),
            fig4().without_mirror(),
            dimensionless(&Ratios::new(0.3, 7.0).delay(5.0)).unwrap(),
        ] {
            let d = Characteristic::new(&p);
            let k = 2.0 / (p.z_0() * p.c_c() * p.l_j());
            let b = 2.0 / p.z_0();
            let cs = p.derive().c_sigma;
            for w in [
                Complex64::new(0.7, -0.03),
                Complex64::new(1.3, 0.02),
                Complex64::new(0.1, -0.4),
            ] {
                let s = -I * w;
                let a = match p.delay() {
                    Some(t) => s * (1.0 - (-s * t).exp()),
                    None => s,
                };
                let den = (a + b / cs) * p.c_j() * s * s + (a + b / p.c_c()) / p.l_j();
                assert!((den - k * d.eval(w)).norm() < 1e-10 * den.norm());
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = fig4();
        let d = Characteristic::new(&p);
        let z = Complex64::new(1.01, -0.002);
        let h = 1e-6;
        let fd = (d.eval(z + h) - d.eval(z - h)) / (2.0 * h);
        assert!((fd - d.derivative(z)).norm() < 1e-6 * fd.norm());
    }

    #[test]
    fn rabi_pair_at_high_impedance() {
        let p = fig4();
        let set = find_poles(&p, default_window(&p)).unwrap();
        assert_eq!(set.method_report.winding as usize, set.poles.len());
        let (a, b) = set.pair_near(1.0).unwrap();
        assert_relative_eq!(a.re, 0.988929, epsilon = 2e-6);
        assert_relative_eq!(b.re, 1.014315, epsilon = 2e-6);
        assert!(a.im < 0.0 && b.im < 0.0);
        let d = Characteristic::new(&p);
        for q in &set.poles {
            assert!(d.eval(q.z).norm() < 1e-10 * d.scale(q.z));
            assert!(q.z.im <= 0.0);
        }
    }

    #[test]
    fn single_pole_off_node_low_impedance() {
        let p = dimensionless(&Ratios::new(0.1, 0.1).cavity(0.8, 1)).unwrap();
        let d = p.derive();
        let t = p.delay().unwrap();
        let w0t = d.omega_0 - 0.5 * d.gamma_0 * libm::sin(d.omega_0 * t);
        let g0m = 2.0 * d.gamma_0 * libm::sin(0.5 * d.omega_0 * t).powi(2);
        let set = find_poles(&p, Rect::new(0.9, 1.0, -0.01, 0.0)).unwrap();
        assert_eq!(set.poles.len(), 1);
        let z = set.poles[0].z;
        assert!((z.re - w0t).abs() < 0.05 * g0m);
        assert_relative_eq!(-2.0 * z.im, g0m, max_relative = 0.02);
    }

    #[test]
    fn partners_make_real_signals() {
        let p = fig4();
        let set = find_poles(&p, reconstruction_window(&p)).unwrap();
        let all = set.with_partners();
        assert_eq!(
            all.len(),
            2 * set.poles.iter().filter(|q| q.z.re > 1e-6).count()
        );
        let sum = set.residue_sum();
        assert!(sum.im.abs() < 1e-12);
        assert!((sum.re - 1.0).abs() < 1e-4);
    }

    #[test]
    fn convention_conjugates_poles_only() {
        let p = fig4();
        let set = find_poles(&p, reconstruction_window(&p)).unwrap();
        let flipped = set.clone().with_convention(Convention::ExpPlusIwt);
        for (a, b) in set.poles.iter().zip(&flipped.poles) {
            assert_eq!(a.z.re, b.z.re);
            assert_eq!(a.z.im, -b.z.im);
        }
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 3.7).collect();
        let ra = reconstruct(&p, &set, &t).unwrap();
        let rb = reconstruct(&p, &flipped, &t).unwrap();
        for i in 0..t.len() {
            assert!((ra.phi_j[i] - rb.phi_j[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn open_line_two_pole_formula() {
        let p = dimensionless(&Ratios::new(0.1, 1000.0)).unwrap();
        let set = find_poles(&p, reconstruction_window(&p)).unwrap();
        let t: Vec<f64> = (0..200).map(|k| k as f64 * 10.0).collect();
        let r = reconstruct(&p, &set, &t).unwrap();
        assert!(r.mismatch < 1e-6);
        // damped cosine at the transmon pole with amplitude rate γ_J/2
        let q = set.poles.iter().find(|q| q.z.re > 0.5).unwrap();
        assert_relative_eq!(-2.0 * q.z.im, p.derive().gamma_j, max_relative = 0.02);
        for (i, &ti) in t.iter().enumerate() {
            let two_pole = 2.0 * (q.residue_phi * (-I * q.z * ti).exp()).re;
            assert!((r.phi_j[i] - two_pole).abs() < 2e-3);
        }
        assert_relative_eq!(r.phi_j[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tiny_coupling_is_unresolved() {
        let row = rabi_row(0.001, 10.0).unwrap();
        assert!(!row.resolved);
        assert_eq!(row.relative_error, None);
    }
}

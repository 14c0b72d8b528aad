//! Time-domain spontaneous emission with delayed mirror feedback.
//!
//! State (φ_J, p_J, p_0) obeys
//!
//! ```text
//! φ̇_J = (p_J + p_0)/C_J
//! ṗ_J = −φ_J/L_J
//! ṗ_0 = −(2/Z_0)(p_J/C_J + p_0/C_Σ) + (2/Z_0)(V_L^in + V_R^in)
//! ```
//!
//! The last line is node current conservation on the line; its damping term
//! carries a minus sign, so the open line is dissipative and its Fourier
//! transform reproduces r = iR_J/N. With vacuum input from the left and the
//! mirror condition V_R^in(t) = −V_R^out(t − T) one has
//! V_R^in(t) = (Z_0/2)ṗ_0(t − T), giving the neutral delay equation
//! ṗ_0(t) = F(φ_J, p_J, p_0) + ṗ_0(t − T) with zero history before t = 0.
//!
//! Energies: E_q = (p_J + p_0)²/2C_J + p_0²/2C_c + φ_J²/2L_J,
//! Ė_R = (Z_0/4)[ṗ_0(t)² − ṗ_0(t−T)²] and Ė_L = (Z_0/4)[ṗ_0(t) − ṗ_0(t−T)]².
//!
//! The integrator is classical RK4 with step dt = T/m. The delayed value
//! needed at stage i of step n is the stage-i derivative of step n − m, so
//! the scheme is RK4 applied to the method-of-steps ODE and keeps fourth
//! order without interpolating the history.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::CircuitParams;

/// Minimum samples per delay and per bare transmon period.
pub const MIN_STEPS_PER_PERIOD: f64 = 200.0;
/// Steps per delay chosen by [`EmissionConfig::new`].
pub const DEFAULT_STEPS_PER_PERIOD: usize = 400;
const GROWTH_LIMIT: f64 = 1e-3;
const E_R_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionConfig {
    pub t_max: f64,
    pub dt: f64,
    pub initial_phi_j: f64,
    pub mirror: bool,
    /// Keep every k-th step in the returned trajectory.
    pub record_every: usize,
}

impl EmissionConfig {
    /// Default step: T/400 with a mirror (refined further if the transmon
    /// period needs it), 2π/(400 ω_J) on the open line.
    pub fn new(p: &CircuitParams, t_max: f64, mirror: bool) -> Self {
        let wj = p.omega_j();
        let n = DEFAULT_STEPS_PER_PERIOD as f64;
        let dt = match (mirror, p.delay()) {
            (true, Some(t)) => {
                let m = libm::ceil(n * t * wj / (2.0 * PI)).max(n);
                t / m
            }
            _ => 2.0 * PI / (n * wj),
        };
        Self {
            t_max,
            dt,
            initial_phi_j: 1.0,
            mirror,
            record_every: 1,
        }
    }

    /// Step of T/m for an explicit m.
    pub fn with_steps_per_delay(mut self, p: &CircuitParams, m: usize) -> Result<Self> {
        self.dt = p.mirror_delay()? / m as f64;
        Ok(self)
    }

    pub fn record_every(mut self, k: usize) -> Self {
        self.record_every = k.max(1);
        self
    }

    /// Number of steps per round trip, validated against the step limits.
    fn delay_steps(&self, p: &CircuitParams) -> Result<Option<usize>> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::NonPositive {
                field: "dt",
                value: self.dt,
            });
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::InvalidConfig(
                "t_max must be finite and non-negative",
            ));
        }
        if !self.initial_phi_j.is_finite() {
            return Err(Error::InvalidConfig("initial flux must be finite"));
        }
        let limit = 2.0 * PI / (MIN_STEPS_PER_PERIOD * p.omega_j());
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt: self.dt, limit });
        }
        if !self.mirror {
            return Ok(None);
        }
        let t = p.mirror_delay()?;
        let limit = t / MIN_STEPS_PER_PERIOD;
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt: self.dt, limit });
        }
        let m = libm::round(t / self.dt);
        if (m * self.dt - t).abs() > 1e-9 * t {
            return Err(Error::InvalidConfig("dt must divide the round-trip delay"));
        }
        Ok(Some(m as usize))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryState {
    pub t: Vec<f64>,
    pub phi_j: Vec<f64>,
    pub p_j: Vec<f64>,
    pub p_0: Vec<f64>,
    pub p_0_dot: Vec<f64>,
    pub e_q: Vec<f64>,
    pub e_r: Vec<f64>,
    pub e_l: Vec<f64>,
    pub dt: f64,
    pub record_every: usize,
    /// Steps per round trip; `None` on the open line.
    pub delay_steps: Option<usize>,
}

impl TrajectoryState {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn e_total(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.e_q[i] + self.e_r[i] + self.e_l[i])
            .collect()
    }

    /// Largest |E_q + E_R + E_L − E_q(0)|/E_q(0).
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.e_q[0];
        self.e_total()
            .iter()
            .map(|e| (e - e0).abs() / e0)
            .fold(0.0, f64::max)
    }

    /// First sample where E_R falls below −1e-9·E_q(0), if any.
    pub fn e_r_floor_violation(&self) -> Option<(f64, f64)> {
        let floor = -E_R_FLOOR * self.e_q[0];
        self.e_r
            .iter()
            .position(|&e| e < floor)
            .map(|i| (self.t[i], self.e_r[i]))
    }

    /// Samples with t ≤ `t_end`.
    pub fn truncated(&self, t_end: f64) -> Self {
        let n = self.t.partition_point(|&t| t <= t_end);
        Self {
            t: self.t[..n].to_vec(),
            phi_j: self.phi_j[..n].to_vec(),
            p_j: self.p_j[..n].to_vec(),
            p_0: self.p_0[..n].to_vec(),
            p_0_dot: self.p_0_dot[..n].to_vec(),
            e_q: self.e_q[..n].to_vec(),
            e_r: self.e_r[..n].to_vec(),
            e_l: self.e_l[..n].to_vec(),
            ..*self
        }
    }
}

#[derive(Clone, Copy)]
struct System {
    inv_cj: f64,
    inv_lj: f64,
    inv_csig: f64,
    two_over_z0: f64,
    quarter_z0: f64,
}

impl System {
    fn new(p: &CircuitParams) -> Self {
        Self {
            inv_cj: 1.0 / p.c_j(),
            inv_lj: 1.0 / p.l_j(),
            inv_csig: 1.0 / p.derive().c_sigma,
            two_over_z0: 2.0 / p.z_0(),
            quarter_z0: 0.25 * p.z_0(),
        }
    }

    #[inline]
    fn force(&self, pj: f64, p0: f64) -> f64 {
        -self.two_over_z0 * (pj * self.inv_cj + p0 * self.inv_csig)
    }
}

pub fn qubit_energy(p: &CircuitParams, phi_j: f64, p_j: f64, p_0: f64) -> f64 {
    let q = p_j + p_0;
    0.5 * q * q / p.c_j() + 0.5 * p_0 * p_0 / p.c_c() + 0.5 * phi_j * phi_j / p.l_j()
}

/// Integrates from φ_J(0) = `initial_phi_j`, p_J(0) = p_0(0) = 0.
pub fn integrate(p: &CircuitParams, cfg: &EmissionConfig) -> Result<TrajectoryState> {
    run(p, cfg, System::new(p))
}

fn run(p: &CircuitParams, cfg: &EmissionConfig, sys: System) -> Result<TrajectoryState> {
    let m = cfg.delay_steps(p)?;
    let dt = cfg.dt;
    let steps = libm::ceil(cfg.t_max / dt - 1e-9).max(0.0) as usize;
    let every = cfg.record_every.max(1);
    let cap = steps / every + 1;
    let mut out = TrajectoryState {
        t: Vec::with_capacity(cap),
        phi_j: Vec::with_capacity(cap),
        p_j: Vec::with_capacity(cap),
        p_0: Vec::with_capacity(cap),
        p_0_dot: Vec::with_capacity(cap),
        e_q: Vec::with_capacity(cap),
        e_r: Vec::with_capacity(cap),
        e_l: Vec::with_capacity(cap),
        dt,
        record_every: every,
        delay_steps: m,
    };

    // stage derivatives of p_0 for the last m steps
    let mut hist: Vec<[f64; 4]> = alloc::vec![[0.0; 4]; m.unwrap_or(0)];
    let (mut phi, mut pj, mut p0, mut er, mut el) = (cfg.initial_phi_j, 0.0, 0.0, 0.0, 0.0);
    let e0 = qubit_energy(p, phi, pj, p0);
    let limit = e0 * (1.0 + GROWTH_LIMIT);
    let half = 0.5 * dt;

    for n in 0..=steps {
        let slot = m.map(|m| n % m);
        let delayed = match (m, slot) {
            (Some(m), Some(s)) if n >= m => Some(hist[s]),
            _ => None,
        };
        let d0 = delayed.map_or(0.0, |d| d[0]);
        if n % every == 0 || n == steps {
            let eq = qubit_energy(p, phi, pj, p0);
            let k1 = match delayed {
                Some(_) => sys.force(pj, p0) + d0,
                None => sys.force(pj, p0),
            };
            out.t.push(n as f64 * dt);
            out.phi_j.push(phi);
            out.p_j.push(pj);
            out.p_0.push(p0);
            out.p_0_dot.push(k1);
            out.e_q.push(eq);
            out.e_r.push(er);
            out.e_l.push(el);
        }
        if n == steps {
            break;
        }

        let mut k = [[0.0f64; 5]; 4];
        let mut u_stage = [0.0f64; 4];
        let (mut sphi, mut spj, mut sp0) = (phi, pj, p0);
        for i in 0..4 {
            let f = sys.force(spj, sp0);
            let (u, der, del) = match delayed {
                Some(d) => {
                    let u = f + d[i];
                    (
                        u,
                        sys.quarter_z0 * (u * u - d[i] * d[i]),
                        sys.quarter_z0 * f * f,
                    )
                }
                None => (f, sys.quarter_z0 * f * f, sys.quarter_z0 * f * f),
            };
            u_stage[i] = u;
            k[i] = [(spj + sp0) * sys.inv_cj, -sphi * sys.inv_lj, u, der, del];
            if i < 3 {
                let h = if i == 2 { dt } else { half };
                sphi = phi + h * k[i][0];
                spj = pj + h * k[i][1];
                sp0 = p0 + h * k[i][2];
            }
        }
        let w = dt / 6.0;
        phi += w * (k[0][0] + 2.0 * k[1][0] + 2.0 * k[2][0] + k[3][0]);
        pj += w * (k[0][1] + 2.0 * k[1][1] + 2.0 * k[2][1] + k[3][1]);
        p0 += w * (k[0][2] + 2.0 * k[1][2] + 2.0 * k[2][2] + k[3][2]);
        er += w * (k[0][3] + 2.0 * k[1][3] + 2.0 * k[2][3] + k[3][3]);
        el += w * (k[0][4] + 2.0 * k[1][4] + 2.0 * k[2][4] + k[3][4]);
        if let Some(s) = slot {
            hist[s] = u_stage;
        }

        let eq = qubit_energy(p, phi, pj, p0);
        if e0 > 0.0 && (eq > limit || eq + er + el > limit || !eq.is_finite()) {
            return Err(Error::EnergyGrowth {
                t: (n + 1) as f64 * dt,
                ratio: (eq + er + el) / e0,
            });
        }
    }
    Ok(out)
}

/// Recomputes the energy channels of a fully recorded trajectory: E_q
/// pointwise and E_R, E_L by cumulative fourth-order quadrature of the
/// recorded ṗ_0 series.
pub fn energies(traj: &TrajectoryState, p: &CircuitParams) -> Result<TrajectoryState> {
    if traj.record_every != 1 {
        return Err(Error::InvalidConfig(
            "energy quadrature needs every integration step recorded",
        ));
    }
    let n = traj.len();
    let qz = 0.25 * p.z_0();
    let delayed = |i: usize| match traj.delay_steps {
        Some(m) if i >= m => traj.p_0_dot[i - m],
        _ => 0.0,
    };
    let dr: Vec<f64> = (0..n)
        .map(|i| {
            let (u, d) = (traj.p_0_dot[i], delayed(i));
            qz * (u * u - d * d)
        })
        .collect();
    let dl: Vec<f64> = (0..n)
        .map(|i| {
            let x = traj.p_0_dot[i] - delayed(i);
            qz * x * x
        })
        .collect();
    let mut out = traj.clone();
    out.e_q = (0..n)
        .map(|i| qubit_energy(p, traj.phi_j[i], traj.p_j[i], traj.p_0[i]))
        .collect();
    out.e_r = cumulative_quadrature(&dr, traj.dt);
    out.e_l = cumulative_quadrature(&dl, traj.dt);
    Ok(out)
}

/// Running integral of uniformly sampled data using cubic interpolation on
/// four neighbouring samples per interval.
pub fn cumulative_quadrature(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = alloc::vec![0.0; n];
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (y[i - 1] + y[i]);
        }
        return out;
    }
    for i in 1..n {
        // interval [i−1, i] from a 4-point stencil kept inside the data
        let s = (i as isize - 2).clamp(0, n as isize - 4) as usize;
        let j = i - 1 - s;
        let w: [f64; 4] = match j {
            0 => [9.0, 19.0, -5.0, 1.0],
            1 => [-1.0, 13.0, 13.0, -1.0],
            _ => [1.0, -5.0, 19.0, 9.0],
        };
        let inc = (w[0] * y[s] + w[1] * y[s + 1] + w[2] * y[s + 2] + w[3] * y[s + 3]) * h / 24.0;
        out[i] = out[i - 1] + inc;
    }
    out
}

/// E_DS/E_0 = 1/(1 + Tγ_0/2)² for a transmon placed at a node of its own
/// field, ω_0T = 2πn.
pub fn dark_state_energy(p: &CircuitParams) -> Result<f64> {
    let t = p.mirror_delay()?;
    let d = p.derive();
    let cycles = d.omega_0 * t / (2.0 * PI);
    if (cycles - libm::round(cycles)).abs() > 1e-6 || cycles < 0.5 {
        return Err(Error::NotDarkState { cycles });
    }
    let x = 1.0 + 0.5 * t * d.gamma_0;
    Ok(1.0 / (x * x))
}

/// e^{−γt/2}·cos²(Ωt/2), the two-mode Rabi envelope.
pub fn rabi_envelope(t: f64, gamma: f64, rabi: f64) -> f64 {
    let c = libm::cos(0.5 * rabi * t);
    libm::exp(-0.5 * gamma * t) * c * c
}

/// Largest |E_q(t)/E_q(0) − e^{−γ_J^m t/2}cos²(Ωt/2)| for t ≤ `t_end`.
pub fn rabi_envelope_deviation(
    traj: &TrajectoryState,
    p: &CircuitParams,
    t_end: f64,
) -> Result<f64> {
    let d = p.derive();
    let rabi = d.rabi.ok_or(Error::MirrorRequired)?;
    let e0 = traj.e_q[0];
    Ok(traj
        .t
        .iter()
        .zip(&traj.e_q)
        .take_while(|(&t, _)| t <= t_end)
        .map(|(&t, &e)| (e / e0 - rabi_envelope(t, d.gamma_j_mirror, rabi)).abs())
        .fold(0.0, f64::max))
}

/// Least-squares slope of −ln E_q over [t_from, t_to]; the ripple at twice
/// the transmon frequency averages out over many periods.
pub fn fit_decay_rate(traj: &TrajectoryState, t_from: f64, t_to: f64) -> Option<f64> {
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &e) in traj.t.iter().zip(&traj.e_q) {
        if t < t_from || t > t_to || e <= 0.0 {
            continue;
        }
        let y = libm::log(e);
        n += 1.0;
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
    }
    if n < 3.0 {
        return None;
    }
    let den = n * sxx - sx * sx;
    (den > 0.0).then(|| -(n * sxy - sx * sy) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{dimensionless, Ratios};

    fn fig4() -> CircuitParams {
        dimensionless(&Ratios::new(0.1, 1000.0).cavity(1.0, 1)).unwrap()
    }

    #[test]
    fn initial_energies() {
        let p = fig4();
        let cfg = EmissionConfig::new(&p, 1.0, true);
        let tr = integrate(&p, &cfg).unwrap();
        assert_eq!(tr.e_q[0], 0.5);
        assert_eq!(tr.e_r[0], 0.0);
        assert_eq!(tr.e_l[0], 0.0);
    }

    #[test]
    fn step_limits() {
        let p = fig4();
        let mut cfg = EmissionConfig::new(&p, 1.0, true);
        cfg.dt = p.delay().unwrap() / 150.0;
        assert!(matches!(
            integrate(&p, &cfg),
            Err(Error::StepTooLarge { .. })
        ));
        cfg.dt = p.delay().unwrap() / 400.5;
        assert!(matches!(integrate(&p, &cfg), Err(Error::InvalidConfig(_))));
        let open = p.without_mirror();
        assert!(matches!(integrate(&open, &cfg), Err(Error::MirrorRequired)));
        let mut cfg = EmissionConfig::new(&p, 1.0, false);
        cfg.dt = 2.0 * PI / 100.0;
        assert!(matches!(
            integrate(&p, &cfg),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn open_line_before_first_echo_is_identical() {
        let p = fig4();
        let t = p.delay().unwrap();
        let cfg = EmissionConfig::new(&p, 3.0 * t, true);
        let mirror = integrate(&p, &cfg).unwrap();
        let open = integrate(
            &p,
            &EmissionConfig {
                mirror: false,
                ..cfg
            },
        )
        .unwrap();
        let m = mirror.delay_steps.unwrap();
        for i in 0..=m {
            assert_eq!(mirror.phi_j[i].to_bits(), open.phi_j[i].to_bits());
            assert_eq!(mirror.p_0[i].to_bits(), open.p_0[i].to_bits());
            assert_eq!(mirror.e_r[i].to_bits(), open.e_r[i].to_bits());
        }
        assert_ne!(mirror.phi_j[m + 2], open.phi_j[m + 2]);
    }

    #[test]
    fn flipped_damping_sign_aborts() {
        let p = fig4();
        let cfg = EmissionConfig::new(&p, 2000.0, false);
        let mut sys = System::new(&p);
        sys.two_over_z0 = -sys.two_over_z0;
        assert!(matches!(
            run(&p, &cfg, sys),
            Err(Error::EnergyGrowth { .. })
        ));
        assert!(integrate(&p, &cfg).is_ok());
    }

    #[test]
    fn quadrature_is_fourth_order() {
        let err = |n: usize| {
            let h = 2.0 / n as f64;
            let y: Vec<f64> = (0..=n).map(|i| libm::cos(3.0 * i as f64 * h)).collect();
            let q = cumulative_quadrature(&y, h);
            (q[n] - libm::sin(6.0) / 3.0).abs()
        };
        let ratio = err(64) / err(128);
        assert!(ratio > 14.0, "{ratio}");
    }

    #[test]
    fn recomputed_energies_match_augmented_integration() {
        let p = fig4();
        let cfg = EmissionConfig::new(&p, 30.0, true);
        let tr = integrate(&p, &cfg).unwrap();
        let re = energies(&tr, &p).unwrap();
        for i in 0..tr.len() {
            assert!((re.e_q[i] - tr.e_q[i]).abs() < 1e-15);
            assert!((re.e_r[i] - tr.e_r[i]).abs() < 1e-6);
            assert!((re.e_l[i] - tr.e_l[i]).abs() < 1e-6);
        }
        let sparse = integrate(&p, &cfg.record_every(4)).unwrap();
        assert!(energies(&sparse, &p).is_err());
    }

    #[test]
    fn dark_state_formula() {
        let p = dimensionless(&Ratios::dark_state(0.02 / 0.98, 1000.0, 1)).unwrap();
        let e = dark_state_energy(&p).unwrap();
        assert!((e - 0.374218).abs() < 1e-6);
        assert!(matches!(
            dark_state_energy(&fig4()),
            Err(Error::NotDarkState { .. })
        ));
        // vanishing coupling: no decay
        let p = dimensionless(&Ratios::dark_state(1e-6, 1.0, 1)).unwrap();
        assert!((dark_state_energy(&p).unwrap() - 1.0).abs() < 1e-10);
        // γ_0 T = 2 gives a quarter
        let cc: f64 = 0.1;
        let g0 = 1.0 * cc * cc / (2.0 * (1.0 + cc) * (1.0 + cc));
        let t = 2.0 * PI * (1.0 + cc).sqrt();
        let p = CircuitParams::new(cc, 1.0, 1.0, 2.0 / (g0 * t), Some(t)).unwrap();
        assert!((dark_state_energy(&p).unwrap() - 0.25).abs() < 1e-12);
    }
}

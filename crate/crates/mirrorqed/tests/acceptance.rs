//! Acceptance suite. Each test prints one line per checked quantity and one
//! runtime line, then asserts both. The lines go straight to the stderr
//! handle so they show up even when libtest captures output.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use mirrorqed_core::emission::{self, EmissionConfig};
use mirrorqed_core::fit::fit_resonance;
use mirrorqed_core::grid::{linspace, logspace, refine, transmon_default, Refinement};
use mirrorqed_core::hopfield;
use mirrorqed_core::params::cc_fraction_to_ratio;
use mirrorqed_core::poles::{self, rabi_numeric_vs_analytic};
use mirrorqed_core::scattering::{self, HelperFunctions};
use mirrorqed_core::spectrum::{spectral_peaks, Window};
use mirrorqed_core::{dimensionless, CircuitParams, Ratios};

fn line(id: &str, text: &str, pass: bool) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr().lock(),
        "criterion {id:<3} {verdict}  {text}"
    );
    pass
}

/// `value < tol` with both printed.
fn below(id: &str, what: &str, value: f64, tol: f64) -> bool {
    line(id, &format!("{what}: {value:.3e} < {tol:.1e}"), value < tol)
}

fn runtime(id: &str, start: Instant, budget: f64) -> bool {
    let s = start.elapsed().as_secs_f64();
    line(id, &format!("runtime {s:.2} s < {budget} s"), s < budget)
}

fn fig4() -> CircuitParams {
    dimensionless(&Ratios::new(0.1, 1000.0).cavity(1.0, 1)).unwrap()
}

fn refined(eval: impl Fn(f64) -> f64) -> Vec<f64> {
    refine(&transmon_default(1.0), eval, Refinement::default()).0
}

#[test]
fn criterion_1_passivity_and_unitarity() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut unit, mut ident) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let cc = 10f64.powf(rng.random_range(-3.0..1.0));
        let z0 = 10f64.powf(rng.random_range(-2.0..4.0));
        let w = rng.random_range(0.01..5.0);
        let h = HelperFunctions::new(&dimensionless(&Ratios::new(cc, z0)).unwrap());
        let (r, t) = (h.reflection(w), h.transmission(w));
        unit = unit.max((r.norm_sqr() + t.norm_sqr() - 1.0).abs());
        ident = ident.max((r + 1.0 - t).norm());
    }
    let a = below("1a", "max ||r|²+|t|²−1| over 10⁴ points", unit, 1e-10);
    let b = below("1b", "max |r+1−t| over 10⁴ points", ident, 1e-10);
    let c = runtime("1", start, 1.0);
    assert!(a && b && c);
}

#[test]
fn criterion_2_open_line_widths() {
    let start = Instant::now();
    let cc = cc_fraction_to_ratio(0.1);

    let p = dimensionless(&Ratios::new(cc, 1000.0)).unwrap();
    let h = HelperFunctions::new(&p);
    let g = refined(|w| h.reflection(w).norm());
    let d = p.derive();
    let r = scattering::reflection_open(&p, &g).unwrap();
    let fit = fit_resonance(
        &r,
        d.omega_j - 10.0 * d.gamma_j,
        d.omega_j + 10.0 * d.gamma_j,
    )
    .unwrap();
    let a = below(
        "2a",
        "Z0/ZJ=1000 dip width vs γ_J, relative error",
        (fit.fwhm / d.gamma_j - 1.0).abs(),
        0.05,
    ) && fit.dip;

    let p = dimensionless(&Ratios::new(cc, 0.1)).unwrap();
    let h = HelperFunctions::new(&p);
    let g = refined(|w| h.reflection(w).norm());
    let d = p.derive();
    let r = scattering::reflection_open(&p, &g).unwrap();
    let fit = fit_resonance(
        &r,
        d.omega_0 - 20.0 * d.gamma_0,
        d.omega_0 + 20.0 * d.gamma_0,
    )
    .unwrap();
    let b = below(
        "2b",
        "Z0/ZJ=0.1 peak width vs γ_0, relative error",
        (fit.fwhm / d.gamma_0 - 1.0).abs(),
        0.05,
    ) && !fit.dip;
    let c = runtime("2", start, 5.0);
    assert!(a && b && c);
}

/// The two highest maxima of |f| near ω_J and the local grid spacing there.
fn split_peaks() -> (f64, f64, f64, f64) {
    let p = fig4();
    let g = refined(|w| scattering::trapped_field(&p, &[w]).unwrap().values[0].norm());
    let f = scattering::trapped_field(&p, &g).unwrap();
    let m = f.magnitudes();
    let mut peaks = f.peak_indices();
    peaks.sort_by(|&a, &b| m[b].total_cmp(&m[a]));
    let (mut i, mut j) = (peaks[0], peaks[1]);
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    let cell = |k: usize| (g[k + 1] - g[k]).max(g[k] - g[k - 1]);
    (g[i], g[j], cell(i).max(cell(j)), p.derive().rabi.unwrap())
}

#[test]
fn criterion_3a_vacuum_rabi_splitting() {
    let start = Instant::now();
    let (lo, hi, _, rabi) = split_peaks();
    let a = below(
        "3a",
        &format!(
            "|f| peak separation {:.5} vs Ω {rabi:.5}, relative error",
            hi - lo
        ),
        ((hi - lo) / rabi - 1.0).abs(),
        0.03,
    );
    let b = runtime("3a", start, 10.0);
    assert!(a && b);
}

#[test]
fn criterion_3b_peaks_symmetric_about_omega_j() {
    let start = Instant::now();
    let (lo, hi, cell, _) = split_peaks();
    let offset = (0.5 * (lo + hi) - 1.0).abs();
    let a = line(
        "3b",
        &format!("peak midpoint offset from ω_J: {offset:.3e} ≤ grid cell {cell:.1e}"),
        offset <= cell,
    );
    let b = runtime("3b", start, 10.0);
    assert!(a && b);
}

fn rabi_period(p: &CircuitParams) -> f64 {
    2.0 * PI / p.derive().rabi.unwrap()
}

#[test]
fn criterion_4a_rabi_envelope() {
    let start = Instant::now();
    let p = fig4();
    let t_end = 5.0 * rabi_period(&p);
    let tr = emission::integrate(&p, &EmissionConfig::new(&p, t_end, true)).unwrap();
    let dev = emission::rabi_envelope_deviation(&tr, &p, t_end).unwrap();
    let a = below(
        "4a",
        "max |E_q/E_q(0) − e^{−γt/2}cos²(Ωt/2)| over 5 Rabi periods",
        dev,
        0.05,
    );
    let b = runtime("4a", start, 60.0);
    assert!(a && b);
}

#[test]
fn criterion_4b_energy_conservation() {
    let start = Instant::now();
    let p = fig4();
    let t_end = 5.0 * rabi_period(&p);
    let tr = emission::integrate(&p, &EmissionConfig::new(&p, t_end, true)).unwrap();
    let a = below(
        "4b",
        "relative drift of E_q+E_R+E_L",
        tr.energy_drift(),
        1e-6,
    );
    let b = runtime("4b", start, 60.0);
    assert!(a && b);
}

#[test]
fn criterion_4c_fourth_order_convergence() {
    let start = Instant::now();
    let p = fig4();
    let t = p.delay().unwrap();
    let run = |m: usize| {
        let cfg = EmissionConfig::new(&p, 3.0 * t, true)
            .with_steps_per_delay(&p, m)
            .unwrap()
            .record_every(m / 100);
        emission::integrate(&p, &cfg).unwrap().phi_j
    };
    let (a, b, c) = (run(200), run(400), run(800));
    let diff = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max)
    };
    let order = (diff(&a, &b) / diff(&b, &c)).log2();
    let ok = line(
        "4c",
        &format!("observed order under dt halving {order:.3}, expected 4 ± 0.3"),
        (order - 4.0).abs() < 0.3,
    );
    let r = runtime("4c", start, 60.0);
    assert!(ok && r);
}

#[test]
fn criterion_5_poles_against_simulation() {
    let start = Instant::now();
    let p = fig4();
    let set = poles::find_poles(&p, poles::default_window(&p)).unwrap();
    let (za, zb) = set.pair_near(1.0).unwrap();
    let split_poles = zb.re - za.re;

    let cfg = EmissionConfig::new(&p, 30_000.0, true).record_every(20);
    let tr = emission::integrate(&p, &cfg).unwrap();
    let h = tr.t[1] - tr.t[0];
    let mut pk = spectral_peaks(&tr.phi_j, 0.0, h, 0.95, 1.05, 4001, Window::Rectangular);
    pk.truncate(2);
    pk.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let split_fft = pk[1].omega - pk[0].omega;
    let a = below(
        "5a",
        &format!("FFT splitting {split_fft:.5} vs pole splitting {split_poles:.5}, relative error"),
        (split_fft / split_poles - 1.0).abs(),
        0.02,
    );

    let mut worst: f64 = 0.0;
    for q in &set.poles {
        let width = 2.0 * q.z.im.abs();
        let (lo, hi) = (q.z.re - 5.0 * width, q.z.re + 5.0 * width);
        let f = scattering::trapped_field(&p, &linspace(lo, hi, 2001)).unwrap();
        let fit = fit_resonance(&f, lo, hi).unwrap();
        worst = worst.max((fit.fwhm / width - 1.0).abs());
    }
    let b = below(
        "5b",
        &format!(
            "{} pole widths vs Lorentzian fits of |f|², worst relative error",
            set.poles.len()
        ),
        worst,
        0.05,
    );
    let c = runtime("5", start, 30.0);
    assert!(a && b && c);
}

#[test]
fn criterion_6_dark_state_plateau() {
    let start = Instant::now();
    let p = dimensionless(&Ratios::dark_state(cc_fraction_to_ratio(0.02), 1000.0, 1)).unwrap();
    let expected = emission::dark_state_energy(&p).unwrap();
    let t_end = 20_000.0;
    let tr =
        emission::integrate(&p, &EmissionConfig::new(&p, t_end, true).record_every(10)).unwrap();
    let late: Vec<f64> =
        tr.t.iter()
            .zip(&tr.e_q)
            .filter(|(&t, _)| t >= 0.9 * t_end)
            .map(|(_, &e)| e)
            .collect();
    let plateau = late.iter().sum::<f64>() / late.len() as f64 / tr.e_q[0];
    let a = below(
        "6",
        &format!("plateau {plateau:.6} vs 1/(1+Tγ_0/2)² = {expected:.6}, relative error"),
        (plateau / expected - 1.0).abs(),
        0.02,
    );
    let b = runtime("6", start, 60.0);
    assert!(a && b);
}

#[test]
fn criterion_7_rabi_error_trend() {
    let start = Instant::now();
    let zs = logspace(1.0, 4.0, 7);
    let mut all = true;
    for cc in [0.01, 0.05, 0.3] {
        let rows = rabi_numeric_vs_analytic(&[cc], &zs).unwrap();
        let errs: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| Some((r.cc_over_cj * r.z0_over_zj, r.relative_error?)))
            .collect();
        let monotone = errs.len() >= 3 && errs.windows(2).all(|w| w[1].1 < w[0].1);
        let listing: Vec<String> = errs
            .iter()
            .map(|(x, e)| format!("{x:.3}:{e:.2e}"))
            .collect();
        all &= line(
            &format!(
                "7{}",
                if cc == 0.01 {
                    'a'
                } else if cc == 0.05 {
                    'b'
                } else {
                    'c'
                }
            ),
            &format!(
                "C_c/C_J={cc}: |Ω^N−Ω^A|/Ω^A strictly decreasing over {} resolved points [{}]",
                errs.len(),
                listing.join(" ")
            ),
            monotone,
        );
    }
    let r = runtime("7", start, 120.0);
    assert!(all && r);
}

fn fig5() -> (CircuitParams, hopfield::Overlay) {
    let p = dimensionless(&Ratios::new(0.3, 100.0)).unwrap();
    let t_grid = linspace(4.0, 14.0, 101);
    let freq = linspace(0.2, 2.5, 4001);
    let ov = hopfield::overlay(&p, 8, &t_grid, &freq).unwrap();
    (p, ov)
}

#[test]
fn criterion_8a_ridges_on_eigenfrequencies() {
    let start = Instant::now();
    let (_, ov) = fig5();
    let a = line(
        "8a",
        &format!(
            "{}/{} |f| ridges within one cell of an eigenfrequency, worst {:.2} cells",
            ov.within(1.0),
            ov.ridges(),
            ov.max_distance()
        ),
        ov.max_distance() <= 1.0,
    );
    let b = runtime("8a", start, 120.0);
    assert!(a && b);
}

#[test]
fn criterion_8b_bosonicity() {
    let start = Instant::now();
    let (_, ov) = fig5();
    let a = below(
        "8b",
        "max |bosonicity − 1|",
        ov.max_bosonicity_error(),
        1e-8,
    );
    let b = runtime("8b", start, 120.0);
    assert!(a && b);
}

#[test]
fn criterion_9_no_purcell_off_resonance() {
    let start = Instant::now();
    let base = dimensionless(&Ratios::new(0.1, 1000.0)).unwrap();
    let gamma = base.derive().gamma_j_mirror;
    let t_end = 3.0 / gamma;
    let mut rates = Vec::new();
    for cycles in [1.1111, 1.5, 2.5, 3.3333] {
        let p = base.with_delay(2.0 * PI * cycles).unwrap();
        let tr = emission::integrate(&p, &EmissionConfig::new(&p, t_end, true).record_every(10))
            .unwrap();
        let t = p.delay().unwrap();
        rates.push(emission::fit_decay_rate(&tr, 2.0 * t, t_end).unwrap());
    }
    let worst = rates
        .iter()
        .map(|r| (r / gamma - 1.0).abs())
        .fold(0.0, f64::max);
    let listing: Vec<String> = rates.iter().map(|r| format!("{r:.5}")).collect();
    let a = below(
        "9",
        &format!(
            "decay rates [{}] for ω_J T/2π from 1.11 to 3.33 vs γ_J^m = {gamma}, worst relative error",
            listing.join(" ")
        ),
        worst,
        0.05,
    );
    let b = runtime("9", start, 60.0);
    assert!(a && b);
}

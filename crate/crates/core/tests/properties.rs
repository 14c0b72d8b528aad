use mirrorqed_core::convention::Convention;
use mirrorqed_core::hopfield;
use mirrorqed_core::poles::{self, Characteristic, Rect};
use mirrorqed_core::scattering::{self, HelperFunctions};
use mirrorqed_core::{dimensionless, CircuitParams, Ratios};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = CircuitParams> {
    (1e-3f64..2.0, 0.05f64..5000.0).prop_map(|(cc, z)| dimensionless(&Ratios::new(cc, z)).unwrap())
}

fn mirrored() -> impl Strategy<Value = CircuitParams> {
    (0.01f64..0.5, 10.0f64..3000.0, 3.0f64..15.0)
        .prop_map(|(cc, z, t)| dimensionless(&Ratios::new(cc, z).delay(t)).unwrap())
}

proptest! {
    #[test]
    fn unit_system_is_normalized(cc in 1e-4f64..10.0, z in 1e-2f64..1e4, n in 1u32..5) {
        let d = dimensionless(&Ratios::new(cc, z).cavity(1.0, n)).unwrap().derive();
        prop_assert!((d.omega_j - 1.0).abs() < 1e-12);
        prop_assert!((d.z_j - 1.0).abs() < 1e-12);
        prop_assert!(d.omega_0 < d.omega_j);
        prop_assert_eq!(d.gamma_j_mirror, d.gamma_j / 2.0);
    }

    #[test]
    fn emission_rate_forms_agree(
        cc in 1e-3f64..1.0, cj in 0.1f64..10.0, lj in 0.1f64..10.0, z in 0.01f64..1e4,
    ) {
        let p = CircuitParams::new(cc, cj, lj, z, None).unwrap();
        let d = p.derive();
        let alt = mirrorqed_core::DerivedScales::gamma_0_alt(&p);
        prop_assert!((d.gamma_0 - alt).abs() <= 1e-12 * d.gamma_0);
        // γ_0/γ_J in impedance and capacitance ratios
        let ratio = (z / d.z_j).powi(2) * (cc / cj).powi(2) * (cj / (cj + cc)).powi(2) / 4.0;
        prop_assert!((d.gamma_0 / d.gamma_j - ratio).abs() <= 1e-10 * ratio);
    }

    #[test]
    fn omega_0_decreases_with_coupling(cc in 1e-3f64..5.0, dc in 1e-6f64..1.0) {
        let a = CircuitParams::new(cc, 1.0, 1.0, 1.0, None).unwrap();
        let b = CircuitParams::new(cc + dc, 1.0, 1.0, 1.0, None).unwrap();
        prop_assert!(b.omega_0() < a.omega_0());
    }

    #[test]
    fn open_line_is_lossless(p in params(), w in 1e-3f64..5.0) {
        let h = HelperFunctions::new(&p);
        let (r, t) = (h.reflection(w), h.transmission(w));
        prop_assert!((r + 1.0 - t).norm() < 1e-12);
        prop_assert!((r.norm_sqr() + t.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!(r.norm() <= 1.0 + 1e-12);
        prop_assert!((h.n(w) - (h.r0(w) - num_complex::Complex64::i() * h.rj(w))).norm() == 0.0);
    }

    #[test]
    fn terminated_line_reflects_everything(p in mirrored(), w in 0.05f64..4.0) {
        let g = scattering::mirror_reflection(&p, &[w]).unwrap();
        prop_assert!((g.values[0].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hopfield_pairs_and_bosonicity(p in mirrored(), n in 1usize..10) {
        let s = hopfield::diagonalize(&hopfield::build(&p, n).unwrap()).unwrap();
        prop_assert!(s.complex_eigenvalues.is_empty());
        prop_assert_eq!(s.eigenfrequencies.len(), 2 * n + 2);
        prop_assert!(s.pairing_error() < 1e-10);
        for (w, b) in s.eigenfrequencies.iter().zip(&s.bosonicity) {
            if *w > 0.0 {
                prop_assert!((b - 1.0).abs() < 1e-8);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn poles_are_zeros_on_the_decaying_side(p in mirrored()) {
        let set = poles::find_poles(&p, poles::default_window(&p)).unwrap();
        let d = Characteristic::new(&p);
        prop_assert_eq!(set.method_report.winding as usize, set.poles.len());
        for q in &set.poles {
            prop_assert!(d.eval(q.z).norm() < 1e-10 * d.scale(q.z));
            prop_assert!(q.z.im <= 1e-12);
            // partner −z̄ is a zero as well
            let partner = -q.z.conj();
            prop_assert!(d.eval(partner).norm() < 1e-10 * d.scale(partner));
        }
        let flipped = set.clone().with_convention(Convention::ExpPlusIwt);
        for (a, b) in set.poles.iter().zip(&flipped.poles) {
            prop_assert_eq!(a.z.re, b.z.re);
            prop_assert_eq!(a.z.im, -b.z.im);
        }
    }

    #[test]
    fn window_count_matches_subdivision(p in mirrored(), lo in 0.5f64..1.5, width in 0.2f64..1.5) {
        let r = Rect::new(lo, lo + width, -0.2, 0.0);
        let set = poles::find_poles(&p, r).unwrap();
        prop_assert_eq!(set.method_report.winding as usize, set.poles.len());
    }
}

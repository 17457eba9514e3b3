//! Property tests for the invariants that hold across parameter ranges.

use freebound::analysis::{classify, FluxEntry, FluxProfile, Thresholds};
use freebound::config::RunConfig;
use freebound::geometry::{MeridianDomain, SegmentTag};
use freebound::io::num;
use freebound::mesh::parse_field_csv;
use freebound::radial::barrier::{barrier_potential, delta_max, BarrierParams};
use freebound::radial::ProblemParams;
use freebound::solver::Regularized;
use proptest::prelude::*;

fn exponents() -> impl Strategy<Value = (f64, f64)> {
    (0.02f64..0.6, 0.02f64..0.3).prop_map(|(a, gap)| (a, (a + gap).min(0.95)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn potential_vanishes_at_its_root((a, b) in exponents(), lam in 0.1f64..10.0) {
        let s = delta_max(a, b, lam);
        let scale = s.powf(a + 1.0) / (a + 1.0);
        prop_assert!(barrier_potential(s, a, b, lam).abs() <= 1e-12 * scale);
        prop_assert!(barrier_potential(0.5 * s, a, b, lam) > 0.0);
        // doubling λ₀ scales the root by 2^{-1/(β-α)}
        let ratio = delta_max(a, b, 2.0 * lam) / s;
        prop_assert!((ratio - 2f64.powf(-1.0 / (b - a))).abs() <= 1e-12 * ratio);
    }

    #[test]
    fn energy_is_affine_decreasing_in_lambda(u in prop::collection::vec(0.0f64..2.0, 8), l1 in 0.1f64..3.0, dl in 0.1f64..3.0) {
        // E_λ(u) at three equally spaced λ: second difference zero, first negative
        let d = MeridianDomain::ball(1.0).unwrap();
        let m = freebound::mesh::mesh_meridian(&d, 0.25).unwrap();
        let a = freebound::fem::assemble(&m, 4);
        let field: Vec<f64> = (0..m.n_vertices()).map(|i| if m.dirichlet[i] { 0.0 } else { u[i % u.len()] }).collect();
        let e = |lam: f64| a.energy(&field, &ProblemParams::new(4, 0.1, 0.2, lam).unwrap());
        let (e0, e1, e2) = (e(l1), e(l1 + dl), e(l1 + 2.0 * dl));
        let scale = e0.abs() + e1.abs() + e2.abs();
        prop_assert!((e0 - 2.0 * e1 + e2).abs() <= 1e-12 * scale);
        if field.iter().any(|&x| x > 0.0) {
            prop_assert!(e1 < e0);
        }
    }

    #[test]
    fn regularized_reaction_is_odd_and_converges(u in 1e-3f64..5.0, lam in 0.5f64..4.0) {
        let r = Regularized { lambda: lam, alpha: 0.1, beta: 0.2, eps: 1e-9 };
        prop_assert_eq!(r.f(-u), -r.f(u));
        let exact = ProblemParams::new(4, 0.1, 0.2, lam).unwrap().reaction(u);
        prop_assert!((r.f(u) - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
    }

    #[test]
    fn csv_numbers_round_trip_to_twelve_digits(x in prop::num::f64::NORMAL) {
        let s = num(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-12 * x.abs());
        prop_assert_eq!(num(back), s);
    }

    #[test]
    fn field_csv_round_trip(v in prop::collection::vec(-1e3f64..1e3, 1..40)) {
        let d = MeridianDomain::ball(1.0).unwrap();
        let m = freebound::mesh::mesh_meridian(&d, 0.25).unwrap();
        let field: Vec<f64> = (0..m.n_vertices()).map(|i| v[i % v.len()]).collect();
        let back = parse_field_csv(&m.field_csv(&field)).unwrap();
        prop_assert_eq!(back.len(), field.len());
        for (a, b) in back.iter().zip(&field) {
            prop_assert!((a - b).abs() <= 5e-12 * b.abs());
        }
    }

    #[test]
    fn classification_is_scale_invariant(v in prop::collection::vec(prop_oneof![Just(0.0), -2.0f64..-0.01], 10..80), c in 1e-3f64..1e3) {
        let f = FluxProfile { entries: v.iter().enumerate().map(|(i, &x)| FluxEntry {
            arc_length: i as f64 + 0.5, length: 1.0, flux: x, ends: [x, x],
            position: [1.0, 0.0], normal: [1.0, 0.0], x_dot_nu: 1.0, tag: SegmentTag::Ball,
        }).collect() };
        // a purely relative threshold set
        let th = Thresholds { tau_abs: 0.0, ..Default::default() };
        let a = classify(&f, &th);
        let b = classify(&f.scaled(c), &th);
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert_eq!(a.zero_set_arc_fraction, b.zero_set_arc_fraction);
        prop_assert_eq!(a.zero_arcs, b.zero_arcs);
    }

    #[test]
    fn config_round_trips(h in 0.01f64..0.2, seed in 0..=i64::MAX as u64, steps in 1usize..20, ms in 1usize..10) {
        let mut c = RunConfig::default();
        c.mesh.h = h;
        c.seed = Some(seed);
        c.sweep.steps = steps;
        c.solver.multistart_count = ms;
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn barrier_profile_invariants(lam0 in 1.0f64..6.0, frac in 0.3f64..0.95) {
        let (a, b) = (0.1, 0.2);
        let p = ProblemParams::new(4, a, b, lam0).unwrap();
        let bp = BarrierParams::new(&p, lam0, frac * delta_max(a, b, lam0), 1.5).unwrap();
        let prof = bp.profile_w(64).unwrap();
        let scale = bp.potential(0.5 * bp.delta);
        for w in prof.values.windows(2) {
            prop_assert!(w[1] < w[0]);
        }
        for (&w, &d) in prof.values.iter().zip(&prof.derivs) {
            prop_assert!((0.5 * d * d - bp.potential(w)).abs() <= 1e-8 * scale);
        }
        prop_assert_eq!(*prof.values.last().unwrap(), 0.0);
        prop_assert_eq!(bp.w(bp.edge_constant + 1.0).unwrap(), 0.0);
        for k in 1..20 {
            let r = bp.l0 + (bp.l1 - bp.l0) * k as f64 / 20.0;
            prop_assert!(bp.supersolution_residual(r).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn dumbbells_are_star_shaped(r in 0.2f64..0.9, fl in 0.05f64..0.3, extra in 0.3f64..2.0) {
        let Ok(d) = MeridianDomain::dumbbell(r, 1.6 + extra, fl) else {
            // fillet too long for this radius
            return Ok(());
        };
        let samples = d.boundary_samples(4000);
        let min = samples.iter().map(|s| s.x_dot_nu()).fold(f64::INFINITY, f64::min);
        prop_assert!(min > 0.0);
        for s in &samples {
            prop_assert!((s.normal[0].hypot(s.normal[1]) - 1.0).abs() <= 1e-12);
            prop_assert!(s.position[0] >= -1e-12);
        }
        let total: f64 = d.segment_lengths().iter().map(|x| x.1).sum();
        prop_assert!((total - d.total_length()).abs() <= 1e-10);
        prop_assert!(d.contains(0.0, 0.0));
        prop_assert!(d.contains(0.9 * r, 0.5 * (1.6 + extra)));
        prop_assert!(!d.contains(2.0, 0.0));
        for j in d.curvature_jumps() {
            prop_assert!(j.1 <= 1e-8);
        }
    }
}

use std::f64::consts::{PI, TAU};

use holonomy_core::axioms::trial_rng;
use holonomy_core::bundle::{BundleFunctor, BundleTransport};
use holonomy_core::catalog::{circle_flat, sphere_monopole, torus_global_b, Params, StandardMap};
use holonomy_core::gerbe::{GerbeFunctor, GerbeTransport};
use holonomy_core::numerics::{integrate_1d, QuadConfig};
use holonomy_core::partition::{
    build_loop_partition, build_path_partition, build_surface_partition, SurfaceObject,
};
use holonomy_core::{Orientation, Phase};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flat_circle_holonomy_is_the_difference_of_constants(ar in -3.0..3.0f64, al in -3.0..3.0f64, w in prop::sample::select(vec![-2i32, -1, 1, 2])) {
        let e = circle_flat(ar, al).unwrap();
        let StandardMap::Loop(ell) = e.map("circle", &[("winding".to_string(), w as f64)].into()).unwrap() else { unreachable!() };
        let t = build_loop_partition(&ell, &e.cover, 32).unwrap();
        let z = BundleTransport::new(e.bundle.clone().unwrap(), QuadConfig::default());
        let got = z.z_loop(&ell, &t).unwrap();
        prop_assert!(got.distance(Phase::from_angle(w as f64 * (ar - al))) < 1e-12);
    }

    #[test]
    fn monopole_paths_are_invariant_under_resampling(seed in any::<u64>(), n1 in 6usize..40, n2 in 6usize..40) {
        let e = sphere_monopole(2).unwrap();
        let p = e.random_path(&mut trial_rng(seed, 0));
        let z = BundleTransport::new(e.bundle.clone().unwrap(), QuadConfig::default());
        let t1 = build_path_partition(&p, &e.cover, n1).unwrap();
        let t2 = build_path_partition(&p, &e.cover, n2).unwrap();
        // end labels may differ between the two partitions
        let (a, b) = (p.eval(p.start()), p.eval(p.end()));
        let fix = z.z_point(&a, Orientation::Negative, t1.first_label(), t2.first_label()).unwrap()
            + z.z_point(&b, Orientation::Positive, t1.last_label(), t2.last_label()).unwrap();
        prop_assert!(z.z_path(&p, &t2).unwrap().distance(z.z_path(&p, &t1).unwrap() + fix) < 1e-8);
    }

    #[test]
    fn loop_phase_ignores_the_start_angle(seed in any::<u64>(), start in 0.0..TAU) {
        let e = sphere_monopole(1).unwrap();
        let ell = e.random_loop(&mut trial_rng(seed, 0));
        let z = BundleTransport::new(e.bundle.clone().unwrap(), QuadConfig::default());
        let t = build_loop_partition(&ell, &e.cover, 48).unwrap();
        let forward = z.z_loop(&ell, &t).unwrap();
        let moved = z.z_loop(&ell, &t.rotated_start(start)).unwrap();
        prop_assert!(forward.distance(moved) < 1e-8);
    }

    #[test]
    fn global_b_torus_phase_scales_with_theta(theta in -4.0..4.0f64, res in 4usize..10) {
        let e = torus_global_b(theta).unwrap();
        let StandardMap::Surface { map, domain } = e.map("torus", &Params::new()).unwrap() else { unreachable!() };
        let t = build_surface_partition(&map, domain, &e.cover, (res, res)).unwrap();
        let z = GerbeTransport::new(e.gerbe.clone().unwrap(), QuadConfig::default());
        let so = SurfaceObject::new(map, t);
        let got = z.z_surface(&so).unwrap();
        prop_assert!(got.distance(Phase::from_angle(theta)) < 1e-8, "{got:?} vs {theta}");
        prop_assert!((z.z_surface(&so.reversed()).unwrap() + got).distance(Phase::ZERO) < 1e-12);
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1(n in 2usize..12, a in -2.0..0.0f64, b in 0.1..2.0f64) {
        let deg = 2 * n as i32 - 1;
        let got = integrate_1d(|x| x.powi(deg), a, b, n, &QuadConfig::plain(n)).unwrap().value;
        let want = (b.powi(deg + 1) - a.powi(deg + 1)) / (deg + 1) as f64;
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn equator_phase_is_pi_times_charge_for_any_sample_count() {
    for n in [-3i64, -1, 1, 4] {
        let e = sphere_monopole(n).unwrap();
        let StandardMap::Loop(ell) = e.map("equator", &Params::new()).unwrap() else {
            unreachable!()
        };
        let z = BundleTransport::new(e.bundle.clone().unwrap(), QuadConfig::default());
        for samples in [8, 13, 64] {
            let t = build_loop_partition(&ell, &e.cover, samples).unwrap();
            assert!(
                z.z_loop(&ell, &t)
                    .unwrap()
                    .distance(Phase::from_angle(PI * n as f64))
                    < 1e-9
            );
        }
    }
}

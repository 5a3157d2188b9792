use lieflow_core::circle_diff::{
    apply_ak, b_k, breaking_time, burgers_exact, hk_inner, invert_ak, lie_bracket, GeodesicFlow, MetricOrder,
    PeriodicField,
};
use lieflow_core::euler_arnold::{AlgebraSpec, AlgebraVector, InertiaMap};
use lieflow_core::lie_core::{bracket, coadjoint, hat, vee, Covector, RotationMatrix, SkewMatrix};
use lieflow_core::rigid_body::{BodyState, Integrator, MomentMatrix, RigidBody};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn band_limited(seed: u64, n: usize, modes: usize) -> PeriodicField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cos: Vec<f64> = (0..=modes)
        .map(|m| rng.gen_range(-1.0..1.0) / (1.0 + m as f64))
        .collect();
    let sin: Vec<f64> = (0..=modes)
        .map(|m| rng.gen_range(-1.0..1.0) / (1.0 + m as f64))
        .collect();
    PeriodicField::from_modes(n, &cos, &sin).unwrap()
}

fn skew(rng: &mut ChaCha8Rng, n: usize) -> SkewMatrix {
    let coords: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SkewMatrix::from_coords(n, &coords).unwrap()
}

fn rotation(rng: &mut ChaCha8Rng, n: usize) -> RotationMatrix {
    let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
    let q = if q.determinant() < 0.0 {
        let mut q = q;
        q.column_mut(0).neg_mut();
        q
    } else {
        q
    };
    RotationMatrix::from_matrix(q).unwrap()
}

fn poisson_kernel(n: usize, r: f64, a: f64) -> PeriodicField {
    PeriodicField::from_fn(n, |x| a * (r * x.cos() - r * r) / (1.0 - 2.0 * r * x.cos() + r * r)).unwrap()
}

fn ch_run(n: usize, t_end: f64) -> PeriodicField {
    let mut flow = GeodesicFlow::new(poisson_kernel(n, 0.7, 0.05), 1, 1e-3).unwrap();
    flow.run_until(t_end, |_| {}).unwrap();
    flow.u().clone()
}

#[test]
fn spectral_convergence_on_analytic_data() {
    let reference = ch_run(512, 0.5);
    let err = |n: usize| (&ch_run(n, 0.5).resample(512).unwrap() - &reference).max_abs();
    let (coarse, fine) = (err(128), err(256));
    assert!(coarse >= 1e4 * fine, "N=128 error {coarse:.3e}, N=256 error {fine:.3e}");
}

#[test]
fn burgers_spectral_matches_characteristics() {
    let u0 = PeriodicField::from_fn(256, |x| 0.1 * x.sin()).unwrap();
    let t = 0.5 * breaking_time(&u0);
    let mut flow = GeodesicFlow::new(u0.clone(), 0, 1e-4).unwrap();
    flow.run_until(t, |_| {}).unwrap();
    let exact = burgers_exact(&u0, t).unwrap();
    let err = (flow.u() - &exact).max_abs();
    assert!(err <= 1e-6, "sup error {err:.3e}");
}

#[test]
fn rigid_body_so3_matches_generic_machinery() {
    let j = MomentMatrix::diagonal(&[0.7, 1.3, 2.1]).unwrap();
    let body = RigidBody::new(j.clone()).unwrap();
    let spec = AlgebraSpec::so3().unwrap();
    let a = InertiaMap::rigid_body(&spec, &j).unwrap();
    let omega = hat(&[0.3, -0.5, 0.8]).unwrap();
    let mut state = BodyState::at_identity(omega.clone());
    let mut w = spec.from_matrix(&omega).unwrap();
    for _ in 0..500 {
        state = body.step(&state, 1e-3, Integrator::Rk4).unwrap();
        w = lieflow_core::euler_arnold::step_velocity(&spec, &a, &w, 1e-3).unwrap();
    }
    let diff = (vee(&state.omega).unwrap() - vee(&spec.to_matrix(&w).unwrap()).unwrap()).norm();
    assert!(diff <= 1e-12, "{diff:.3e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_jacobi_and_antisymmetry(seed in any::<u64>(), n in 3usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (skew(&mut rng, n), skew(&mut rng, n), skew(&mut rng, n));
        let ab = bracket(&a, &b).unwrap();
        prop_assert!((&ab + &bracket(&b, &a).unwrap()).norm() <= 1e-14);
        let jac = &(&bracket(&a, &bracket(&b, &c).unwrap()).unwrap() + &bracket(&b, &bracket(&c, &a).unwrap()).unwrap())
            + &bracket(&c, &ab).unwrap();
        prop_assert!(jac.norm() <= 1e-13);
    }

    #[test]
    fn coadjoint_action_is_a_homomorphism(seed in any::<u64>(), n in 3usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, h) = (rotation(&mut rng, n), rotation(&mut rng, n));
        let m = Covector::from_skew(skew(&mut rng, n));
        let gh = g.compose(&h).unwrap();
        let lhs = coadjoint(&gh, &m).unwrap();
        let rhs = coadjoint(&g, &coadjoint(&h, &m).unwrap()).unwrap();
        prop_assert!((lhs.as_matrix() - rhs.as_matrix()).norm() <= 1e-13);
    }

    #[test]
    fn rigid_energy_conserved_on_short_runs(seed in any::<u64>(), n in 3usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
        let body = RigidBody::new(MomentMatrix::diagonal(&diag).unwrap()).unwrap();
        let w = skew(&mut rng, n);
        let w = &w * (1.0 / w.norm());
        let mut state = BodyState::at_identity(w);
        let e0 = body.energy(&state).unwrap();
        for _ in 0..200 {
            state = body.step(&state, 1e-3, Integrator::CayleyLieGroup).unwrap();
        }
        prop_assert!((body.energy(&state).unwrap() - e0).abs() <= 1e-10 * e0);
        prop_assert!(state.g.orthogonality_error() <= 1e-12);
    }

    #[test]
    fn hk_inner_is_symmetric_and_bk_is_adjoint(seed in any::<u64>(), k in 0usize..3) {
        let (u, v, w) = (band_limited(seed, 128, 16), band_limited(seed ^ 1, 128, 16), band_limited(seed ^ 2, 128, 16));
        let uv = hk_inner(&u, &v, k).unwrap();
        let vu = hk_inner(&v, &u, k).unwrap();
        prop_assert!((uv - vu).abs() <= 1e-11 * (1.0 + uv.abs()));
        let lhs = hk_inner(&b_k(&u, &v, k).unwrap(), &w, k).unwrap();
        let rhs = hk_inner(&u, &lie_bracket(&v, &w).unwrap(), k).unwrap();
        let scale = apply_ak(&u, k).unwrap().max_abs() * v.dx().max_abs().max(1.0) * w.dx().max_abs().max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * scale);
    }

    #[test]
    fn ak_inverse_round_trip(seed in any::<u64>(), k in 0usize..4) {
        let u = band_limited(seed, 64, 6);
        let back = apply_ak(&invert_ak(&u, k).unwrap(), k).unwrap();
        // round-off is amplified by the multiplier at the top mode
        let cond = MetricOrder::new(k).unwrap().multiplier(6.0);
        prop_assert!((&back - &u).max_abs() <= 1e-15 * cond * (1.0 + u.max_abs()));
    }

    #[test]
    fn breaking_time_scales_inversely(seed in any::<u64>(), lambda in 0.1f64..10.0) {
        let u = band_limited(seed, 64, 5);
        let t = breaking_time(&u);
        prop_assume!(t.is_finite());
        let scaled = breaking_time(&u.scale(lambda));
        prop_assert!((scaled * lambda - t).abs() <= 1e-9 * t);
    }

    #[test]
    fn generic_euler_arnold_matches_rigid_body(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let diag: Vec<f64> = (0..4).map(|_| rng.gen_range(0.5..3.0)).collect();
        let j = MomentMatrix::diagonal(&diag).unwrap();
        let body = RigidBody::new(j.clone()).unwrap();
        let spec = AlgebraSpec::so_n(4).unwrap();
        let a = InertiaMap::rigid_body(&spec, &j).unwrap();
        let omega = skew(&mut rng, 4);
        let mut state = BodyState::at_identity(omega.clone());
        let mut w: AlgebraVector = spec.from_matrix(&omega).unwrap();
        for _ in 0..100 {
            state = body.step(&state, 1e-3, Integrator::Rk4).unwrap();
            w = lieflow_core::euler_arnold::step_velocity(&spec, &a, &w, 1e-3).unwrap();
        }
        let other = spec.to_matrix(&w).unwrap();
        prop_assert!((state.omega.as_matrix() - other.as_matrix()).norm() <= 1e-12);
    }
}

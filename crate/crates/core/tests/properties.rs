use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use labgauge_core::exprfield::{Chart, Evaluator};
use labgauge_core::forms::{
    ext_cov_deriv, hodge_star_scalar, metric_pairing, pullback_form, wedge_bracket, Connection, KForm, ScalarForm,
};
use labgauge_core::gauge::{field_strength, form_residual, gauge_variation_a};
use labgauge_core::liecore::LieAlgebra;
use labgauge_core::random::{self, SWEEP_ALGEBRAS};
use labgauge_core::redef::apply_redefinition;
use labgauge_core::tolerance::relative;

fn algebra(index: usize) -> Arc<LieAlgebra> {
    Arc::new(LieAlgebra::named(SWEEP_ALGEBRAS[index % 3]).unwrap())
}

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, dim)
}

fn signs(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1.0 } else { -1.0 }), dim)
}

fn max_gap(a: &ScalarForm, b: &ScalarForm, point: &[f64]) -> f64 {
    let mut ev = Evaluator::new(point);
    a.eval(&mut ev)
        .unwrap()
        .iter()
        .zip(b.eval(&mut ev).unwrap())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric_and_jacobi(k in 0usize..3, u in vector(4), v in vector(4), w in vector(4)) {
        let alg = algebra(k);
        let n = alg.dim();
        let (u, v, w) = (&u[..n], &v[..n], &w[..n]);
        let uv = alg.bracket(u, v).unwrap();
        let vu = alg.bracket(v, u).unwrap();
        prop_assert!(uv.iter().zip(&vu).all(|(a, b)| (a + b).abs() < 1e-14));
        let cyc: Vec<f64> = (0..n)
            .map(|a| {
                alg.bracket(u, &alg.bracket(v, w).unwrap()).unwrap()[a]
                    + alg.bracket(v, &alg.bracket(w, u).unwrap()).unwrap()[a]
                    + alg.bracket(w, &alg.bracket(u, v).unwrap()).unwrap()[a]
            })
            .collect();
        prop_assert!(cyc.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn star_pairing_matches_metric(seed in any::<u64>(), eta in signs(4), k in 0usize..5, p in vector(4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::scalar_form(&mut rng, 4, k);
        let b = random::scalar_form(&mut rng, 4, k);
        let top = a.wedge(&hodge_star_scalar(&eta, &b).unwrap());
        let lhs = top.components()[0].eval(&p).unwrap();
        let rhs = metric_pairing(&eta, &a, &b).unwrap().eval(&p).unwrap();
        prop_assert!(relative(lhs, rhs) < 1e-12);
    }

    #[test]
    fn double_star_is_signed_identity(seed in any::<u64>(), eta in signs(4), k in 0usize..5, p in vector(4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::scalar_form(&mut rng, 4, k);
        let twice = hodge_star_scalar(&eta, &hodge_star_scalar(&eta, &a).unwrap()).unwrap();
        let det: f64 = eta.iter().product();
        let sign = det * if (k * (4 - k)) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(max_gap(&twice, &a.scale(sign), &p) < 1e-12);
    }

    #[test]
    fn exterior_derivative_squares_to_zero(seed in any::<u64>(), k in 0usize..3, p in vector(4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::scalar_form(&mut rng, 4, k);
        prop_assert!(max_gap(&a.d().d(), &ScalarForm::zero(4, k + 2), &p) < 1e-12);
    }

    #[test]
    fn wedge_is_graded_commutative(seed in any::<u64>(), l in 0usize..3, k in 0usize..3, p in vector(4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::scalar_form(&mut rng, 4, l);
        let b = random::scalar_form(&mut rng, 4, k);
        let sign = if (l * k) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(max_gap(&a.wedge(&b), &b.wedge(&a).scale(sign), &p) < 1e-12);
    }

    #[test]
    fn relative_residual_is_symmetric_and_bounded(a in -1e6..1e6f64, b in -1e6..1e6f64) {
        let r = relative(a, b);
        prop_assert_eq!(r, relative(b, a));
        prop_assert!((0.0..=2.0).contains(&r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn inner_connections_are_flat_up_to_twist(seed in any::<u64>(), k in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chart = Arc::new(Chart::euclidean(3));
        let (nabla, lambda) = random::inner_connection(&mut rng, &chart, &algebra(k));
        let twist = ext_cov_deriv(&Connection::flat(chart.clone(), algebra(k)), &lambda)
            .unwrap()
            .neg()
            .add(&wedge_bracket(&lambda, &lambda).unwrap().scale(0.5))
            .unwrap();
        let points = random::points(&mut rng, &chart, 5);
        let residual = labgauge_core::redef::check_compat_curvature(&nabla, &twist, &points).unwrap();
        prop_assert!(residual < 1e-10, "residual {}", residual);
    }

    #[test]
    fn redefinition_round_trip_and_invariance(seed in any::<u64>(), k in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random::compatible_scenario(&mut rng, SWEEP_ALGEBRAS[k]).unwrap();
        let lambda: KForm = random::form(&mut rng, &s.target, &s.algebra, 1);
        let there = apply_redefinition(&s, &lambda).unwrap();
        let back = apply_redefinition(&there, &lambda.neg()).unwrap();
        let sp = random::points(&mut rng, &s.spacetime, 5);
        let tp = random::points(&mut rng, &s.target, 5);
        prop_assert!(form_residual(&s.twist, &back.twist, &tp).unwrap().relative < 1e-9);
        prop_assert!(form_residual(&s.gauge_field, &back.gauge_field, &sp).unwrap().relative < 1e-9);
        let g = form_residual(&field_strength(&s).unwrap(), &field_strength(&there).unwrap(), &sp).unwrap();
        prop_assert!(g.relative < 1e-8);
    }

    #[test]
    fn field_strength_is_additive_in_twist(seed in any::<u64>(), k in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random::compatible_scenario(&mut rng, SWEEP_ALGEBRAS[k]).unwrap();
        let extra = random::form(&mut rng, &s.target, &s.algebra, 2);
        let mut shifted = s.clone();
        shifted.twist = s.twist.add(&extra).unwrap();
        let expected = field_strength(&s).unwrap().add(&pullback_form(&s.map, &extra).unwrap()).unwrap();
        let sp = random::points(&mut rng, &s.spacetime, 5);
        prop_assert!(form_residual(&field_strength(&shifted).unwrap(), &expected, &sp).unwrap().relative < 1e-12);
    }

    #[test]
    fn gauge_variation_is_linear(seed in any::<u64>(), k in 0usize..3, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random::compatible_scenario(&mut rng, SWEEP_ALGEBRAS[k]).unwrap();
        let e1 = random::form(&mut rng, &s.spacetime, &s.algebra, 0);
        let e2 = random::form(&mut rng, &s.spacetime, &s.algebra, 0);
        let combined = gauge_variation_a(&s, &e1.scale(a).add(&e2.scale(b)).unwrap()).unwrap();
        let separate = gauge_variation_a(&s, &e1).unwrap().scale(a)
            .add(&gauge_variation_a(&s, &e2).unwrap().scale(b)).unwrap();
        let sp = random::points(&mut rng, &s.spacetime, 5);
        prop_assert!(form_residual(&combined, &separate, &sp).unwrap().relative < 1e-12);
    }
}

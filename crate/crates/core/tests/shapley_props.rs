use proptest::prelude::*;
use recgame::shapley::{
    apply_operator, discounted_value, discounted_value_from, n_stage_values, recursive_identity_residual,
};
use recgame::zoo;
use recgame::{GameSpec, ValueVector};

fn game() -> impl Strategy<Value = GameSpec> {
    (
        1..=3usize,
        1..=2usize,
        1..=3usize,
        0.05..1.0f64,
        any::<u64>(),
        any::<bool>(),
    )
        .prop_map(|(a, b, m, p, seed, recursive)| {
            if recursive {
                zoo::random_recursive(a, b, m, p, seed).unwrap()
            } else {
                zoo::random_stochastic(a, b, m, p, seed).unwrap()
            }
        })
}

fn recursive_game() -> impl Strategy<Value = GameSpec> {
    (1..=4usize, 1..=3usize, 1..=3usize, 0.0..=1.0f64, any::<u64>())
        .prop_map(|(a, b, m, p, seed)| zoo::random_recursive(a, b, m, p, seed).unwrap())
}

fn vector(len: usize, seed: &[f64], scale: f64) -> ValueVector {
    ValueVector((0..len).map(|k| scale * seed[k % seed.len()]).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_is_monotone(
        g in game(),
        lambda in 0.0..=1.0f64,
        f in prop::collection::vec(-1.0..1.0f64, 4),
        d in prop::collection::vec(0.0..1.0f64, 4),
    ) {
        let f = vector(g.num_active(), &f, 1.0);
        let h = ValueVector(f.iter().zip(vector(g.num_active(), &d, 1.0).iter()).map(|(a, b)| a + b).collect());
        let pf = apply_operator(&g, lambda, &f).unwrap();
        let ph = apply_operator(&g, lambda, &h).unwrap();
        for (a, b) in pf.iter().zip(ph.iter()) {
            prop_assert!(a <= &(b + 1e-12));
        }
    }

    #[test]
    fn operator_contracts(
        g in game(),
        lambda in 0.0..=1.0f64,
        f in prop::collection::vec(-2.0..2.0f64, 4),
        h in prop::collection::vec(-2.0..2.0f64, 4),
    ) {
        let f = vector(g.num_active(), &f, 1.0);
        let h = vector(g.num_active(), &h, 1.0);
        let pf = apply_operator(&g, lambda, &f).unwrap();
        let ph = apply_operator(&g, lambda, &h).unwrap();
        prop_assert!(pf.sup_dist(&ph) <= (1.0 - lambda) * f.sup_dist(&h) + 1e-12);
    }

    #[test]
    fn fixed_point_is_unique_and_bounded(g in game(), lambda in 0.05..1.0f64) {
        let tol = 1e-10;
        let m = g.payoff_bound();
        let n = g.num_active();
        let lo = discounted_value_from(&g, lambda, tol, &ValueVector::constant(n, -m)).unwrap();
        let hi = discounted_value_from(&g, lambda, tol, &ValueVector::constant(n, m)).unwrap();
        prop_assert!(lo.value.sup_dist(&hi.value) <= 2.0 * tol);
        prop_assert!(lo.value.sup_norm() <= m + tol);
        let phi = apply_operator(&g, lambda, &lo.value).unwrap();
        prop_assert!(phi.sup_dist(&lo.value) <= tol * lambda + 1e-15);
    }

    #[test]
    fn recursive_identity(g in recursive_game(), lambda in 0.0..=1.0f64, f in prop::collection::vec(-3.0..3.0f64, 4)) {
        let f = vector(g.num_active(), &f, 1.0);
        let r = recursive_identity_residual(&g, lambda, &f).unwrap();
        prop_assert!(r <= 1e-12 * (1.0 + g.payoff_bound()));
    }

    #[test]
    fn n_stage_values_follow_the_recursion(g in game(), horizon in 1..30usize) {
        let vs = n_stage_values(&g, horizon).unwrap();
        prop_assert_eq!(vs.len(), horizon);
        let mut prev = ValueVector::zeros(g.num_active());
        for (n, v) in (1..).zip(&vs) {
            let expect = apply_operator(&g, 1.0 / n as f64, &prev).unwrap();
            prop_assert_eq!(v, &expect);
            prop_assert!(v.sup_norm() <= g.payoff_bound() + 1e-12);
            prev = v.clone();
        }
    }

    #[test]
    fn value_shifts_with_absorbing_payoffs(g in recursive_game(), lambda in 0.05..1.0f64) {
        // Raising every absorbing payoff by c raises v_λ by at most c.
        let mut file = g.to_file();
        for s in file.states.iter_mut() {
            if let Some(p) = s.payoff.as_mut() {
                *p += 0.25;
            }
        }
        let h = recgame::model::validate(&file).unwrap();
        let v = discounted_value(&g, lambda, 1e-11).unwrap();
        let w = discounted_value(&h, lambda, 1e-11).unwrap();
        for (a, b) in v.iter().zip(w.iter()) {
            prop_assert!(b >= &(a - 1e-9) && b <= &(a + 0.25 + 1e-9));
        }
    }
}

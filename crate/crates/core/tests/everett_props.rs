use proptest::prelude::*;
use recgame::everett::{
    equivalent_characterization_check, extract_stationary_strategy, find_certificate, mn_condition_check,
    xi_margin, SearchOptions,
};
use recgame::matgame::{col_security, row_security};
use recgame::model::{validate, ActionSets, GameFile, StateEntry};
use recgame::shapley::{apply_operator, geometric_grid, stage_matrix, vanishing_discount_limit};
use recgame::{zoo, GameSpec, Player, Side, Tolerances, ValueVector};

fn recursive_game() -> impl Strategy<Value = GameSpec> {
    (1..=3usize, 1..=3usize, 1..=3usize, 0.2..=1.0f64, any::<u64>())
        .prop_map(|(a, b, m, p, seed)| zoo::random_recursive(a, b, m, p, seed).unwrap())
}

fn nonnegative_payoffs(g: &GameSpec) -> GameSpec {
    let mut file = g.to_file();
    for s in file.states.iter_mut() {
        if let Some(p) = s.payoff.as_mut() {
            *p = p.abs();
        }
    }
    validate(&file).unwrap()
}

fn estimate(g: &GameSpec) -> ValueVector {
    let grid = geometric_grid(1e-1, 1e-5, 9).unwrap();
    vanishing_discount_limit(g, &grid, 1e-4).unwrap().estimate
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certificates_bracket_the_value(g in recursive_game()) {
        let v = estimate(&g);
        let opts = SearchOptions::default();
        let plus = find_certificate(&g, Side::Plus, &v, &opts).unwrap();
        let minus = find_certificate(&g, Side::Minus, &v, &opts).unwrap();
        if plus.found {
            for (u, x) in plus.report.u.iter().zip(v.iter()) {
                prop_assert!(*u <= x + 1e-3, "plus certificate {u} above estimate {x}");
            }
        }
        if minus.found {
            for (w, x) in minus.report.u.iter().zip(v.iter()) {
                prop_assert!(*w >= x - 1e-3, "minus certificate {w} below estimate {x}");
            }
        }
    }

    #[test]
    fn scaling_toward_zero_keeps_plus_certificates(g in recursive_game(), t in 0.05..0.95f64) {
        let g = nonnegative_payoffs(&g);
        let opts = SearchOptions::default();
        let found = find_certificate(&g, Side::Plus, &estimate(&g), &opts).unwrap();
        prop_assume!(found.found);
        let tol = opts.tolerances;
        let scaled = ValueVector(found.report.u.iter().map(|x| (1.0 - t) * x).collect());
        let relaxed = Tolerances { weak_tol: tol.weak_tol, strict_tol: (1.0 - t) * tol.strict_tol };
        let r = xi_margin(&g, &scaled, Side::Plus, relaxed).unwrap();
        prop_assert!(r.passed(), "violation {}", r.violation());
    }

    #[test]
    fn plus_certificates_meet_the_discounted_condition(g in recursive_game()) {
        let opts = SearchOptions::default();
        let found = find_certificate(&g, Side::Plus, &estimate(&g), &opts).unwrap();
        prop_assume!(found.found);
        let delta = opts.tolerances.strict_tol;
        let grid = geometric_grid(1e-1, 1e-9, 17).unwrap();
        let cutoff = delta / (g.payoff_bound() + delta);
        let needed = grid.iter().copied().filter(|&l| l <= cutoff).fold(0.0, f64::max);
        let bar = mn_condition_check(&g, &found.report.u, &grid).unwrap();
        prop_assert!(bar.is_some_and(|b| b >= needed), "λ̄ = {bar:?}, needed {needed}");
    }

    #[test]
    fn extracted_strategies_ignore_the_discount(g in recursive_game(), lambda in 0.0..1.0f64) {
        let v = estimate(&g);
        let opts = SearchOptions::default();
        for side in [Side::Plus, Side::Minus] {
            let found = find_certificate(&g, side, &v, &opts).unwrap();
            if !found.found {
                continue;
            }
            let player = side.player();
            let s = extract_stationary_strategy(&g, &found.report, player).unwrap();
            prop_assert_eq!(&s, &extract_stationary_strategy(&g, &found.report, player).unwrap());
            // The same mixed actions are optimal in every Φ(λ,u) game.
            let full = g.extend(&found.report.u);
            let phi = apply_operator(&g, lambda, &found.report.u).unwrap();
            for k in 0..g.num_active() {
                let a = stage_matrix(&g, k, lambda, &full);
                match player {
                    Player::One => prop_assert!(row_security(&a, &s.mixed[k]) >= phi[k] - 1e-8),
                    Player::Two => prop_assert!(col_security(&a, &s.mixed[k]) <= phi[k] + 1e-8),
                }
            }
        }
    }

    #[test]
    fn characterizations_agree_off_the_boundary(g in recursive_game(), u in prop::collection::vec(-1.0..1.0f64, 3)) {
        let tol = 1e-6;
        let u = ValueVector(u[..g.num_active()].to_vec());
        let phi = apply_operator(&g, 0.0, &u).unwrap();
        let clear = phi.iter().zip(u.iter()).all(|(p, x)| (p - x).abs() >= 2.0 * tol && x.abs() >= 2.0 * tol);
        prop_assume!(clear);
        let r = xi_margin(&g, &u, Side::Plus, Tolerances { weak_tol: tol, strict_tol: tol }).unwrap();
        prop_assert_eq!(r.passed(), equivalent_characterization_check(&g, &u, tol).unwrap());
    }
}

/// One state that stays with probability 1/2 and otherwise absorbs at −1.
fn leaky() -> GameSpec {
    let file: GameFile = GameFile {
        states: vec![
            StateEntry {
                name: "s".into(),
                absorbing: false,
                payoff: None,
            },
            StateEntry {
                name: "lose".into(),
                absorbing: true,
                payoff: Some(-1.0),
            },
        ],
        actions: [(
            "s".to_string(),
            ActionSets {
                p1: vec!["a".into()],
                p2: vec!["b".into()],
            },
        )]
        .into_iter()
        .collect(),
        payoffs: [("s".to_string(), vec![vec![0.0]])].into_iter().collect(),
        transitions: [(
            "s".to_string(),
            vec![vec![[("s".to_string(), 0.5), ("lose".to_string(), 0.5)]
                .into_iter()
                .collect()]],
        )]
        .into_iter()
        .collect(),
        initial: "s".into(),
        trivial: false,
    };
    validate(&file).unwrap()
}

#[test]
fn scaling_fails_with_negative_absorbing_payoffs() {
    let g = leaky();
    let tol = Tolerances::default();
    assert!(xi_margin(&g, &ValueVector(vec![-1.0]), Side::Plus, tol)
        .unwrap()
        .passed());
    let half = Tolerances {
        strict_tol: 0.5 * tol.strict_tol,
        ..tol
    };
    assert!(!xi_margin(&g, &ValueVector(vec![-0.5]), Side::Plus, half)
        .unwrap()
        .passed());
}

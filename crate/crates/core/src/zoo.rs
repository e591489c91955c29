//! Example games, random generators and grid discretization of parametric
//! action families.

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{validate, ActionSets, GameFile, GameSpec, StateEntry};

pub const NAMES: [&str; 3] = ["quit", "duel", "bigmatch"];

pub fn make(name: &str) -> Result<GameSpec> {
    match name {
        "quit" => Ok(quit()),
        "duel" => Ok(duel()),
        "bigmatch" => Ok(bigmatch()),
        other => Err(Error::UnknownGame(other.to_string())),
    }
}

fn active(name: &str) -> StateEntry {
    StateEntry {
        name: name.into(),
        absorbing: false,
        payoff: None,
    }
}

fn absorbing(name: &str, payoff: f64) -> StateEntry {
    StateEntry {
        name: name.into(),
        absorbing: true,
        payoff: Some(payoff),
    }
}

fn to(target: &str) -> IndexMap<String, f64> {
    IndexMap::from([(target.to_string(), 1.0)])
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn single_state(
    p1: &[&str],
    p2: &[&str],
    payoffs: Vec<Vec<f64>>,
    transitions: Vec<Vec<IndexMap<String, f64>>>,
    absorbing_states: Vec<StateEntry>,
) -> GameSpec {
    let mut states = vec![active("s")];
    states.extend(absorbing_states);
    let raw = GameFile {
        states,
        actions: IndexMap::from([(
            "s".to_string(),
            ActionSets {
                p1: strings(p1),
                p2: strings(p2),
            },
        )]),
        payoffs: IndexMap::from([("s".to_string(), payoffs)]),
        transitions: IndexMap::from([("s".to_string(), transitions)]),
        initial: "s".into(),
        trivial: false,
    };
    validate(&raw).expect("zoo game is valid")
}

/// Player 1 may stay (payoff 0, same state) or quit into an absorbing `+1`.
pub fn quit() -> GameSpec {
    single_state(
        &["stay", "quit"],
        &["wait"],
        vec![vec![0.0], vec![0.0]],
        vec![vec![to("s")], vec![to("win")]],
        vec![absorbing("win", 1.0)],
    )
}

/// Matching on the diagonal absorbs: `(a1,b1)` into `+1`, `(a2,b2)` into `−1`.
/// Off-diagonal profiles stay. `Φ(0,·)` has every `u ∈ [−1, 1]` as a fixed point.
pub fn duel() -> GameSpec {
    single_state(
        &["a1", "a2"],
        &["b1", "b2"],
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        vec![vec![to("plus"), to("s")], vec![to("s"), to("minus")]],
        vec![absorbing("plus", 1.0), absorbing("minus", -1.0)],
    )
}

/// The Big Match. Top absorbs (into 1 against left, into 0 against right);
/// bottom stays and pays 0 against left, 1 against right. Not recursive.
pub fn bigmatch() -> GameSpec {
    single_state(
        &["top", "bottom"],
        &["left", "right"],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![to("one"), to("zero")], vec![to("s"), to("s")]],
        vec![absorbing("one", 1.0), absorbing("zero", 0.0)],
    )
}

/// Random distribution over `len` outcomes.
fn random_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|p| *p /= total);
    } else {
        w = vec![1.0 / len as f64; len];
    }
    w
}

fn random_game(
    num_active: usize,
    num_absorbing: usize,
    max_actions: usize,
    absorb_prob: f64,
    seed: u64,
    stage_payoffs: bool,
) -> Result<GameSpec> {
    if num_active < 1 || num_absorbing < 1 || max_actions < 1 {
        return Err(Error::InvalidParameter("all counts must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&absorb_prob) {
        return Err(Error::InvalidParameter(format!(
            "absorption probability {absorb_prob} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active_names: Vec<String> = (0..num_active).map(|k| format!("s{k}")).collect();
    let absorbing_names: Vec<String> = (0..num_absorbing).map(|k| format!("t{k}")).collect();

    let mut states: Vec<StateEntry> = active_names.iter().map(|n| active(n)).collect();
    for name in &absorbing_names {
        let payoff = rng.gen_range(-1.0..=1.0);
        states.push(absorbing(name, payoff));
    }

    let mut actions = IndexMap::new();
    let mut payoffs = IndexMap::new();
    let mut transitions = IndexMap::new();
    for name in &active_names {
        let m = rng.gen_range(1..=max_actions);
        let n = rng.gen_range(1..=max_actions);
        actions.insert(
            name.clone(),
            ActionSets {
                p1: (0..m).map(|i| format!("a{i}")).collect(),
                p2: (0..n).map(|j| format!("b{j}")).collect(),
            },
        );
        let pay: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        if stage_payoffs {
                            rng.gen_range(-1.0..=1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        payoffs.insert(name.clone(), pay);
        let rows: Vec<Vec<IndexMap<String, f64>>> = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let stay = random_simplex(&mut rng, num_active);
                        let leave = random_simplex(&mut rng, num_absorbing);
                        let mut cell = IndexMap::new();
                        for (t, p) in active_names.iter().zip(stay) {
                            let p = (1.0 - absorb_prob) * p;
                            if p > 0.0 {
                                cell.insert(t.clone(), p);
                            }
                        }
                        for (t, p) in absorbing_names.iter().zip(leave) {
                            let p = absorb_prob * p;
                            if p > 0.0 {
                                cell.insert(t.clone(), p);
                            }
                        }
                        cell
                    })
                    .collect()
            })
            .collect();
        transitions.insert(name.clone(), rows);
    }

    validate(&GameFile {
        states,
        actions,
        payoffs,
        transitions,
        initial: active_names[0].clone(),
        trivial: false,
    })
}

/// Random recursive game; each profile absorbs with probability `absorb_prob`.
pub fn random_recursive(
    num_active: usize,
    num_absorbing: usize,
    max_actions: usize,
    absorb_prob: f64,
    seed: u64,
) -> Result<GameSpec> {
    random_game(num_active, num_absorbing, max_actions, absorb_prob, seed, false)
}

/// Like [`random_recursive`] but with stage payoffs uniform in `[−1, 1]`.
pub fn random_stochastic(
    num_active: usize,
    num_absorbing: usize,
    max_actions: usize,
    absorb_prob: f64,
    seed: u64,
) -> Result<GameSpec> {
    random_game(num_active, num_absorbing, max_actions, absorb_prob, seed, true)
}

/// Polynomial in the two action parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly2 {
    /// `(coefficient, power of x, power of y)`.
    pub terms: Vec<(f64, i32, i32)>,
}

impl Poly2 {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: vec![(c, 0, 0)],
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, px, py)| c * x.powi(px) * y.powi(py))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricState {
    pub name: String,
    /// Player 1 action interval.
    pub x_range: (f64, f64),
    /// Player 2 action interval.
    pub y_range: (f64, f64),
    pub payoff: Poly2,
    /// Probability of moving to each named target.
    pub transitions: Vec<(String, Poly2)>,
}

/// A game whose actions range over compact intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricGame {
    pub active: Vec<ParametricState>,
    pub absorbing: Vec<(String, f64)>,
    pub initial: String,
}

fn grid(range: (f64, f64), points: usize) -> Vec<f64> {
    let (lo, hi) = range;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

/// Evaluates the family on a uniform grid including both interval endpoints.
pub fn discretize(game: &ParametricGame, points: usize) -> Result<GameSpec> {
    if points < 2 {
        return Err(Error::InvalidParameter(
            "need at least two grid points per axis".into(),
        ));
    }
    let mut states: Vec<StateEntry> = game.active.iter().map(|s| active(&s.name)).collect();
    states.extend(game.absorbing.iter().map(|(n, p)| absorbing(n, *p)));
    let mut actions = IndexMap::new();
    let mut payoffs = IndexMap::new();
    let mut transitions = IndexMap::new();
    for s in &game.active {
        for (lo, hi) in [s.x_range, s.y_range] {
            if !(lo <= hi) {
                return Err(Error::InvalidParameter(format!(
                    "empty action interval at `{}`",
                    s.name
                )));
            }
        }
        let xs = grid(s.x_range, points);
        let ys = grid(s.y_range, points);
        actions.insert(
            s.name.clone(),
            ActionSets {
                p1: xs
                    .iter()
                    .enumerate()
                    .map(|(i, x)| format!("x{i}={}", crate::fmt_num(*x)))
                    .collect(),
                p2: ys
                    .iter()
                    .enumerate()
                    .map(|(j, y)| format!("y{j}={}", crate::fmt_num(*y)))
                    .collect(),
            },
        );
        payoffs.insert(
            s.name.clone(),
            xs.iter()
                .map(|&x| ys.iter().map(|&y| s.payoff.eval(x, y)).collect())
                .collect(),
        );
        transitions.insert(
            s.name.clone(),
            xs.iter()
                .map(|&x| {
                    ys.iter()
                        .map(|&y| {
                            let mut cell: IndexMap<String, f64> = IndexMap::new();
                            for (target, poly) in &s.transitions {
                                *cell.entry(target.clone()).or_default() += poly.eval(x, y);
                            }
                            cell
                        })
                        .collect()
                })
                .collect(),
        );
    }
    validate(&GameFile {
        states,
        actions,
        payoffs,
        transitions,
        initial: game.initial.clone(),
        trivial: game.active.is_empty(),
    })
}

/// QUIT with the quitting probability `x ∈ [0, 1]` as player 1's action.
pub fn parametric_quit() -> ParametricGame {
    ParametricGame {
        active: vec![ParametricState {
            name: "s".into(),
            x_range: (0.0, 1.0),
            y_range: (0.0, 0.0),
            payoff: Poly2::default(),
            transitions: vec![
                (
                    "s".into(),
                    Poly2 {
                        terms: vec![(1.0, 0, 0), (-1.0, 1, 0)],
                    },
                ),
                (
                    "win".into(),
                    Poly2 {
                        terms: vec![(1.0, 1, 0)],
                    },
                ),
            ],
        }],
        absorbing: vec![("win".into(), 1.0)],
        initial: "s".into(),
    }
}

/// Continuous duel: player 1 picks `x`, player 2 picks `y`, both in `[0, 1]`.
/// Absorbs into `+1` with probability `x·y/2`, into `−1` with `(1−x)(1−y)/2`.
pub fn parametric_duel() -> ParametricGame {
    ParametricGame {
        active: vec![ParametricState {
            name: "s".into(),
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            payoff: Poly2::default(),
            transitions: vec![
                (
                    "plus".into(),
                    Poly2 {
                        terms: vec![(0.5, 1, 1)],
                    },
                ),
                (
                    "minus".into(),
                    Poly2 {
                        terms: vec![(0.5, 0, 0), (-0.5, 1, 0), (-0.5, 0, 1), (0.5, 1, 1)],
                    },
                ),
                (
                    "s".into(),
                    Poly2 {
                        terms: vec![(0.5, 0, 0), (0.5, 1, 0), (0.5, 0, 1), (-1.0, 1, 1)],
                    },
                ),
            ],
        }],
        absorbing: vec![("plus".into(), 1.0), ("minus".into(), -1.0)],
        initial: "s".into(),
    }
}

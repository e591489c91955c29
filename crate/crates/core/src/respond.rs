//! Best responses against a fixed stationary strategy.
//!
//! Fixing one player's mixed actions turns the game into a discounted Markov
//! decision problem for the other player, solved here by value iteration with
//! greedy policy extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GameSpec, Player, StationaryStrategy, ValueVector};
use crate::shapley::{iteration_bound, MAX_ITERATIONS};

/// Default discount factors used as a proxy for the long-run criterion.
pub const DEFAULT_LAMBDAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseResult {
    pub lambda: f64,
    pub responder: Player,
    /// Responder's optimal discounted payoff (in player 1's payoff units).
    pub values: ValueVector,
    /// Pure action per active state.
    pub policy: Vec<usize>,
    pub residual: f64,
}

impl BestResponseResult {
    pub fn strategy(&self, game: &GameSpec) -> Result<StationaryStrategy> {
        StationaryStrategy::pure(game, self.responder, &self.policy)
    }
}

/// The responder's decision problem: per state and action, the expected stage
/// payoff, the expected absorbing payoff and the distribution over active states.
struct Collapsed {
    reward: Vec<Vec<f64>>,
    absorbed: Vec<Vec<f64>>,
    moves: Vec<Vec<Vec<f64>>>,
}

fn collapse(game: &GameSpec, fixed: &StationaryStrategy) -> Collapsed {
    let n_active = game.num_active();
    let mut reward = Vec::with_capacity(n_active);
    let mut absorbed = Vec::with_capacity(n_active);
    let mut moves = Vec::with_capacity(n_active);
    for k in 0..n_active {
        let s = game.active(k);
        let mix = &fixed.mixed[k];
        let responder_actions = fixed.player.opponent().num_actions(s);
        let mut r_k = Vec::with_capacity(responder_actions);
        let mut a_k = Vec::with_capacity(responder_actions);
        let mut m_k = Vec::with_capacity(responder_actions);
        for a in 0..responder_actions {
            let mut r = 0.0;
            let mut next = vec![0.0; game.num_states()];
            for (b, &w) in mix.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let (i, j) = match fixed.player {
                    Player::One => (b, a),
                    Player::Two => (a, b),
                };
                r += w * game.stage_payoff(k, i, j);
                for (acc, p) in next.iter_mut().zip(game.transition(k, i, j)) {
                    *acc += w * p;
                }
            }
            let abs: f64 = (n_active..game.num_states())
                .map(|t| next[t] * game.absorbing_payoff(t))
                .sum();
            next.truncate(n_active);
            r_k.push(r);
            a_k.push(abs);
            m_k.push(next);
        }
        reward.push(r_k);
        absorbed.push(a_k);
        moves.push(m_k);
    }
    Collapsed {
        reward,
        absorbed,
        moves,
    }
}

impl Collapsed {
    fn q(&self, k: usize, a: usize, lambda: f64, v: &[f64]) -> f64 {
        let cont: f64 = self.moves[k][a].iter().zip(v).map(|(p, x)| p * x).sum();
        lambda * self.reward[k][a] + (1.0 - lambda) * (self.absorbed[k][a] + cont)
    }

    fn optimum(&self, k: usize, lambda: f64, v: &[f64], maximize: bool) -> f64 {
        let qs = (0..self.reward[k].len()).map(|a| self.q(k, a, lambda, v));
        if maximize {
            qs.fold(f64::NEG_INFINITY, f64::max)
        } else {
            qs.fold(f64::INFINITY, f64::min)
        }
    }
}

/// Optimal discounted reply of the opponent of `fixed.player`.
pub fn best_response_discounted(
    game: &GameSpec,
    fixed: &StationaryStrategy,
    lambda: f64,
    tol: f64,
) -> Result<BestResponseResult> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidDiscount(lambda));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    fixed.check(game)?;
    let responder = fixed.player.opponent();
    let maximize = responder == Player::One;
    let model = collapse(game, fixed);
    let n = game.num_active();

    let bound = iteration_bound(lambda, tol, game.payoff_bound());
    let mut v = vec![0.0; n];
    let mut iterations = 0u64;
    let residual = loop {
        let next: Vec<f64> = (0..n).map(|k| model.optimum(k, lambda, &v, maximize)).collect();
        let residual = next
            .iter()
            .zip(&v)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        if residual <= tol * lambda || iterations >= bound {
            break residual;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::IterationCap {
                cap: MAX_ITERATIONS,
                bound,
            });
        }
        v = next;
        iterations += 1;
    };

    // Lowest index among actions within a rounding margin of the optimum.
    let tie = 1e-12 * (1.0 + game.payoff_bound());
    let policy = (0..n)
        .map(|k| {
            let best = model.optimum(k, lambda, &v, maximize);
            (0..model.reward[k].len())
                .find(|&a| (model.q(k, a, lambda, &v) - best).abs() <= tie)
                .unwrap_or(0)
        })
        .collect();

    Ok(BestResponseResult {
        lambda,
        responder,
        values: ValueVector(v),
        policy,
        residual,
    })
}

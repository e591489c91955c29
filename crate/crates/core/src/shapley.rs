//! The Shapley operator and the value notions built on it.
//!
//! `Φ(λ, f)(k)` is the minimax value of the one-shot game at active state `k`
//! with entries `λ·g(k,i,j) + (1−λ)·E[f̃(k')]`, where `f̃` extends `f` by the
//! absorbing payoffs. `λ = 0` is allowed.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matgame::{solve_matrix_game, Matrix};
use crate::model::{GameSpec, Player, StationaryStrategy, ValueVector};

/// Active-state count from which operator applications fan out over rayon.
const PARALLEL_STATES: usize = 16;
/// Hard cap on value-iteration sweeps.
pub const MAX_ITERATIONS: u64 = 10_000_000;
/// Inner solve tolerance of the limit sweep, relative to the Cauchy tolerance.
pub const LIMIT_SOLVE_FACTOR: f64 = 1e-3;

/// One-shot game of `Φ(λ, ·)` at active state `k`; `full` covers every state.
pub fn stage_matrix(game: &GameSpec, k: usize, lambda: f64, full: &[f64]) -> Matrix {
    let s = game.active(k);
    Matrix::from_fn(s.num_p1(), s.num_p2(), |i, j| {
        let cont: f64 = game
            .transition(k, i, j)
            .iter()
            .zip(full)
            .map(|(p, v)| p * v)
            .sum();
        lambda * game.stage_payoff(k, i, j) + (1.0 - lambda) * cont
    })
}

fn check_len(game: &GameSpec, f: &[f64]) -> Result<()> {
    if f.len() != game.num_active() {
        return Err(Error::DimensionMismatch(format!(
            "value vector has {} entries for {} active states",
            f.len(),
            game.num_active()
        )));
    }
    Ok(())
}

fn apply_raw(game: &GameSpec, lambda: f64, f: &[f64]) -> Result<Vec<f64>> {
    let full = game.extend(f);
    let solve = |k: usize| solve_matrix_game(&stage_matrix(game, k, lambda, &full)).map(|s| s.value);
    if game.num_active() >= PARALLEL_STATES {
        (0..game.num_active()).into_par_iter().map(solve).collect()
    } else {
        (0..game.num_active()).map(solve).collect()
    }
}

/// `Φ(λ, f)` for `λ ∈ [0, 1]`.
pub fn apply_operator(game: &GameSpec, lambda: f64, f: &ValueVector) -> Result<ValueVector> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidDiscount(lambda));
    }
    check_len(game, f)?;
    apply_raw(game, lambda, f).map(ValueVector)
}

/// Outcome of a value-iteration run.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub value: ValueVector,
    /// `‖Φ(λ, value) − value‖∞`.
    pub residual: f64,
    pub iterations: u64,
}

/// A priori number of sweeps after which a start within `2M` of the fixed
/// point is within `tol·λ` of it.
pub fn iteration_bound(lambda: f64, tol: f64, bound: f64) -> u64 {
    if lambda >= 1.0 || bound == 0.0 {
        return 1;
    }
    let target = tol * lambda / (2.0 * bound);
    if target >= 1.0 {
        return 1;
    }
    let n = (target.ln() / (1.0 - lambda).ln()).ceil();
    if n.is_finite() && n < u64::MAX as f64 {
        (n as u64).max(1)
    } else {
        u64::MAX
    }
}

fn check_discount(lambda: f64, tol: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidDiscount(lambda));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    Ok(())
}

/// Value iteration `f ← Φ(λ, f)` from `start` until the residual drops to
/// `tol·λ` or the a priori bound is reached.
pub fn discounted_value_from(
    game: &GameSpec,
    lambda: f64,
    tol: f64,
    start: &ValueVector,
) -> Result<FixedPoint> {
    check_discount(lambda, tol)?;
    check_len(game, start)?;
    let m = game.payoff_bound().max(start.sup_norm());
    let bound = iteration_bound(lambda, tol, m);
    let mut f = start.0.clone();
    let mut iterations = 0;
    loop {
        let next = apply_raw(game, lambda, &f)?;
        let residual = sup_dist(&next, &f);
        if residual <= tol * lambda || iterations >= bound {
            return Ok(FixedPoint {
                value: ValueVector(f),
                residual,
                iterations,
            });
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::IterationCap {
                cap: MAX_ITERATIONS,
                bound,
            });
        }
        f = next;
        iterations += 1;
    }
}

/// `v_λ` within `tol` in sup norm, iterating from zero.
pub fn discounted_value(game: &GameSpec, lambda: f64, tol: f64) -> Result<ValueVector> {
    discounted_value_from(game, lambda, tol, &ValueVector::zeros(game.num_active())).map(|fp| fp.value)
}

/// `v_1, …, v_N` from `v_0 = 0` and `v_n = Φ(1/n, v_{n−1})`.
pub fn n_stage_values(game: &GameSpec, horizon: usize) -> Result<Vec<ValueVector>> {
    if horizon < 1 {
        return Err(Error::InvalidParameter(
            "number of stages must be at least 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(horizon);
    let mut v = vec![0.0; game.num_active()];
    for n in 1..=horizon {
        v = apply_raw(game, 1.0 / n as f64, &v)?;
        out.push(ValueVector(v.clone()));
    }
    Ok(out)
}

/// `points` discount factors from `start` down to `end`, equally spaced in log scale.
pub fn geometric_grid(start: f64, end: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidGrid("need at least two points".into()));
    }
    if !(start > end && end > 0.0 && start <= 1.0) {
        return Err(Error::InvalidGrid(format!(
            "need 1 >= start > end > 0, got {start}..{end}"
        )));
    }
    let ratio = (end / start).ln() / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| start * (ratio * i as f64).exp()).collect();
    grid[0] = start;
    grid[points - 1] = end;
    Ok(grid)
}

/// Parses `geometric:A..B:P`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidGrid(format!("expected geometric:A..B:P, got `{spec}`"));
    let rest = spec.strip_prefix("geometric:").ok_or_else(bad)?;
    let (range, points) = rest.rsplit_once(':').ok_or_else(bad)?;
    let (a, b) = range.split_once("..").ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let p: usize = points.trim().parse().map_err(|_| bad())?;
    geometric_grid(a, b, p)
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if let Some(&l) = grid.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
        return Err(Error::InvalidGrid(format!("{l} outside (0, 1]")));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// `v_λ` along a decreasing grid of discount factors.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    pub lambdas: Vec<f64>,
    pub values: Vec<ValueVector>,
    pub residuals: Vec<f64>,
    /// `‖v_{λ_i} − v_{λ_{i−1}}‖∞` for `i ≥ 1`.
    pub cauchy: Vec<f64>,
}

impl DiscountCurve {
    /// CSV with columns `lambda,state,value,residual`.
    pub fn to_csv(&self, game: &GameSpec) -> String {
        let mut out = String::from("lambda,state,value,residual\n");
        for ((lambda, v), r) in self.lambdas.iter().zip(&self.values).zip(&self.residuals) {
            for (k, x) in v.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    crate::fmt_num(*lambda),
                    game.state_name(k),
                    crate::fmt_num(*x),
                    crate::fmt_num(*r)
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    pub estimate: ValueVector,
    /// Whether the last two Cauchy differences are within tolerance.
    pub converged: bool,
    pub curve: DiscountCurve,
}

/// Estimates `lim_{λ→0} v_λ` along `grid` by a Cauchy tail test.
pub fn vanishing_discount_limit(game: &GameSpec, grid: &[f64], tol: f64) -> Result<LimitEstimate> {
    check_grid(grid)?;
    if grid.len() < 4 {
        return Err(Error::InvalidGrid("need at least four grid points".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    let solve_tol = tol * LIMIT_SOLVE_FACTOR;
    let zero = ValueVector::zeros(game.num_active());
    let points: Vec<FixedPoint> = grid
        .par_iter()
        .map(|&l| discounted_value_from(game, l, solve_tol, &zero))
        .collect::<Result<_>>()?;

    let cauchy: Vec<f64> = points
        .windows(2)
        .map(|w| w[1].value.sup_dist(&w[0].value))
        .collect();
    let converged = cauchy[cauchy.len() - 2..].iter().all(|&d| d <= tol);
    let curve = DiscountCurve {
        lambdas: grid.to_vec(),
        residuals: points.iter().map(|p| p.residual).collect(),
        values: points.into_iter().map(|p| p.value).collect(),
        cauchy,
    };
    Ok(LimitEstimate {
        estimate: curve.values.last().cloned().expect("non-empty grid"),
        converged,
        curve,
    })
}

/// `‖Φ(λ, f) − (1−λ)·Φ(0, f)‖∞`, which vanishes on recursive games.
pub fn recursive_identity_residual(game: &GameSpec, lambda: f64, f: &ValueVector) -> Result<f64> {
    game.ensure_recursive()?;
    let discounted = apply_operator(game, lambda, f)?;
    let undiscounted = apply_operator(game, 0.0, f)?;
    Ok(discounted
        .iter()
        .zip(undiscounted.iter())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - (1.0 - lambda) * b).abs())))
}

/// Per-state optimal mixed actions of both players in the games of `Φ(λ, f)`.
pub fn optimal_strategies(
    game: &GameSpec,
    lambda: f64,
    f: &ValueVector,
) -> Result<(StationaryStrategy, StationaryStrategy)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidDiscount(lambda));
    }
    check_len(game, f)?;
    let full = game.extend(f);
    let mut xs = Vec::with_capacity(game.num_active());
    let mut ys = Vec::with_capacity(game.num_active());
    for k in 0..game.num_active() {
        let sol = solve_matrix_game(&stage_matrix(game, k, lambda, &full))?;
        xs.push(sol.x);
        ys.push(sol.y);
    }
    Ok((
        StationaryStrategy {
            player: Player::One,
            mixed: xs,
        },
        StationaryStrategy {
            player: Player::Two,
            mixed: ys,
        },
    ))
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

//! Seeded Monte Carlo play of stationary strategy profiles and the empirical
//! guarantee harness.
//!
//! Replication `r` draws from ChaCha8 (`rand_chacha` 0.3.1, pinned) seeded
//! with the run seed, on stream `r`. Once a trajectory is absorbed its
//! remaining payoffs are filled in analytically. Aggregates are reduced in
//! replication order, so reports do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GameSpec, Player, StationaryStrategy, ValueVector};
use crate::respond::{best_response_discounted, DEFAULT_LAMBDAS};

/// Normal quantile of the 95% two-sided interval.
pub const Z_95: f64 = 1.96;
/// Share of the horizon averaged by the tail estimate.
pub const TAIL_FRACTION: f64 = 0.1;
pub const DEFAULT_HORIZON: usize = 10_000;
pub const DEFAULT_REPLICATIONS: usize = 1_000;
/// Pure opponent strategies are enumerated up to this count.
pub const MAX_PURE_ADVERSARIES: usize = 64;
pub const RANDOM_ADVERSARIES: usize = 32;

/// `1, 2, 5, 10, 20, 50, …` below `horizon`, then `horizon`.
pub fn checkpoints(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut scale = 1usize;
    'outer: loop {
        for m in [1, 2, 5] {
            let n = m * scale;
            if n >= horizon {
                break 'outer;
            }
            out.push(n);
        }
        scale *= 10;
    }
    out.push(horizon);
    out
}

/// Stage count averaged by the tail estimate.
pub fn tail_window(horizon: usize) -> usize {
    ((horizon as f64 * TAIL_FRACTION).ceil() as usize).clamp(1, horizon)
}

/// One simulated play, payoffs materialized up to the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `k_1, …, k_{H+1}`.
    pub states: Vec<usize>,
    /// `(i_t, j_t)` while the play is in an active state.
    pub actions: Vec<(usize, usize)>,
    pub payoffs: Vec<f64>,
    /// Stage whose transition entered an absorbing state.
    pub absorbed_at: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStat {
    pub n: usize,
    pub mean: f64,
    pub ci_halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    /// Empirical mean of `(1/n) Σ_{t≤n} g_t`.
    pub checkpoints: Vec<CheckpointStat>,
    /// Share of replications absorbed within the horizon.
    pub absorption_rate: f64,
    /// Mean over replications of the average payoff over the last [`tail_window`] stages.
    pub tail_mean: f64,
    pub tail_ci_halfwidth: f64,
}

impl SimulationReport {
    pub fn csv_header() -> &'static str {
        "adversary,checkpoint_n,mean,ci_halfwidth,absorption_rate,tail_mean\n"
    }

    pub fn csv_rows(&self, adversary: &str) -> String {
        let mut out = String::new();
        for c in &self.checkpoints {
            out.push_str(&format!(
                "{adversary},{},{},{},{},{}\n",
                c.n,
                crate::fmt_num(c.mean),
                crate::fmt_num(c.ci_halfwidth),
                crate::fmt_num(self.absorption_rate),
                crate::fmt_num(self.tail_mean)
            ));
        }
        out
    }
}

/// Cumulative tables for fast sampling.
struct Sampler<'a> {
    game: &'a GameSpec,
    sigma: Vec<Vec<f64>>,
    tau: Vec<Vec<f64>>,
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

/// Index drawn from the cumulative table `cum`, skipping zero-mass outcomes.
fn draw(cum: &[f64], u: f64) -> usize {
    let total = cum[cum.len() - 1];
    let target = u * total;
    match cum.iter().position(|&c| target < c) {
        Some(i) => i,
        None => {
            let mut i = cum.len() - 1;
            while i > 0 && cum[i] == cum[i - 1] {
                i -= 1;
            }
            i
        }
    }
}

impl<'a> Sampler<'a> {
    fn new(game: &'a GameSpec, sigma: &StationaryStrategy, tau: &StationaryStrategy) -> Result<Self> {
        if sigma.player != Player::One || tau.player != Player::Two {
            return Err(Error::StrategyMismatch(
                "sigma must belong to player 1 and tau to player 2".into(),
            ));
        }
        sigma.check(game)?;
        tau.check(game)?;
        Ok(Self {
            game,
            sigma: sigma.mixed.iter().map(|m| cumulative(m)).collect(),
            tau: tau.mixed.iter().map(|m| cumulative(m)).collect(),
        })
    }

    /// Stage from active `k`: actions, payoff and next state.
    #[inline]
    fn step(&self, k: usize, rng: &mut ChaCha8Rng) -> (usize, usize, f64, usize) {
        let i = draw(&self.sigma[k], rng.gen());
        let j = draw(&self.tau[k], rng.gen());
        let g = self.game.stage_payoff(k, i, j);
        let row = self.game.transition(k, i, j);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut next = None;
        let mut last_positive = 0;
        for (t, &p) in row.iter().enumerate() {
            if p > 0.0 {
                last_positive = t;
                acc += p;
                if u < acc {
                    next = Some(t);
                    break;
                }
            }
        }
        (i, j, g, next.unwrap_or(last_positive))
    }
}

fn replication_rng(seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    rng
}

/// Replays replication `replication` of a run step by step.
pub fn trajectory(
    game: &GameSpec,
    sigma: &StationaryStrategy,
    tau: &StationaryStrategy,
    horizon: usize,
    seed: u64,
    replication: usize,
) -> Result<Trajectory> {
    let sampler = Sampler::new(game, sigma, tau)?;
    let mut rng = replication_rng(seed, replication);
    let mut k = game.initial();
    let mut tr = Trajectory {
        states: vec![k],
        actions: Vec::new(),
        payoffs: Vec::with_capacity(horizon),
        absorbed_at: None,
    };
    for t in 1..=horizon {
        if game.is_absorbing(k) {
            tr.payoffs.push(game.absorbing_payoff(k));
        } else {
            let (i, j, g, next) = sampler.step(k, &mut rng);
            tr.actions.push((i, j));
            tr.payoffs.push(g);
            if game.is_absorbing(next) {
                tr.absorbed_at = Some(t);
            }
            k = next;
        }
        tr.states.push(k);
    }
    Ok(tr)
}

struct Replication {
    averages: Vec<f64>,
    tail: f64,
    absorbed: bool,
}

fn run_replication(
    sampler: &Sampler,
    marks: &[usize],
    horizon: usize,
    tail_start: usize,
    seed: u64,
    replication: usize,
) -> Replication {
    let game = sampler.game;
    let mut rng = replication_rng(seed, replication);
    // Cumulative payoff after `marks[q]` stages.
    let mut sums = vec![0.0; marks.len()];
    let mut next_mark = 0;
    while next_mark < marks.len() && marks[next_mark] == 0 {
        next_mark += 1;
    }
    let mut k = game.initial();
    let mut total = 0.0;
    let mut t = 0;
    while t < horizon && !game.is_absorbing(k) {
        let (_, _, g, next) = sampler.step(k, &mut rng);
        total += g;
        t += 1;
        k = next;
        while next_mark < marks.len() && marks[next_mark] == t {
            sums[next_mark] = total;
            next_mark += 1;
        }
    }
    let absorbed = game.is_absorbing(k);
    if next_mark < marks.len() {
        let r = game.absorbing_payoff(k);
        for q in next_mark..marks.len() {
            sums[q] = total + (marks[q] - t) as f64 * r;
        }
    }
    let value_at = |n: usize| -> f64 {
        if n == 0 {
            0.0
        } else {
            sums[marks.binary_search(&n).expect("marked stage")]
        }
    };
    let checkpoints = checkpoints(horizon);
    Replication {
        averages: checkpoints.iter().map(|&n| value_at(n) / n as f64).collect(),
        tail: (value_at(horizon) - value_at(tail_start)) / (horizon - tail_start) as f64,
        absorbed,
    }
}

fn mean_and_halfwidth(samples: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    let n = count as f64;
    let mean = samples.clone().sum::<f64>() / n;
    if count < 2 {
        return (mean, 0.0);
    }
    let var = samples.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, Z_95 * (var / n).sqrt())
}

/// Plays `replications` independent games of `horizon` stages under `(σ, τ)`.
pub fn simulate(
    game: &GameSpec,
    sigma: &StationaryStrategy,
    tau: &StationaryStrategy,
    horizon: usize,
    replications: usize,
    seed: u64,
) -> Result<SimulationReport> {
    if horizon < 1 || replications < 1 {
        return Err(Error::InvalidParameter(
            "horizon and replications must be at least 1".into(),
        ));
    }
    let sampler = Sampler::new(game, sigma, tau)?;
    let checks = checkpoints(horizon);
    let tail_start = horizon - tail_window(horizon);
    let mut marks = checks.clone();
    marks.push(tail_start);
    marks.sort_unstable();
    marks.dedup();

    let reps: Vec<Replication> = (0..replications)
        .into_par_iter()
        .map(|r| run_replication(&sampler, &marks, horizon, tail_start, seed, r))
        .collect();

    let checkpoints = checks
        .iter()
        .enumerate()
        .map(|(c, &n)| {
            let (mean, ci_halfwidth) = mean_and_halfwidth(reps.iter().map(|r| r.averages[c]), replications);
            CheckpointStat {
                n,
                mean,
                ci_halfwidth,
            }
        })
        .collect();
    let (tail_mean, tail_ci_halfwidth) = mean_and_halfwidth(reps.iter().map(|r| r.tail), replications);
    let absorption_rate = reps.iter().filter(|r| r.absorbed).count() as f64 / replications as f64;

    Ok(SimulationReport {
        horizon,
        replications,
        seed,
        checkpoints,
        absorption_rate,
        tail_mean,
        tail_ci_halfwidth,
    })
}

/// Exact `E[(1/n) Σ_{t≤n} g_t]` at each `n`, by forward propagation of the
/// state distribution.
pub fn expected_average_payoffs(
    game: &GameSpec,
    sigma: &StationaryStrategy,
    tau: &StationaryStrategy,
    ns: &[usize],
) -> Result<Vec<f64>> {
    Sampler::new(game, sigma, tau)?;
    let horizon = ns.iter().copied().max().unwrap_or(0);
    let mut dist = vec![0.0; game.num_states()];
    dist[game.initial()] = 1.0;
    let mut total = 0.0;
    let mut cumulative = vec![0.0; horizon + 1];
    for slot in cumulative.iter_mut().skip(1) {
        let mut next = vec![0.0; game.num_states()];
        for (k, &d) in dist.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            if game.is_absorbing(k) {
                total += d * game.absorbing_payoff(k);
                next[k] += d;
                continue;
            }
            for (i, &x) in sigma.mixed[k].iter().enumerate() {
                for (j, &y) in tau.mixed[k].iter().enumerate() {
                    let w = d * x * y;
                    if w == 0.0 {
                        continue;
                    }
                    total += w * game.stage_payoff(k, i, j);
                    for (acc, p) in next.iter_mut().zip(game.transition(k, i, j)) {
                        *acc += w * p;
                    }
                }
            }
        }
        dist = next;
        *slot = total;
    }
    Ok(ns.iter().map(|&n| cumulative[n] / n as f64).collect())
}

/// A stationary opponent strategy with a label for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Adversary {
    pub label: String,
    pub strategy: StationaryStrategy,
}

fn random_mixed(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.into_iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / len as f64; len]
    }
}

/// Opponents of `strategy.player` checked by the guarantee harness: best
/// responses at [`DEFAULT_LAMBDAS`], every pure stationary strategy when there
/// are at most [`MAX_PURE_ADVERSARIES`], and [`RANDOM_ADVERSARIES`] random
/// stationary strategies.
pub fn adversary_battery(
    game: &GameSpec,
    strategy: &StationaryStrategy,
    seed: u64,
) -> Result<Vec<Adversary>> {
    let opponent = strategy.player.opponent();
    let mut out = Vec::new();
    for lambda in DEFAULT_LAMBDAS {
        let br = best_response_discounted(game, strategy, lambda, 1e-8)?;
        out.push(Adversary {
            label: format!("br@{}", crate::fmt_num(lambda)),
            strategy: br.strategy(game)?,
        });
    }

    let counts: Vec<usize> = game
        .active_states()
        .iter()
        .map(|s| opponent.num_actions(s))
        .collect();
    let total = counts
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c))
        .unwrap_or(usize::MAX);
    if total <= MAX_PURE_ADVERSARIES {
        let mut actions = vec![0usize; counts.len()];
        for _ in 0..total {
            let label = format!(
                "pure:{}",
                actions
                    .iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join("-")
            );
            out.push(Adversary {
                label,
                strategy: StationaryStrategy::pure(game, opponent, &actions)?,
            });
            for (a, &c) in actions.iter_mut().zip(&counts) {
                *a += 1;
                if *a < c {
                    break;
                }
                *a = 0;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ad0e_75a7);
    for r in 0..RANDOM_ADVERSARIES {
        let mixed = counts.iter().map(|&c| random_mixed(&mut rng, c)).collect();
        out.push(Adversary {
            label: format!("random:{r}"),
            strategy: StationaryStrategy::new(game, opponent, mixed)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryVerdict {
    pub adversary: String,
    pub clause_a: bool,
    /// First checkpoint from which every checkpoint meets the floor.
    pub n_hat: Option<usize>,
    pub clause_b: bool,
    pub final_mean: f64,
    pub tail_mean: f64,
    #[serde(skip)]
    pub report: Option<SimulationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeReport {
    pub player: Player,
    pub initial_state: String,
    pub floor: f64,
    pub eps: f64,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub verdicts: Vec<AdversaryVerdict>,
    pub pass: bool,
    pub caveat: String,
}

impl GuaranteeReport {
    pub fn to_csv(&self) -> String {
        let mut out = SimulationReport::csv_header().to_string();
        for v in &self.verdicts {
            if let Some(r) = &v.report {
                out.push_str(&r.csv_rows(&v.adversary));
            }
        }
        out
    }

    pub fn verdict_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

const CAVEAT: &str = "Monte Carlo evidence against a finite battery of stationary opponents at a \
finite horizon; not a proof of the guarantee against all behavior strategies.";

/// Checks both long-run clauses for `strategy` from the game's initial state.
///
/// Clause (A): from some checkpoint `N̂` on, every checkpoint mean is within
/// `eps` plus its confidence half-width of the floor. Clause (B): the tail
/// average is, with the same slack.
#[allow(clippy::too_many_arguments)]
pub fn guarantee_report(
    game: &GameSpec,
    strategy: &StationaryStrategy,
    floor: &ValueVector,
    eps: f64,
    adversaries: &[Adversary],
    horizon: usize,
    replications: usize,
    seed: u64,
) -> Result<GuaranteeReport> {
    if adversaries.is_empty() {
        return Err(Error::EmptyAdversaryList);
    }
    if floor.len() != game.num_active() {
        return Err(Error::DimensionMismatch("floor length".into()));
    }
    let floor_value = floor.at_state(game, game.initial());
    let sign = match strategy.player {
        Player::One => 1.0,
        Player::Two => -1.0,
    };
    // Payoff `x` with slack `ci` meets the floor.
    let meets = |x: f64, ci: f64| sign * (x - floor_value) >= -eps - ci;

    let mut verdicts = Vec::with_capacity(adversaries.len());
    for adv in adversaries {
        if adv.strategy.player == strategy.player {
            return Err(Error::StrategyMismatch(format!(
                "adversary `{}` plays for the same player",
                adv.label
            )));
        }
        let (sigma, tau) = match strategy.player {
            Player::One => (strategy, &adv.strategy),
            Player::Two => (&adv.strategy, strategy),
        };
        let report = simulate(game, sigma, tau, horizon, replications, seed)?;
        let mut n_hat = None;
        for c in report.checkpoints.iter().rev() {
            if meets(c.mean, c.ci_halfwidth) {
                n_hat = Some(c.n);
            } else {
                break;
            }
        }
        let clause_b = meets(report.tail_mean, report.tail_ci_halfwidth);
        verdicts.push(AdversaryVerdict {
            adversary: adv.label.clone(),
            clause_a: n_hat.is_some(),
            n_hat,
            clause_b,
            final_mean: report.checkpoints.last().map_or(0.0, |c| c.mean),
            tail_mean: report.tail_mean,
            report: Some(report),
        });
    }
    let pass = verdicts.iter().all(|v| v.clause_a && v.clause_b);
    Ok(GuaranteeReport {
        player: strategy.player,
        initial_state: game.state_name(game.initial()).to_string(),
        floor: floor_value,
        eps,
        horizon,
        replications,
        seed,
        verdicts,
        pass,
        caveat: CAVEAT.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    fn pure(g: &GameSpec, p: Player, a: usize) -> StationaryStrategy {
        StationaryStrategy::pure(g, p, &vec![a; g.num_active()]).unwrap()
    }

    #[test]
    fn checkpoint_schedule() {
        assert_eq!(checkpoints(1), vec![1]);
        assert_eq!(checkpoints(100), vec![1, 2, 5, 10, 20, 50, 100]);
        assert_eq!(checkpoints(120), vec![1, 2, 5, 10, 20, 50, 100, 120]);
        assert_eq!(tail_window(10_000), 1_000);
        assert_eq!(tail_window(5), 1);
    }

    #[test]
    fn quit_pure_quit_is_deterministic() {
        let g = zoo::quit();
        let r = simulate(
            &g,
            &pure(&g, Player::One, 1),
            &pure(&g, Player::Two, 0),
            100,
            20,
            3,
        )
        .unwrap();
        let last = r.checkpoints.last().unwrap();
        assert_eq!(last.n, 100);
        assert!((last.mean - 0.99).abs() < 1e-14);
        assert!(last.ci_halfwidth < 1e-14);
        assert_eq!(r.absorption_rate, 1.0);
        assert_eq!(r.tail_mean, 1.0);
    }

    #[test]
    fn duel_pure_profiles() {
        let g = zoo::duel();
        let a1 = pure(&g, Player::One, 0);
        let r = simulate(&g, &a1, &pure(&g, Player::Two, 1), 50, 10, 1).unwrap();
        assert!(r.checkpoints.iter().all(|c| c.mean == 0.0));
        assert_eq!(r.absorption_rate, 0.0);
        let r = simulate(&g, &a1, &pure(&g, Player::Two, 0), 50, 10, 1).unwrap();
        for c in &r.checkpoints {
            assert!((c.mean - (c.n as f64 - 1.0) / c.n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn trajectory_payoffs_after_absorption_are_constant() {
        let g = zoo::duel();
        let sigma = StationaryStrategy::uniform(&g, Player::One);
        let tau = StationaryStrategy::uniform(&g, Player::Two);
        for rep in 0..20 {
            let tr = trajectory(&g, &sigma, &tau, 60, 9, rep).unwrap();
            if let Some(a) = tr.absorbed_at {
                let r = g.absorbing_payoff(tr.states[a]);
                assert!(tr.payoffs[a..].iter().all(|&p| p == r));
            }
        }
    }

    #[test]
    fn simulation_matches_replayed_trajectories() {
        let g = zoo::random_recursive(3, 2, 3, 0.2, 11).unwrap();
        let sigma = StationaryStrategy::uniform(&g, Player::One);
        let tau = StationaryStrategy::uniform(&g, Player::Two);
        let (h, reps, seed) = (40, 25, 77);
        let report = simulate(&g, &sigma, &tau, h, reps, seed).unwrap();
        let avg: f64 = (0..reps)
            .map(|r| {
                trajectory(&g, &sigma, &tau, h, seed, r)
                    .unwrap()
                    .payoffs
                    .iter()
                    .sum::<f64>()
                    / h as f64
            })
            .sum::<f64>()
            / reps as f64;
        assert!((report.checkpoints.last().unwrap().mean - avg).abs() < 1e-12);
    }

    #[test]
    fn exact_expectation_of_quit() {
        let g = zoo::quit();
        let e = expected_average_payoffs(
            &g,
            &pure(&g, Player::One, 1),
            &pure(&g, Player::Two, 0),
            &[1, 10, 100],
        )
        .unwrap();
        assert_eq!(e[0], 0.0);
        assert!((e[1] - 0.9).abs() < 1e-15);
        assert!((e[2] - 0.99).abs() < 1e-15);
    }

    #[test]
    fn argument_errors() {
        let g = zoo::quit();
        let s = pure(&g, Player::One, 0);
        let t = pure(&g, Player::Two, 0);
        assert!(simulate(&g, &s, &t, 0, 1, 0).is_err());
        assert!(simulate(&g, &t, &s, 10, 1, 0).is_err());
        assert!(matches!(
            guarantee_report(&g, &s, &ValueVector::zeros(1), 0.1, &[], 10, 1, 0),
            Err(Error::EmptyAdversaryList)
        ));
    }

    #[test]
    fn battery_composition() {
        let g = zoo::duel();
        let sigma = StationaryStrategy::uniform(&g, Player::One);
        let b = adversary_battery(&g, &sigma, 1).unwrap();
        assert_eq!(b.len(), 3 + 2 + RANDOM_ADVERSARIES);
        assert!(b.iter().all(|a| a.strategy.player == Player::Two));
        assert_eq!(b[3].label, "pure:0");
        // 3^5 pure strategies exceed the enumeration limit.
        let big = zoo::random_recursive(5, 1, 3, 0.5, 2).unwrap();
        let counts: usize = big.active_states().iter().map(|s| s.num_p2()).product();
        let b = adversary_battery(&big, &StationaryStrategy::uniform(&big, Player::One), 1).unwrap();
        let expected_pure = if counts <= MAX_PURE_ADVERSARIES { counts } else { 0 };
        assert_eq!(b.len(), 3 + expected_pure + RANDOM_ADVERSARIES);
    }

    #[test]
    fn duel_guarantee_from_zero_certificate() {
        let g = zoo::duel();
        let sigma = pure(&g, Player::One, 0);
        let battery = adversary_battery(&g, &sigma, 5).unwrap();
        let rep =
            guarantee_report(&g, &sigma, &ValueVector::zeros(1), 0.01, &battery, 1_000, 100, 5).unwrap();
        assert!(rep.pass);
        let csv = rep.to_csv();
        assert!(csv.starts_with("adversary,checkpoint_n,mean,ci_halfwidth,absorption_rate,tail_mean\n"));
        assert!(rep.verdict_json().contains("\"pass\": true"));
    }
}

//! Everett certificates for recursive games.
//!
//! A vector `u` over the active states is a plus-certificate when
//! `Φ(0,u) ≥ u` with strict improvement wherever `u > 0`, and a
//! minus-certificate when `Φ(0,u) ≤ u` with strict decrease wherever `u < 0`.
//! The value of the game is the only point in the closures of both regions.
//! Player 1 guarantees any plus-certificate by playing, at each state, an
//! optimal action of the one-shot game behind `Φ(0,u)`; player 2 symmetrically.
//!
//! Strict inequalities are tested with an explicit margin `strict_tol`, weak
//! ones with slack `weak_tol`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matgame::solve_matrix_game;
use crate::model::{GameSpec, Player, StationaryStrategy, ValueVector};
use crate::shapley::{apply_operator, stage_matrix};

/// Slack of the Mertens–Neyman inequality check.
pub const MN_TOL: f64 = 1e-10;

const BISECTION_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    /// The player who guarantees certificates of this side.
    pub fn player(self) -> Player {
        match self {
            Side::Plus => Player::One,
            Side::Minus => Player::Two,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(Side::Plus),
            "minus" => Ok(Side::Minus),
            other => Err(Error::InvalidParameter(format!(
                "side must be plus or minus, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub weak_tol: f64,
    pub strict_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            weak_tol: 1e-9,
            strict_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Per-state margins of a candidate vector against one Everett region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateReport {
    pub states: Vec<String>,
    pub u: ValueVector,
    pub side: Side,
    /// `Φ(0,u)(k) − u(k)`, sign-flipped on the minus side.
    pub weak_margin: Vec<f64>,
    /// Active states where `u` is beyond `strict_tol` (above for plus, below for minus).
    pub strict_set: Vec<usize>,
    /// Margins on `strict_set`, in the same order.
    pub strict_margin: Vec<f64>,
    pub verdict: Verdict,
    pub tolerances: Tolerances,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// How far the report is from passing; zero when it passes.
    pub fn violation(&self) -> f64 {
        let weak = self
            .weak_margin
            .iter()
            .map(|m| -m - self.tolerances.weak_tol)
            .fold(0.0_f64, f64::max);
        let strict = self
            .strict_margin
            .iter()
            .map(|m| self.tolerances.strict_tol - m)
            .fold(0.0_f64, f64::max);
        weak.max(strict)
    }

    /// Active states that break a weak or strict condition.
    pub fn failing_states(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .weak_margin
            .iter()
            .enumerate()
            .filter(|(_, &m)| m < -self.tolerances.weak_tol)
            .map(|(k, _)| k)
            .collect();
        for (&k, &m) in self.strict_set.iter().zip(&self.strict_margin) {
            if m < self.tolerances.strict_tol && !out.contains(&k) {
                out.push(k);
            }
        }
        out.sort_unstable();
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

/// Margins of `u` against the plus or minus region from one evaluation of `Φ(0,u)`.
pub fn xi_margin(
    game: &GameSpec,
    u: &ValueVector,
    side: Side,
    tolerances: Tolerances,
) -> Result<CertificateReport> {
    game.ensure_recursive()?;
    let phi = apply_operator(game, 0.0, u)?;
    let s = side.sign();
    let weak_margin: Vec<f64> = phi.iter().zip(u.iter()).map(|(p, x)| s * (p - x)).collect();
    let strict_set: Vec<usize> = (0..u.len())
        .filter(|&k| s * u[k] > tolerances.strict_tol)
        .collect();
    let strict_margin: Vec<f64> = strict_set.iter().map(|&k| weak_margin[k]).collect();
    let pass = weak_margin.iter().all(|&m| m >= -tolerances.weak_tol)
        && strict_margin.iter().all(|&m| m >= tolerances.strict_tol);
    Ok(CertificateReport {
        states: (0..game.num_active())
            .map(|k| game.state_name(k).to_string())
            .collect(),
        u: u.clone(),
        side,
        weak_margin,
        strict_set,
        strict_margin,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        tolerances,
    })
}

/// `Φ(0,u) ≥ u` and `u(k) ≤ 0` wherever `Φ(0,u)(k) = u(k)`, both up to `tol`.
pub fn equivalent_characterization_check(game: &GameSpec, u: &ValueVector, tol: f64) -> Result<bool> {
    game.ensure_recursive()?;
    let phi = apply_operator(game, 0.0, u)?;
    Ok(phi.iter().zip(u.iter()).all(|(&p, &x)| {
        let improves = p >= x - tol;
        let tight = (p - x).abs() <= tol;
        improves && (!tight || x <= tol)
    }))
}

/// Largest grid `λ̄` such that `Φ(λ,u) ≥ u` (up to [`MN_TOL`]) for every grid `λ ≤ λ̄`.
pub fn mn_condition_check(game: &GameSpec, u: &ValueVector, grid: &[f64]) -> Result<Option<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if let Some(&l) = grid.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
        return Err(Error::InvalidGrid(format!("{l} outside (0, 1]")));
    }
    let mut ascending = grid.to_vec();
    ascending.sort_by(f64::total_cmp);
    ascending.dedup();
    let mut best = None;
    for lambda in ascending {
        let phi = apply_operator(game, lambda, u)?;
        if phi.iter().zip(u.iter()).all(|(p, x)| *p >= x - MN_TOL) {
            best = Some(lambda);
        } else {
            break;
        }
    }
    Ok(best)
}

/// Knobs of [`find_certificate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub tolerances: Tolerances,
    /// Step sizes; each one yields one candidate.
    pub deltas: Vec<f64>,
    /// Step-and-restabilize rounds per candidate.
    pub max_rounds: usize,
    /// `Φ(0,·)` evaluations per stabilization.
    pub max_stabilize_iters: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        let tolerances = Tolerances::default();
        let deltas = (0..22).map(|k| tolerances.strict_tol * 2f64.powi(k)).collect();
        Self {
            tolerances,
            deltas,
            max_rounds: 64,
            max_stabilize_iters: 500,
        }
    }
}

/// Result of a certificate search. A failed search is a normal outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSearch {
    pub found: bool,
    /// Best passing report, or the least-violating one when nothing passed.
    pub report: CertificateReport,
    /// `‖u − target‖∞`.
    pub distance: f64,
    pub target: ValueVector,
    pub candidates: usize,
}

/// Pushes `u` toward its region: `min(u, Φ(0,u))` for plus, `max` for minus.
fn stabilize(game: &GameSpec, side: Side, u: &mut ValueVector, iters: usize) -> Result<()> {
    for _ in 0..iters {
        let phi = apply_operator(game, 0.0, u)?;
        let mut change = 0.0_f64;
        for (x, p) in u.0.iter_mut().zip(phi.iter()) {
            let next = match side {
                Side::Plus => x.min(*p),
                Side::Minus => x.max(*p),
            };
            change = change.max((next - *x).abs());
            *x = next;
        }
        if change <= 1e-14 {
            break;
        }
    }
    Ok(())
}

fn candidate(
    game: &GameSpec,
    side: Side,
    seed: &ValueVector,
    delta: f64,
    options: &SearchOptions,
) -> Result<CertificateReport> {
    let mut u = seed.clone();
    stabilize(game, side, &mut u, options.max_stabilize_iters)?;
    let mut report = xi_margin(game, &u, side, options.tolerances)?;
    if delta == 0.0 {
        return Ok(report);
    }
    let mut last_step = None;
    for _ in 0..options.max_rounds {
        if report.passed() {
            break;
        }
        let failing = report.failing_states();
        let before = u.clone();
        for &k in &failing {
            u.0[k] -= side.sign() * delta;
        }
        stabilize(game, side, &mut u, options.max_stabilize_iters)?;
        report = xi_margin(game, &u, side, options.tolerances)?;
        last_step = Some((before, failing));
    }
    if let (true, Some((before, failing))) = (report.passed(), last_step) {
        report = shorten_last_step(game, side, &before, &failing, delta, report, options)?;
    }
    Ok(report)
}

/// Bisects the final step for the shortest one that still passes.
fn shorten_last_step(
    game: &GameSpec,
    side: Side,
    before: &ValueVector,
    failing: &[usize],
    delta: f64,
    passing: CertificateReport,
    options: &SearchOptions,
) -> Result<CertificateReport> {
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = passing;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let mut u = before.clone();
        for &k in failing {
            u.0[k] -= side.sign() * mid * delta;
        }
        stabilize(game, side, &mut u, options.max_stabilize_iters)?;
        let report = xi_margin(game, &u, side, options.tolerances)?;
        if report.passed() {
            hi = mid;
            best = report;
        } else {
            lo = mid;
        }
    }
    Ok(best)
}

/// Searches for a certificate of `side` close to `target`.
///
/// Candidate `0` stabilizes the target itself; candidate `i ≥ 1` then steps
/// the failing coordinates away by `deltas[i−1]` and restabilizes, for up to
/// `max_rounds` rounds. The passing candidate closest to `target` wins, ties
/// going to the lower index. The winner is re-verified before it is returned.
pub fn find_certificate(
    game: &GameSpec,
    side: Side,
    target: &ValueVector,
    options: &SearchOptions,
) -> Result<CertificateSearch> {
    game.ensure_recursive()?;
    if target.len() != game.num_active() {
        return Err(Error::DimensionMismatch("target length".into()));
    }
    let m = game.payoff_bound();
    let seed = ValueVector(target.iter().map(|v| v.clamp(-m, m)).collect());
    let deltas: Vec<f64> = std::iter::once(0.0)
        .chain(options.deltas.iter().copied())
        .collect();
    let reports: Vec<CertificateReport> = deltas
        .par_iter()
        .map(|&d| candidate(game, side, &seed, d, options))
        .collect::<Result<_>>()?;

    // Passing first, then least violation, then distance, then index.
    let (_, best) = reports
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            b.passed()
                .cmp(&a.passed())
                .then(a.violation().total_cmp(&b.violation()))
                .then(a.u.sup_dist(target).total_cmp(&b.u.sup_dist(target)))
                .then(ia.cmp(ib))
        })
        .expect("at least one candidate");

    let report = xi_margin(game, &best.u, side, options.tolerances)?;
    debug_assert_eq!(report.verdict, best.verdict);
    Ok(CertificateSearch {
        found: report.passed(),
        distance: report.u.sup_dist(target),
        report,
        target: target.clone(),
        candidates: reports.len(),
    })
}

/// Stationary strategy of the certificate's player: at each active state an
/// optimal action of the one-shot game behind `Φ(0,u)`.
///
/// No discount factor enters; the action depends on the current state only.
pub fn extract_stationary_strategy(
    game: &GameSpec,
    certificate: &CertificateReport,
    player: Player,
) -> Result<StationaryStrategy> {
    game.ensure_recursive()?;
    if certificate.side.player() != player {
        return Err(Error::CertificateNotValid(format!(
            "a {} certificate is guaranteed by player {}, not player {player}",
            certificate.side,
            certificate.side.player()
        )));
    }
    let names_match = certificate.states.len() == game.num_active()
        && certificate
            .states
            .iter()
            .enumerate()
            .all(|(k, name)| name == game.state_name(k));
    if !names_match || certificate.u.len() != game.num_active() {
        return Err(Error::CertificateNotValid(
            "certificate states do not match the game's active states".into(),
        ));
    }
    let check = xi_margin(game, &certificate.u, certificate.side, certificate.tolerances)?;
    if !check.passed() {
        return Err(Error::CertificateNotValid(format!(
            "margins fail for the {} side (violation {:e})",
            certificate.side,
            check.violation()
        )));
    }
    let full = game.extend(&certificate.u);
    let mixed = (0..game.num_active())
        .map(|k| {
            let sol = solve_matrix_game(&stage_matrix(game, k, 0.0, &full))?;
            Ok(match player {
                Player::One => sol.x,
                Player::Two => sol.y,
            })
        })
        .collect::<Result<_>>()?;
    Ok(StationaryStrategy { player, mixed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgame::{row_security, Matrix};
    use crate::zoo;

    fn vv(v: &[f64]) -> ValueVector {
        ValueVector(v.to_vec())
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn quit_margins() {
        let g = zoo::quit();
        let r = xi_margin(&g, &vv(&[0.9]), Side::Plus, tol()).unwrap();
        assert!((r.weak_margin[0] - 0.1).abs() < 1e-12);
        assert_eq!(r.strict_set, vec![0]);
        assert!((r.strict_margin[0] - 0.1).abs() < 1e-12);
        assert!(r.passed());

        let r = xi_margin(&g, &vv(&[1.0]), Side::Minus, tol()).unwrap();
        assert_eq!(r.weak_margin, vec![0.0]);
        assert!(r.strict_set.is_empty());
        assert!(r.passed());

        let r = xi_margin(&g, &vv(&[1.1]), Side::Plus, tol()).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn duel_margins() {
        let g = zoo::duel();
        let r = xi_margin(&g, &vv(&[0.5]), Side::Plus, tol()).unwrap();
        assert_eq!(r.weak_margin, vec![0.0]);
        assert_eq!(r.strict_set, vec![0]);
        assert_eq!(r.strict_margin, vec![0.0]);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.failing_states(), vec![0]);
        for side in [Side::Plus, Side::Minus] {
            assert!(xi_margin(&g, &vv(&[0.0]), side, tol()).unwrap().passed());
        }
    }

    #[test]
    fn not_recursive_is_rejected() {
        let g = zoo::bigmatch();
        assert!(matches!(
            xi_margin(&g, &vv(&[0.5]), Side::Plus, tol()),
            Err(Error::NotRecursive(_))
        ));
        assert!(equivalent_characterization_check(&g, &vv(&[0.5]), 1e-9).is_err());
        assert!(find_certificate(&g, Side::Plus, &vv(&[0.5]), &SearchOptions::default()).is_err());
    }

    #[test]
    fn equivalent_characterization_examples() {
        assert!(equivalent_characterization_check(&zoo::quit(), &vv(&[0.9]), 1e-9).unwrap());
        assert!(!equivalent_characterization_check(&zoo::duel(), &vv(&[0.5]), 1e-9).unwrap());
        assert!(equivalent_characterization_check(&zoo::duel(), &vv(&[-0.3]), 1e-9).unwrap());
    }

    #[test]
    fn mn_condition_examples() {
        let q = zoo::quit();
        let grid = [0.2, 0.1, 0.05];
        assert_eq!(mn_condition_check(&q, &vv(&[0.9]), &grid).unwrap(), Some(0.1));
        assert_eq!(mn_condition_check(&q, &vv(&[1.1]), &grid).unwrap(), None);
        assert_eq!(
            mn_condition_check(&zoo::duel(), &vv(&[0.0]), &grid).unwrap(),
            Some(0.2)
        );
        assert!(mn_condition_check(&q, &vv(&[0.9]), &[]).is_err());
        // Generic check also runs on non-recursive games.
        assert!(mn_condition_check(&zoo::bigmatch(), &vv(&[0.5]), &grid).is_ok());
    }

    #[test]
    fn search_on_quit_plus() {
        let s = find_certificate(&zoo::quit(), Side::Plus, &vv(&[1.0]), &SearchOptions::default()).unwrap();
        assert!(s.found);
        let u = s.report.u[0];
        assert!((0.99..1.0).contains(&u), "u = {u}");
    }

    #[test]
    fn search_on_duel() {
        let opts = SearchOptions::default();
        let s = find_certificate(&zoo::duel(), Side::Plus, &vv(&[0.0]), &opts).unwrap();
        assert!(s.found && s.report.u[0] <= 0.0 && s.distance < 1e-3);

        // Every u in [-1, 1] is a fixed point of Φ(0,·), so only u ≤ 0 (up to
        // the strict tolerance) passes.
        let s = find_certificate(&zoo::duel(), Side::Plus, &vv(&[0.5]), &opts).unwrap();
        assert!(s.found);
        assert!(s.report.u[0] <= opts.tolerances.strict_tol);
        assert!(
            (s.distance - 0.5).abs() <= opts.tolerances.strict_tol,
            "distance {}",
            s.distance
        );

        let s = find_certificate(&zoo::duel(), Side::Minus, &vv(&[-0.5]), &opts).unwrap();
        assert!(s.found && s.report.u[0] >= -opts.tolerances.strict_tol);
    }

    #[test]
    fn search_failure_is_reported_not_raised() {
        let opts = SearchOptions {
            deltas: vec![],
            ..SearchOptions::default()
        };
        let s = find_certificate(&zoo::duel(), Side::Plus, &vv(&[0.5]), &opts).unwrap();
        assert!(!s.found);
        assert_eq!(s.candidates, 1);
        assert!(s.report.violation() > 0.0);
    }

    #[test]
    fn strategy_extraction_examples() {
        let q = zoo::quit();
        let cert = xi_margin(&q, &vv(&[0.9]), Side::Plus, tol()).unwrap();
        let sigma = extract_stationary_strategy(&q, &cert, Player::One).unwrap();
        assert_eq!(sigma.mixed, vec![vec![0.0, 1.0]]);

        let d = zoo::duel();
        let cert = xi_margin(&d, &vv(&[0.0]), Side::Plus, tol()).unwrap();
        let sigma = extract_stationary_strategy(&d, &cert, Player::One).unwrap();
        assert_eq!(sigma.mixed, vec![vec![1.0, 0.0]]);

        let cert = xi_margin(&d, &vv(&[-0.5]), Side::Plus, tol()).unwrap();
        let sigma = extract_stationary_strategy(&d, &cert, Player::One).unwrap();
        let a = Matrix::from_rows(&[vec![1.0, -0.5], vec![-0.5, -1.0]]).unwrap();
        assert!(row_security(&a, &sigma.mixed[0]) >= -0.5 - 1e-8);
    }

    #[test]
    fn strategy_extraction_errors() {
        let d = zoo::duel();
        let bad = xi_margin(&d, &vv(&[0.5]), Side::Plus, tol()).unwrap();
        assert!(matches!(
            extract_stationary_strategy(&d, &bad, Player::One),
            Err(Error::CertificateNotValid(_))
        ));
        let good = xi_margin(&d, &vv(&[0.0]), Side::Plus, tol()).unwrap();
        assert!(matches!(
            extract_stationary_strategy(&d, &good, Player::Two),
            Err(Error::CertificateNotValid(_))
        ));
        // A doctored verdict does not get past re-verification.
        let mut forged = bad.clone();
        forged.verdict = Verdict::Pass;
        assert!(extract_stationary_strategy(&d, &forged, Player::One).is_err());
    }

    #[test]
    fn report_json_round_trip() {
        let r = xi_margin(&zoo::quit(), &vv(&[0.9]), Side::Plus, tol()).unwrap();
        let back: CertificateReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_json().contains("\"side\": \"plus\""));
    }
}

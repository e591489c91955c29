//! Finite zero-sum stochastic games: representation, validation and the JSON
//! game file format.
//!
//! States are laid out with the active (non-absorbing) states first and the
//! absorbing states after them, each group in input order. A [`ValueVector`]
//! covers the active states only; absorbing coordinates are implied by the
//! absorbing payoffs.
//!
//! Stage payoffs follow the table `g` up to and including the stage at which a
//! transition into an absorbing state happens. The absorbing payoff is earned
//! from the next stage on, forever.

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matgame::Matrix;

/// Rows deviating from 1 by at most this much are accepted as they are.
pub const ROW_SUM_EXACT_TOL: f64 = 1e-12;
/// Rows deviating from 1 by at most this much are rescaled; larger deviations are rejected.
pub const ROW_SUM_RESCALE_TOL: f64 = 1e-9;

/// One entry of the `states` array of a game file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub name: String,
    pub absorbing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSets {
    pub p1: Vec<String>,
    pub p2: Vec<String>,
}

/// Raw game description as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub states: Vec<StateEntry>,
    #[serde(default)]
    pub actions: IndexMap<String, ActionSets>,
    #[serde(default)]
    pub payoffs: IndexMap<String, Vec<Vec<f64>>>,
    #[serde(default)]
    pub transitions: IndexMap<String, Vec<Vec<IndexMap<String, f64>>>>,
    pub initial: String,
    /// Must be set for games without any active state.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub trivial: bool,
}

/// Shape of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateDef {
    Absorbing { payoff: f64 },
    Active { p1_actions: usize, p2_actions: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveState {
    pub name: String,
    pub p1_actions: Vec<String>,
    pub p2_actions: Vec<String>,
    payoff: Matrix,
    /// Row-major over `(i, j)`, each block a distribution over all states.
    transitions: Vec<f64>,
}

impl ActiveState {
    #[inline]
    pub fn num_p1(&self) -> usize {
        self.p1_actions.len()
    }

    #[inline]
    pub fn num_p2(&self) -> usize {
        self.p2_actions.len()
    }

    pub fn payoff(&self) -> &Matrix {
        &self.payoff
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingState {
    pub name: String,
    pub payoff: f64,
}

/// A validated game. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    active: Vec<ActiveState>,
    absorbing: Vec<AbsorbingState>,
    initial: usize,
    payoff_bound: f64,
}

impl GameSpec {
    pub fn num_states(&self) -> usize {
        self.active.len() + self.absorbing.len()
    }

    pub fn num_active(&self) -> usize {
        self.active.len()
    }

    pub fn active_states(&self) -> &[ActiveState] {
        &self.active
    }

    pub fn active(&self, k: usize) -> &ActiveState {
        &self.active[k]
    }

    pub fn absorbing_states(&self) -> &[AbsorbingState] {
        &self.absorbing
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    /// Same game started from state `k`.
    pub fn with_initial(&self, k: usize) -> Result<Self> {
        if k >= self.num_states() {
            return Err(Error::InvalidParameter(format!("initial state {k} out of range")));
        }
        Ok(Self {
            initial: k,
            ..self.clone()
        })
    }

    pub fn is_absorbing(&self, k: usize) -> bool {
        k >= self.active.len()
    }

    pub fn state_name(&self, k: usize) -> &str {
        if k < self.active.len() {
            &self.active[k].name
        } else {
            &self.absorbing[k - self.active.len()].name
        }
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        (0..self.num_states()).find(|&k| self.state_name(k) == name)
    }

    pub fn state_def(&self, k: usize) -> StateDef {
        if k < self.active.len() {
            let s = &self.active[k];
            StateDef::Active {
                p1_actions: s.num_p1(),
                p2_actions: s.num_p2(),
            }
        } else {
            StateDef::Absorbing {
                payoff: self.absorbing[k - self.active.len()].payoff,
            }
        }
    }

    /// Payoff of the absorbing state with global index `k`.
    pub fn absorbing_payoff(&self, k: usize) -> f64 {
        self.absorbing[k - self.active.len()].payoff
    }

    /// `M = max(|g|, |absorbing payoffs|)`.
    pub fn payoff_bound(&self) -> f64 {
        self.payoff_bound
    }

    #[inline]
    pub fn stage_payoff(&self, k: usize, i: usize, j: usize) -> f64 {
        self.active[k].payoff.get(i, j)
    }

    /// Distribution of the next state after `(i, j)` at active state `k`.
    #[inline]
    pub fn transition(&self, k: usize, i: usize, j: usize) -> &[f64] {
        let s = &self.active[k];
        let len = self.num_states();
        let at = (i * s.num_p2() + j) * len;
        &s.transitions[at..at + len]
    }

    /// Extends active-state values by the absorbing payoffs.
    pub fn extend(&self, f: &[f64]) -> Vec<f64> {
        let mut full = Vec::with_capacity(self.num_states());
        full.extend_from_slice(f);
        full.extend(self.absorbing.iter().map(|a| a.payoff));
        full
    }

    /// True iff every active stage payoff is exactly zero.
    pub fn is_recursive(&self) -> bool {
        self.active
            .iter()
            .all(|s| s.payoff.as_slice().iter().all(|&g| g == 0.0))
    }

    pub fn ensure_recursive(&self) -> Result<()> {
        match self
            .active
            .iter()
            .find(|s| s.payoff.as_slice().iter().any(|&g| g != 0.0))
        {
            Some(s) => Err(Error::NotRecursive(s.name.clone())),
            None => Ok(()),
        }
    }

    /// A game without active states; its value is the initial absorbing payoff.
    pub fn is_trivial(&self) -> bool {
        self.active.is_empty()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GameFile = serde_json::from_str(text)?;
        validate(&raw)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Raw description in canonical state order.
    pub fn to_file(&self) -> GameFile {
        let n = self.num_states();
        let mut states = Vec::with_capacity(n);
        let mut actions = IndexMap::new();
        let mut payoffs = IndexMap::new();
        let mut transitions = IndexMap::new();
        for (k, s) in self.active.iter().enumerate() {
            states.push(StateEntry {
                name: s.name.clone(),
                absorbing: false,
                payoff: None,
            });
            actions.insert(
                s.name.clone(),
                ActionSets {
                    p1: s.p1_actions.clone(),
                    p2: s.p2_actions.clone(),
                },
            );
            payoffs.insert(s.name.clone(), s.payoff.to_rows());
            let rows = (0..s.num_p1())
                .map(|i| {
                    (0..s.num_p2())
                        .map(|j| {
                            self.transition(k, i, j)
                                .iter()
                                .enumerate()
                                .filter(|(_, &p)| p != 0.0)
                                .map(|(t, &p)| (self.state_name(t).to_string(), p))
                                .collect()
                        })
                        .collect()
                })
                .collect();
            transitions.insert(s.name.clone(), rows);
        }
        for a in &self.absorbing {
            states.push(StateEntry {
                name: a.name.clone(),
                absorbing: true,
                payoff: Some(a.payoff),
            });
        }
        GameFile {
            states,
            actions,
            payoffs,
            transitions,
            initial: self.state_name(self.initial).to_string(),
            trivial: self.active.is_empty(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_file()).expect("game file serializes");
        text.push('\n');
        text
    }
}

/// Checks a raw description and builds the canonical [`GameSpec`].
pub fn validate(raw: &GameFile) -> Result<GameSpec> {
    let mut seen = HashSet::new();
    for s in &raw.states {
        if !seen.insert(s.name.as_str()) {
            return Err(Error::DuplicateState(s.name.clone()));
        }
        match (s.absorbing, s.payoff) {
            (true, None) => {
                return Err(Error::Malformed(format!(
                    "absorbing state `{}` needs a payoff",
                    s.name
                )))
            }
            (false, Some(_)) => {
                return Err(Error::Malformed(format!(
                    "active state `{}` must not carry a payoff",
                    s.name
                )))
            }
            (true, Some(p)) if !p.is_finite() => {
                return Err(Error::NonFiniteEntry(format!("payoff of `{}`", s.name)))
            }
            _ => {}
        }
    }

    // Canonical layout: active first, then absorbing.
    let order: Vec<&StateEntry> = raw
        .states
        .iter()
        .filter(|s| !s.absorbing)
        .chain(raw.states.iter().filter(|s| s.absorbing))
        .collect();
    let index: IndexMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(k, s)| (s.name.as_str(), k))
        .collect();
    let num_states = order.len();
    let num_active = order.iter().filter(|s| !s.absorbing).count();

    for key in raw
        .actions
        .keys()
        .chain(raw.payoffs.keys())
        .chain(raw.transitions.keys())
    {
        match index.get(key.as_str()) {
            None => return Err(Error::UnknownState(key.clone())),
            Some(&k) if k >= num_active => {
                return Err(Error::Malformed(format!(
                    "absorbing state `{key}` must not have actions, payoffs or transitions"
                )))
            }
            _ => {}
        }
    }

    let mut active = Vec::with_capacity(num_active);
    for s in order.iter().take(num_active) {
        let name = &s.name;
        let acts = raw
            .actions
            .get(name)
            .ok_or_else(|| Error::Malformed(format!("missing actions for `{name}`")))?;
        let (m, n) = (acts.p1.len(), acts.p2.len());
        if m == 0 || n == 0 {
            return Err(Error::DimensionMismatch(format!(
                "state `{name}` needs at least one action per player"
            )));
        }
        let pay = raw
            .payoffs
            .get(name)
            .ok_or_else(|| Error::Malformed(format!("missing payoffs for `{name}`")))?;
        if pay.len() != m || pay.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "payoff matrix of `{name}` must be {m}x{n}"
            )));
        }
        if pay.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteEntry(format!("payoff matrix of `{name}`")));
        }
        let trans = raw
            .transitions
            .get(name)
            .ok_or_else(|| Error::Malformed(format!("missing transitions for `{name}`")))?;
        if trans.len() != m || trans.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "transition table of `{name}` must be {m}x{n}"
            )));
        }
        let mut flat = vec![0.0; m * n * num_states];
        for (i, row) in trans.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                let dist = &mut flat[(i * n + j) * num_states..(i * n + j + 1) * num_states];
                for (target, &p) in cell {
                    let &t = index
                        .get(target.as_str())
                        .ok_or_else(|| Error::UnknownState(target.clone()))?;
                    dist[t] += p;
                }
                normalize_row(dist, name, i, j)?;
            }
        }
        active.push(ActiveState {
            name: name.clone(),
            p1_actions: acts.p1.clone(),
            p2_actions: acts.p2.clone(),
            payoff: Matrix::from_rows(pay)?,
            transitions: flat,
        });
    }

    if active.is_empty() && !raw.trivial {
        return Err(Error::NoActiveState);
    }

    let absorbing: Vec<AbsorbingState> = order
        .iter()
        .skip(num_active)
        .map(|s| AbsorbingState {
            name: s.name.clone(),
            payoff: s.payoff.unwrap_or_default(),
        })
        .collect();

    let &initial = index
        .get(raw.initial.as_str())
        .ok_or_else(|| Error::UnknownState(raw.initial.clone()))?;

    let payoff_bound = active
        .iter()
        .flat_map(|s| s.payoff.as_slice().iter())
        .chain(absorbing.iter().map(|a| &a.payoff))
        .fold(0.0_f64, |acc, g| acc.max(g.abs()));

    Ok(GameSpec {
        active,
        absorbing,
        initial,
        payoff_bound,
    })
}

/// Enforces the stochastic-row rule in place.
fn normalize_row(dist: &mut [f64], state: &str, row: usize, col: usize) -> Result<()> {
    if let Some(&bad) = dist.iter().find(|p| !p.is_finite()) {
        return Err(Error::NonFiniteEntry(format!(
            "transition probability {bad} for `{state}`"
        )));
    }
    if let Some(&value) = dist.iter().find(|&&p| p < 0.0) {
        return Err(Error::NegativeProbability {
            state: state.to_string(),
            row,
            col,
            value,
        });
    }
    let sum: f64 = dist.iter().sum();
    let deviation = (sum - 1.0).abs();
    if deviation > ROW_SUM_RESCALE_TOL {
        return Err(Error::NonStochasticRow {
            state: state.to_string(),
            row,
            col,
            sum,
        });
    }
    if deviation > ROW_SUM_EXACT_TOL {
        for p in dist.iter_mut() {
            *p /= sum;
        }
    }
    Ok(())
}

/// One value per active state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueVector(pub Vec<f64>);

impl ValueVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self(vec![value; len])
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn sup_dist(&self, other: &ValueVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Value at global state `k`, falling back to the absorbing payoff.
    pub fn at_state(&self, game: &GameSpec, k: usize) -> f64 {
        if game.is_absorbing(k) {
            game.absorbing_payoff(k)
        } else {
            self.0[k]
        }
    }
}

impl std::ops::Deref for ValueVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ValueVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Player {
    /// Maximizer.
    One,
    /// Minimizer.
    Two,
}

impl Player {
    pub fn opponent(self) -> Self {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn num_actions(self, state: &ActiveState) -> usize {
        match self {
            Player::One => state.num_p1(),
            Player::Two => state.num_p2(),
        }
    }
}

impl TryFrom<u8> for Player {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Player::One),
            2 => Ok(Player::Two),
            _ => Err(format!("player must be 1 or 2, got {v}")),
        }
    }
}

impl From<Player> for u8 {
    fn from(p: Player) -> u8 {
        match p {
            Player::One => 1,
            Player::Two => 2,
        }
    }
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

/// A mixed action per active state for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryStrategy {
    pub player: Player,
    pub mixed: Vec<Vec<f64>>,
}

impl StationaryStrategy {
    /// Checks shapes and probabilities; rescales rows within the rescale tolerance.
    pub fn new(game: &GameSpec, player: Player, mut mixed: Vec<Vec<f64>>) -> Result<Self> {
        if mixed.len() != game.num_active() {
            return Err(Error::StrategyMismatch(format!(
                "{} mixed actions for {} active states",
                mixed.len(),
                game.num_active()
            )));
        }
        for (k, row) in mixed.iter_mut().enumerate() {
            let state = game.active(k);
            if row.len() != player.num_actions(state) {
                return Err(Error::StrategyMismatch(format!(
                    "state `{}` has {} actions for player {player}, strategy gives {}",
                    state.name,
                    player.num_actions(state),
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::StrategyMismatch(format!(
                    "invalid probability at state `{}`",
                    state.name
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_RESCALE_TOL {
                return Err(Error::StrategyMismatch(format!(
                    "mixed action at state `{}` sums to {sum}",
                    state.name
                )));
            }
            if (sum - 1.0).abs() > ROW_SUM_EXACT_TOL {
                row.iter_mut().for_each(|p| *p /= sum);
            }
        }
        Ok(Self { player, mixed })
    }

    /// Plays `actions[k]` with certainty at active state `k`.
    pub fn pure(game: &GameSpec, player: Player, actions: &[usize]) -> Result<Self> {
        if actions.len() != game.num_active() {
            return Err(Error::StrategyMismatch("one action per active state".into()));
        }
        let mixed = actions
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let count = player.num_actions(game.active(k));
                if a >= count {
                    return Err(Error::StrategyMismatch(format!(
                        "action {a} out of range at state `{}`",
                        game.active(k).name
                    )));
                }
                let mut row = vec![0.0; count];
                row[a] = 1.0;
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(Self { player, mixed })
    }

    pub fn uniform(game: &GameSpec, player: Player) -> Self {
        let mixed = game
            .active_states()
            .iter()
            .map(|s| {
                let c = player.num_actions(s);
                vec![1.0 / c as f64; c]
            })
            .collect();
        Self { player, mixed }
    }

    /// Confirms the strategy still fits `game`.
    pub fn check(&self, game: &GameSpec) -> Result<()> {
        Self::new(game, self.player, self.mixed.clone()).map(|_| ())
    }

    /// Reads a strategy file and checks it against `game`.
    pub fn from_json(game: &GameSpec, text: &str) -> Result<Self> {
        let raw: Self = serde_json::from_str(text)?;
        Self::new(game, raw.player, raw.mixed)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("strategy serializes");
        text.push('\n');
        text
    }
}

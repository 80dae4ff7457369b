//! Finite discounted decision models, value functions, policies and
//! history-dependent strategies.
//!
//! A [`FiniteMdp`] can only be obtained from a [`MdpDocument`] that passes
//! [`validate`]; everything downstream relies on its invariants:
//!
//! * `0 < beta < 1`
//! * every feasible set is nonempty
//! * every feasible pair has a finite reward and a stochastic transition row
//! * infeasible pairs carry no reward and no transition entries

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on transition row sums before exact renormalization.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Upper limit on `n_states` and `n_actions` accepted from a document.
pub const MAX_DIMENSION: usize = 1 << 20;

/// Histories are only tabulated for strategies at most this long.
pub const MAX_MATERIALIZED_HORIZON: usize = 4;

/// ... and for models with at most this many state-action pairs.
pub const MAX_MATERIALIZED_PAIRS: usize = 12;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("invalid model:\n{0}")]
    Invalid(ValidationReport),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("state {state} out of range (n_states = {n_states})")]
    StateOutOfRange { state: usize, n_states: usize },
    #[error("action {action} is not feasible in state {state}")]
    InfeasibleAction { state: usize, action: usize },
    #[error("strategy too large to tabulate: horizon {horizon}, {pairs} state-action pairs")]
    TooLargeToMaterialize { horizon: usize, pairs: usize },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl From<serde_json::Error> for MdpError {
    fn from(e: serde_json::Error) -> Self {
        MdpError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// On-disk form of a model: the structured text document read by the CLI.
///
/// `reward` holds `[state, action, value]` triples and `transition` holds
/// `[state, action, next_state, probability]` quadruples; omitted
/// transition entries are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    pub n_states: usize,
    pub n_actions: usize,
    pub beta: f64,
    pub feasible: Vec<Vec<usize>>,
    pub reward: Vec<(usize, usize, f64)>,
    pub transition: Vec<(usize, usize, usize, f64)>,
}

impl MdpDocument {
    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serialization is infallible")
    }
}

/// One violated model invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStates,
    NoActions,
    DimensionTooLarge {
        field: &'static str,
        value: usize,
    },
    DiscountOutOfRange {
        beta: f64,
    },
    FeasibleLength {
        expected: usize,
        got: usize,
    },
    EmptyFeasibleSet {
        state: usize,
    },
    ActionOutOfRange {
        state: usize,
        action: usize,
    },
    DuplicateFeasibleAction {
        state: usize,
        action: usize,
    },
    StateOutOfRange {
        entry: &'static str,
        state: usize,
    },
    RewardForInfeasiblePair {
        state: usize,
        action: usize,
    },
    DuplicateReward {
        state: usize,
        action: usize,
    },
    MissingReward {
        state: usize,
        action: usize,
    },
    NonFiniteReward {
        state: usize,
        action: usize,
        value: f64,
    },
    TransitionForInfeasiblePair {
        state: usize,
        action: usize,
    },
    DuplicateTransition {
        state: usize,
        action: usize,
        next: usize,
    },
    InvalidProbability {
        state: usize,
        action: usize,
        next: usize,
        probability: f64,
    },
    NotStochastic {
        state: usize,
        action: usize,
        sum: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoStates => write!(f, "n_states must be at least 1"),
            NoActions => write!(f, "n_actions must be at least 1"),
            DimensionTooLarge { field, value } => {
                write!(f, "{field} = {value} exceeds the limit {MAX_DIMENSION}")
            }
            DiscountOutOfRange { beta } => {
                write!(f, "discount factor beta = {beta} must satisfy 0 < beta < 1")
            }
            FeasibleLength { expected, got } => {
                write!(
                    f,
                    "feasible has {got} entries, expected one per state ({expected})"
                )
            }
            EmptyFeasibleSet { state } => {
                write!(f, "state {state} has an empty feasible action set")
            }
            ActionOutOfRange { state, action } => {
                write!(f, "state {state}: action {action} out of range")
            }
            DuplicateFeasibleAction { state, action } => {
                write!(f, "state {state}: action {action} listed twice in feasible")
            }
            StateOutOfRange { entry, state } => {
                write!(f, "{entry} entry refers to unknown state {state}")
            }
            RewardForInfeasiblePair { state, action } => {
                write!(f, "reward given for infeasible pair ({state}, {action})")
            }
            DuplicateReward { state, action } => {
                write!(f, "reward for ({state}, {action}) given more than once")
            }
            MissingReward { state, action } => {
                write!(f, "feasible pair ({state}, {action}) has no reward")
            }
            NonFiniteReward {
                state,
                action,
                value,
            } => {
                write!(f, "reward for ({state}, {action}) is not finite: {value}")
            }
            TransitionForInfeasiblePair { state, action } => {
                write!(
                    f,
                    "transition given for infeasible pair ({state}, {action})"
                )
            }
            DuplicateTransition {
                state,
                action,
                next,
            } => {
                write!(
                    f,
                    "transition ({state}, {action}) -> {next} given more than once"
                )
            }
            InvalidProbability {
                state,
                action,
                next,
                probability,
            } => write!(
                f,
                "transition ({state}, {action}) -> {next} has invalid probability {probability}"
            ),
            NotStochastic { state, action, sum } => write!(
                f,
                "transition row ({state}, {action}) sums to {sum}, not 1 (stochasticity violated)"
            ),
        }
    }
}

/// Every invariant a document violates. Empty iff the document is a valid model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Lists every violated invariant of `doc`.
pub fn validate(doc: &MdpDocument) -> ValidationReport {
    validate_and_collect(doc).0
}

type Rows = BTreeMap<(usize, usize), BTreeMap<usize, f64>>;

struct Collected {
    feasible: Vec<Vec<usize>>,
    rewards: BTreeMap<(usize, usize), f64>,
    rows: Rows,
}

fn validate_and_collect(doc: &MdpDocument) -> (ValidationReport, Collected) {
    use Violation::*;
    let mut out = Vec::new();
    let n = doc.n_states;
    let m = doc.n_actions;
    if n == 0 {
        out.push(NoStates);
    }
    if m == 0 {
        out.push(NoActions);
    }
    if n > MAX_DIMENSION {
        out.push(DimensionTooLarge {
            field: "n_states",
            value: n,
        });
    }
    if m > MAX_DIMENSION {
        out.push(DimensionTooLarge {
            field: "n_actions",
            value: m,
        });
    }
    if !(doc.beta > 0.0 && doc.beta < 1.0) {
        out.push(DiscountOutOfRange { beta: doc.beta });
    }
    if doc.feasible.len() != n {
        out.push(FeasibleLength {
            expected: n,
            got: doc.feasible.len(),
        });
    }

    let mut feasible = Vec::with_capacity(doc.feasible.len());
    let mut feasible_pairs = BTreeSet::new();
    for (s, actions) in doc.feasible.iter().enumerate() {
        if actions.is_empty() {
            out.push(EmptyFeasibleSet { state: s });
        }
        let mut seen = BTreeSet::new();
        for &a in actions {
            if a >= m {
                out.push(ActionOutOfRange {
                    state: s,
                    action: a,
                });
            } else if !seen.insert(a) {
                out.push(DuplicateFeasibleAction {
                    state: s,
                    action: a,
                });
            }
        }
        for &a in &seen {
            feasible_pairs.insert((s, a));
        }
        feasible.push(seen.into_iter().collect::<Vec<_>>());
    }

    let mut rewards = BTreeMap::new();
    for &(s, a, r) in &doc.reward {
        if s >= n {
            out.push(StateOutOfRange {
                entry: "reward",
                state: s,
            });
            continue;
        }
        if !feasible_pairs.contains(&(s, a)) {
            out.push(RewardForInfeasiblePair {
                state: s,
                action: a,
            });
            continue;
        }
        if !r.is_finite() {
            out.push(NonFiniteReward {
                state: s,
                action: a,
                value: r,
            });
        }
        if rewards.insert((s, a), r).is_some() {
            out.push(DuplicateReward {
                state: s,
                action: a,
            });
        }
    }

    let mut rows: Rows = BTreeMap::new();
    for &(s, a, next, p) in &doc.transition {
        if s >= n {
            out.push(StateOutOfRange {
                entry: "transition",
                state: s,
            });
            continue;
        }
        if next >= n {
            out.push(StateOutOfRange {
                entry: "transition",
                state: next,
            });
            continue;
        }
        if !feasible_pairs.contains(&(s, a)) {
            out.push(TransitionForInfeasiblePair {
                state: s,
                action: a,
            });
            continue;
        }
        if !(p.is_finite() && (0.0..=1.0 + ROW_SUM_TOLERANCE).contains(&p)) {
            out.push(InvalidProbability {
                state: s,
                action: a,
                next,
                probability: p,
            });
        }
        if rows.entry((s, a)).or_default().insert(next, p).is_some() {
            out.push(DuplicateTransition {
                state: s,
                action: a,
                next,
            });
        }
    }

    for &(s, a) in &feasible_pairs {
        if !rewards.contains_key(&(s, a)) {
            out.push(MissingReward {
                state: s,
                action: a,
            });
        }
        let sum: f64 = rows.get(&(s, a)).map(|r| r.values().sum()).unwrap_or(0.0);
        let deviation = (sum - 1.0).abs();
        if deviation.is_nan() || deviation > ROW_SUM_TOLERANCE {
            out.push(NotStochastic {
                state: s,
                action: a,
                sum,
            });
        }
    }

    (
        ValidationReport { violations: out },
        Collected {
            feasible,
            rewards,
            rows,
        },
    )
}

/// Moves the rounding residue of a row onto its largest entry so the row sums
/// to one as computed left to right. Applying it twice changes nothing.
fn renormalize(row: &mut [(usize, f64)]) {
    let Some(pivot) = row
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, &(_, p))| match best {
            Some((_, bp)) if bp >= p => best,
            _ => Some((i, p)),
        })
        .map(|(i, _)| i)
    else {
        return;
    };
    let others: f64 = row
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != pivot)
        .map(|(_, &(_, p))| p)
        .sum();
    row[pivot].1 = 1.0 - others;
}

/// A feasible action in one state with its reward and sparse next-state law.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub action: usize,
    pub reward: f64,
    /// `(next_state, probability)` sorted by state, zero entries removed.
    pub next: Vec<(usize, f64)>,
}

impl Choice {
    /// `sum_{s'} f(s') p(s' | s, a)`.
    pub fn expectation(&self, f: &[f64]) -> f64 {
        self.next.iter().map(|&(s, p)| f[s] * p).sum()
    }
}

/// A validated finite discounted model.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    beta: f64,
    choices: Vec<Vec<Choice>>,
    reward_max: f64,
    reward_abs_max: f64,
}

impl FiniteMdp {
    pub fn from_document(doc: &MdpDocument) -> Result<Self, MdpError> {
        let (report, collected) = validate_and_collect(doc);
        if !report.is_valid() {
            return Err(MdpError::Invalid(report));
        }
        let Collected {
            feasible,
            rewards,
            mut rows,
        } = collected;
        let mut reward_max = f64::NEG_INFINITY;
        let mut reward_abs_max: f64 = 0.0;
        let choices = feasible
            .iter()
            .enumerate()
            .map(|(s, actions)| {
                actions
                    .iter()
                    .map(|&a| {
                        let reward = rewards[&(s, a)];
                        reward_max = reward_max.max(reward);
                        reward_abs_max = reward_abs_max.max(reward.abs());
                        let mut next: Vec<(usize, f64)> = rows
                            .remove(&(s, a))
                            .unwrap_or_default()
                            .into_iter()
                            .filter(|&(_, p)| p != 0.0)
                            .collect();
                        renormalize(&mut next);
                        Choice {
                            action: a,
                            reward,
                            next,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            n_states: doc.n_states,
            n_actions: doc.n_actions,
            beta: doc.beta,
            choices,
            reward_max,
            reward_abs_max,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        Self::from_document(&MdpDocument::from_json(text)?)
    }

    pub fn to_document(&self) -> MdpDocument {
        let mut reward = Vec::new();
        let mut transition = Vec::new();
        for (s, choices) in self.choices.iter().enumerate() {
            for c in choices {
                reward.push((s, c.action, c.reward));
                transition.extend(c.next.iter().map(|&(t, p)| (s, c.action, t, p)));
            }
        }
        MdpDocument {
            n_states: self.n_states,
            n_actions: self.n_actions,
            beta: self.beta,
            feasible: self
                .choices
                .iter()
                .map(|cs| cs.iter().map(|c| c.action).collect())
                .collect(),
            reward,
            transition,
        }
    }

    pub fn to_json(&self) -> String {
        self.to_document().to_json()
    }

    pub fn builder(n_states: usize, n_actions: usize, beta: f64) -> MdpBuilder {
        MdpBuilder {
            doc: MdpDocument {
                n_states,
                n_actions,
                beta,
                feasible: vec![Vec::new(); n_states.min(MAX_DIMENSION)],
                reward: Vec::new(),
                transition: Vec::new(),
            },
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Feasible choices at `state`, sorted by action index.
    pub fn choices(&self, state: usize) -> &[Choice] {
        &self.choices[state]
    }

    pub fn feasible_actions(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.choices[state].iter().map(|c| c.action)
    }

    pub fn choice(&self, state: usize, action: usize) -> Option<&Choice> {
        let cs = self.choices.get(state)?;
        cs.binary_search_by_key(&action, |c| c.action)
            .ok()
            .map(|i| &cs[i])
    }

    pub fn is_feasible(&self, state: usize, action: usize) -> bool {
        self.choice(state, action).is_some()
    }

    pub fn reward(&self, state: usize, action: usize) -> Option<f64> {
        self.choice(state, action).map(|c| c.reward)
    }

    /// `p(next | state, action)`, zero for absent entries.
    pub fn probability(&self, state: usize, action: usize, next: usize) -> Option<f64> {
        self.choice(state, action).map(|c| {
            c.next
                .binary_search_by_key(&next, |&(t, _)| t)
                .map(|i| c.next[i].1)
                .unwrap_or(0.0)
        })
    }

    /// Number of feasible state-action pairs.
    pub fn n_pairs(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }

    /// `max r(s, a)` over feasible pairs.
    pub fn reward_max(&self) -> f64 {
        self.reward_max
    }

    /// `M = max |r(s, a)|`, used for truncation bounds.
    pub fn reward_bound(&self) -> f64 {
        self.reward_abs_max
    }

    /// `β^horizon M / (1 - β)`: the tail a horizon-`horizon` truncation can miss.
    pub fn truncation_bound(&self, horizon: usize) -> f64 {
        self.beta.powi(horizon.min(i32::MAX as usize) as i32) * self.reward_abs_max
            / (1.0 - self.beta)
    }

    /// Smallest horizon whose truncation bound is at most `budget`.
    pub fn horizon_for_budget(&self, budget: f64) -> usize {
        let mut h = 0;
        while self.truncation_bound(h) > budget {
            h += 1;
        }
        h
    }
}

/// `max r / (1 - β)`: no strategy earns more from any state.
pub fn value_upper_bound(model: &FiniteMdp) -> f64 {
    model.reward_max() / (1.0 - model.beta())
}

/// Programmatic construction; goes through the same validation as documents.
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    doc: MdpDocument,
}

impl MdpBuilder {
    /// Declares `action` feasible at `state` with its reward and next-state law.
    pub fn choice(
        mut self,
        state: usize,
        action: usize,
        reward: f64,
        next: impl IntoIterator<Item = (usize, f64)>,
    ) -> Self {
        if let Some(f) = self.doc.feasible.get_mut(state) {
            f.push(action);
        }
        self.doc.reward.push((state, action, reward));
        self.doc
            .transition
            .extend(next.into_iter().map(|(t, p)| (state, action, t, p)));
        self
    }

    pub fn document(&self) -> &MdpDocument {
        &self.doc
    }

    pub fn build(self) -> Result<FiniteMdp, MdpError> {
        FiniteMdp::from_document(&self.doc)
    }
}

/// A bounded function on the finite state set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueFunction(Vec<f64>);

impl ValueFunction {
    pub fn new(values: Vec<f64>) -> Result<Self, MdpError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(MdpError::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// `f + c` pointwise.
    pub fn shifted(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| v + c).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `self(s) >= other(s) - tol` for every `s`.
    pub fn dominates(&self, other: &Self, tol: f64) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| *a >= b - tol)
    }

    pub fn distance(&self, other: &Self) -> Result<f64, MdpError> {
        sup_norm_distance(self, other)
    }
}

impl std::ops::Index<usize> for ValueFunction {
    type Output = f64;

    fn index(&self, s: usize) -> &f64 {
        &self.0[s]
    }
}

/// `max_s |f(s) - g(s)|`.
pub fn sup_norm_distance(f: &ValueFunction, g: &ValueFunction) -> Result<f64, MdpError> {
    if f.len() != g.len() {
        return Err(MdpError::DimensionMismatch {
            expected: f.len(),
            got: g.len(),
        });
    }
    Ok(sup_norm_unchecked(f.as_slice(), g.as_slice()))
}

pub(crate) fn sup_norm_unchecked(f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// A deterministic state-to-action rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationaryPolicy(Vec<usize>);

impl StationaryPolicy {
    /// Checks `actions[s]` is feasible at every state of `model`.
    pub fn new(model: &FiniteMdp, actions: Vec<usize>) -> Result<Self, MdpError> {
        let policy = Self(actions);
        policy.check_feasible(model)?;
        Ok(policy)
    }

    /// Lowest feasible action at every state.
    pub fn first_feasible(model: &FiniteMdp) -> Self {
        Self(
            (0..model.n_states())
                .map(|s| model.choices(s)[0].action)
                .collect(),
        )
    }

    pub(crate) fn from_vec_unchecked(actions: Vec<usize>) -> Self {
        Self(actions)
    }

    pub fn check_feasible(&self, model: &FiniteMdp) -> Result<(), MdpError> {
        if self.0.len() != model.n_states() {
            return Err(MdpError::DimensionMismatch {
                expected: model.n_states(),
                got: self.0.len(),
            });
        }
        match self
            .0
            .iter()
            .enumerate()
            .find(|&(s, &a)| !model.is_feasible(s, a))
        {
            Some((state, &action)) => Err(MdpError::InfeasibleAction { state, action }),
            None => Ok(()),
        }
    }

    pub fn action(&self, state: usize) -> usize {
        self.0[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `(s(1), a(1), ..., s(t))`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct History {
    states: Vec<usize>,
    actions: Vec<usize>,
}

impl History {
    pub fn start(state: usize) -> Self {
        Self {
            states: vec![state],
            actions: Vec::new(),
        }
    }

    /// Appends `(action, next_state)`.
    pub fn extend(&mut self, action: usize, next_state: usize) {
        self.actions.push(action);
        self.states.push(next_state);
    }

    pub fn extended(&self, action: usize, next_state: usize) -> Self {
        let mut h = self.clone();
        h.extend(action, next_state);
        h
    }

    /// The period `t` this history ends in, starting at 1.
    pub fn period(&self) -> usize {
        self.states.len()
    }

    pub fn current_state(&self) -> usize {
        *self.states.last().expect("history always has a state")
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }
}

type DecisionRule = dyn Fn(&History) -> usize + Send + Sync;

/// A history-dependent strategy `(σ_1, ..., σ_horizon)`.
#[derive(Clone)]
pub struct FiniteHorizonStrategy {
    horizon: usize,
    rule: Arc<DecisionRule>,
}

impl fmt::Debug for FiniteHorizonStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteHorizonStrategy")
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl FiniteHorizonStrategy {
    pub fn from_fn(
        horizon: usize,
        rule: impl Fn(&History) -> usize + Send + Sync + 'static,
    ) -> Self {
        Self {
            horizon,
            rule: Arc::new(rule),
        }
    }

    /// Plays `policy` regardless of the past.
    pub fn stationary(policy: StationaryPolicy, horizon: usize) -> Self {
        Self::from_fn(horizon, move |h| policy.action(h.current_state()))
    }

    /// A pseudo-random history-dependent strategy: the action at each history
    /// is a deterministic hash of `(seed, history)` over the feasible set.
    pub fn random(model: &FiniteMdp, horizon: usize, seed: u64) -> Self {
        let feasible: Vec<Vec<usize>> = (0..model.n_states())
            .map(|s| model.feasible_actions(s).collect())
            .collect();
        Self::from_fn(horizon, move |h| {
            let mut x = splitmix64(seed);
            for (i, &s) in h.states().iter().enumerate() {
                x = splitmix64(x ^ (s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                if let Some(&a) = h.actions().get(i) {
                    x = splitmix64(x ^ (a as u64).rotate_left(32));
                }
            }
            let options = &feasible[h.current_state()];
            options[(x % options.len() as u64) as usize]
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn decide(&self, history: &History) -> usize {
        (self.rule)(history)
    }

    /// Tabulates the decision at every history of length `<= horizon`.
    pub fn materialize(&self, model: &FiniteMdp) -> Result<StrategyTable, MdpError> {
        let pairs = model.n_states() * model.n_actions();
        if self.horizon > MAX_MATERIALIZED_HORIZON || pairs > MAX_MATERIALIZED_PAIRS {
            return Err(MdpError::TooLargeToMaterialize {
                horizon: self.horizon,
                pairs,
            });
        }
        let mut decisions = BTreeMap::new();
        let mut frontier: Vec<History> = (0..model.n_states()).map(History::start).collect();
        for t in 1..=self.horizon {
            let mut next_frontier = Vec::new();
            for h in frontier {
                let a = self.decide(&h);
                let s = h.current_state();
                if !model.is_feasible(s, a) {
                    return Err(MdpError::InfeasibleAction {
                        state: s,
                        action: a,
                    });
                }
                if t < self.horizon {
                    for a2 in model.feasible_actions(s) {
                        next_frontier.extend((0..model.n_states()).map(|s2| h.extended(a2, s2)));
                    }
                }
                decisions.insert(h, a);
            }
            frontier = next_frontier;
        }
        Ok(StrategyTable {
            horizon: self.horizon,
            decisions,
        })
    }
}

/// An explicitly tabulated strategy for tiny models.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTable {
    pub horizon: usize,
    pub decisions: BTreeMap<History, usize>,
}

impl StrategyTable {
    pub fn into_strategy(self) -> FiniteHorizonStrategy {
        let horizon = self.horizon;
        FiniteHorizonStrategy::from_fn(horizon, move |h| self.decisions[h])
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

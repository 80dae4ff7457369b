//! Grid discretization of one-dimensional continuous models and sampled
//! verifiers for the invariant classes a model claims `T` preserves.
//!
//! Next-state laws are projected onto the state grid by splitting each point
//! mass between its two bracketing grid points in proportion to distance.
//! That keeps the conditional mean of every row and maps stochastically
//! increasing kernels to stochastically increasing rows. Reading a grid
//! function at the projected law is the same as evaluating its piecewise
//! linear interpolant, so monotone and concave grid data stay monotone and
//! concave.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bellman::{apply_t_unchecked, q_value};
use crate::mdp::{FiniteMdp, MdpError, ValueFunction};
use crate::solver::{solve, SolverError};

/// Rewards beyond this magnitude count as unbounded.
pub const REWARD_LIMIT: f64 = 1e12;

/// Tolerance on monotonicity of `Tf`.
pub const MONOTONE_TOLERANCE: f64 = 1e-10;

/// Fixed part of the tolerance on midpoint concavity of `Tf`.
pub const CONCAVE_TOLERANCE: f64 = 1e-8;

/// Interpolation allowance on midpoint concavity, per squared grid spacing.
pub const CONCAVE_ALLOWANCE_PER_H2: f64 = 1.0;

/// Relative tolerance when collecting argmax sets.
pub const ARGMAX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("reward at (s = {state}, a = {action}) is unbounded or not finite: {value}")]
    UnboundedReward { state: f64, action: f64, value: f64 },
    #[error("no admissible action at grid state {state}")]
    NoAdmissibleAction { state: f64 },
    #[error("next-state law at (s = {state}, a = {action}) is not a probability law: {reason}")]
    InvalidLaw {
        state: f64,
        action: f64,
        reason: String,
    },
    #[error(transparent)]
    Model(#[from] MdpError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Invariant classes a model can claim for its value functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralClass {
    Finite,
    CountableCompact,
    Continuous,
    ContinuousConcave,
    Monotone,
    /// Upper semicontinuous rewards; not finitely checkable.
    UscUnverifiable,
    /// Universally measurable / upper semianalytic setting; not finitely checkable.
    SemianalyticUnverifiable,
}

/// A numeric check of `T(D) ⊆ D` or of the selection property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verifier {
    /// `Tf` is finite with `‖Tf‖ <= M + β‖f‖`.
    Bounded,
    /// Increasing `f` gives increasing `Tf`.
    Monotone,
    /// Concave `f` gives concave `Tf`.
    Concave,
    /// Some maximizing selection is nondecreasing in the state.
    MonotoneSelection,
}

impl StructuralClass {
    pub const ALL: [StructuralClass; 7] = [
        StructuralClass::Finite,
        StructuralClass::CountableCompact,
        StructuralClass::Continuous,
        StructuralClass::ContinuousConcave,
        StructuralClass::Monotone,
        StructuralClass::UscUnverifiable,
        StructuralClass::SemianalyticUnverifiable,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            StructuralClass::Finite => "finite",
            StructuralClass::CountableCompact => "countable_compact",
            StructuralClass::Continuous => "continuous",
            StructuralClass::ContinuousConcave => "continuous_concave",
            StructuralClass::Monotone => "monotone",
            StructuralClass::UscUnverifiable => "usc_unverifiable",
            StructuralClass::SemianalyticUnverifiable => "semianalytic_unverifiable",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.tag() == tag)
    }

    /// Checks run for this class. Each class includes the checks of the
    /// classes it refines.
    pub fn verifiers(self) -> &'static [Verifier] {
        match self {
            StructuralClass::Finite
            | StructuralClass::CountableCompact
            | StructuralClass::Continuous => &[Verifier::Bounded],
            StructuralClass::ContinuousConcave => &[Verifier::Bounded, Verifier::Concave],
            StructuralClass::Monotone => &[
                Verifier::Bounded,
                Verifier::Monotone,
                Verifier::MonotoneSelection,
            ],
            StructuralClass::UscUnverifiable | StructuralClass::SemianalyticUnverifiable => &[],
        }
    }

    pub fn is_verifiable(self) -> bool {
        !self.verifiers().is_empty()
    }
}

impl fmt::Display for StructuralClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

pub type RewardFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type AdmissibleFn = Arc<dyn Fn(f64, f64) -> bool + Send + Sync>;
pub type PointMassFn = Arc<dyn Fn(f64, f64) -> Vec<(f64, f64)> + Send + Sync>;
pub type DensityFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Law of the next state given `(s, a)`.
#[derive(Clone)]
pub enum NextStateLaw {
    /// Finitely many `(next_state, probability)` point masses.
    PointMasses(PointMassFn),
    /// A density `pdf(s, a, x)` on the state interval.
    Density(DensityFn),
}

/// A model with interval state and action spaces.
#[derive(Clone)]
pub struct ContinuousModelSpec {
    pub state_interval: (f64, f64),
    pub action_interval: (f64, f64),
    pub reward: RewardFn,
    pub law: NextStateLaw,
    /// Restricts the feasible actions; `None` means every action is feasible.
    pub admissible: Option<AdmissibleFn>,
    pub beta: f64,
    pub claimed_class: StructuralClass,
}

impl fmt::Debug for ContinuousModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousModelSpec")
            .field("state_interval", &self.state_interval)
            .field("action_interval", &self.action_interval)
            .field("beta", &self.beta)
            .field("claimed_class", &self.claimed_class)
            .finish_non_exhaustive()
    }
}

impl ContinuousModelSpec {
    pub fn check(&self) -> Result<(), StructureError> {
        for (name, (lo, hi)) in [
            ("state", self.state_interval),
            ("action", self.action_interval),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(StructureError::InvalidSpec(format!(
                    "{name} interval [{lo}, {hi}] is degenerate"
                )));
            }
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(StructureError::InvalidSpec(format!(
                "beta = {} must satisfy 0 < beta < 1",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Uniform grid of `n >= 2` points with exact endpoints.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + i as f64 * h })
        .collect()
}

/// A discretized model together with the grids it lives on.
#[derive(Debug, Clone)]
pub struct GridModel {
    pub state_grid: Vec<f64>,
    pub action_grid: Vec<f64>,
    pub mdp: FiniteMdp,
    pub claimed_class: StructuralClass,
}

impl GridModel {
    /// Wraps a finite model on index grids `0, 1, ..., n - 1`.
    pub fn from_finite(mdp: FiniteMdp, claimed_class: StructuralClass) -> Self {
        Self {
            state_grid: (0..mdp.n_states()).map(|i| i as f64).collect(),
            action_grid: (0..mdp.n_actions()).map(|i| i as f64).collect(),
            mdp,
            claimed_class,
        }
    }

    /// Piecewise-linear interpolation of grid values, constant beyond the ends.
    pub fn interpolate(&self, v: &ValueFunction, x: f64) -> f64 {
        interpolate(&self.state_grid, v.as_slice(), x)
    }
}

pub fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let n = grid.len();
    if n == 1 || x <= grid[0] {
        return values[0];
    }
    if x >= grid[n - 1] {
        return values[n - 1];
    }
    let (k, w) = bracket(grid, x);
    values[k] * (1.0 - w) + values[k + 1] * w
}

/// Index `k` and weight `w` with `x = (1 - w) grid[k] + w grid[k + 1]`.
fn bracket(grid: &[f64], x: f64) -> (usize, f64) {
    let n = grid.len();
    let k = match grid.binary_search_by(|g| g.total_cmp(&x)) {
        Ok(i) => return (i.min(n - 2), if i == n - 1 { 1.0 } else { 0.0 }),
        Err(i) => i.saturating_sub(1).min(n - 2),
    };
    let w = (x - grid[k]) / (grid[k + 1] - grid[k]);
    (k, w.clamp(0.0, 1.0))
}

/// Splits point masses between bracketing grid points; returns a sparse row.
pub fn project_onto_grid(grid: &[f64], masses: &[(f64, f64)]) -> Vec<(usize, f64)> {
    let lo = grid[0];
    let hi = grid[grid.len() - 1];
    let mut row = vec![0.0; grid.len()];
    for &(x, p) in masses {
        let (k, w) = bracket(grid, x.clamp(lo, hi));
        row[k] += p * (1.0 - w);
        row[k + 1] += p * w;
    }
    row.into_iter()
        .enumerate()
        .filter(|&(_, p)| p > 0.0)
        .collect()
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

fn density_masses(grid: &[f64], pdf: &DensityFn, s: f64, a: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(3 * grid.len());
    for cell in grid.windows(2) {
        let (l, r) = (cell[0], cell[1]);
        let half = 0.5 * (r - l);
        let mid = 0.5 * (l + r);
        for &(node, weight) in &GAUSS3 {
            let x = mid + half * node;
            out.push((x, half * weight * pdf(s, a, x)));
        }
    }
    out
}

/// Builds the finite model on uniform `n_state x n_action` grids.
pub fn discretize(
    spec: &ContinuousModelSpec,
    n_state: usize,
    n_action: usize,
) -> Result<GridModel, StructureError> {
    spec.check()?;
    if n_state < 2 || n_action < 2 {
        return Err(StructureError::InvalidSpec(format!(
            "grids need at least 2 points, got {n_state} x {n_action}"
        )));
    }
    let (slo, shi) = spec.state_interval;
    let (alo, ahi) = spec.action_interval;
    let states = uniform_grid(slo, shi, n_state);
    let actions = uniform_grid(alo, ahi, n_action);

    // Probe midpoints as well as grid pairs for unbounded rewards.
    let probe = |xs: &[f64]| -> Vec<f64> {
        let mut out = xs.to_vec();
        out.extend(xs.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        out
    };
    let (ps, pa) = (probe(&states), probe(&actions));
    for &s in &ps {
        for &a in &pa {
            if spec.admissible.as_ref().is_some_and(|f| !f(s, a)) {
                continue;
            }
            let value = (spec.reward)(s, a);
            if !(value.is_finite() && value.abs() <= REWARD_LIMIT) {
                return Err(StructureError::UnboundedReward {
                    state: s,
                    action: a,
                    value,
                });
            }
        }
    }

    let mut builder = FiniteMdp::builder(n_state, n_action, spec.beta);
    for (i, &s) in states.iter().enumerate() {
        let mut any = false;
        for (j, &a) in actions.iter().enumerate() {
            if spec.admissible.as_ref().is_some_and(|f| !f(s, a)) {
                continue;
            }
            any = true;
            let masses = match &spec.law {
                NextStateLaw::PointMasses(f) => f(s, a),
                NextStateLaw::Density(pdf) => density_masses(&states, pdf, s, a),
            };
            let invalid = |reason: String| StructureError::InvalidLaw {
                state: s,
                action: a,
                reason,
            };
            if let Some(&(x, p)) = masses
                .iter()
                .find(|(x, p)| !x.is_finite() || !(p.is_finite() && *p >= 0.0))
            {
                return Err(invalid(format!("bad mass {p} at {x}")));
            }
            let total: f64 = masses.iter().map(|m| m.1).sum();
            if total.is_nan() || total <= 0.0 {
                return Err(invalid("total mass is zero".into()));
            }
            if matches!(spec.law, NextStateLaw::PointMasses(_)) && (total - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("masses sum to {total}")));
            }
            let normalized: Vec<(f64, f64)> = masses.iter().map(|&(x, p)| (x, p / total)).collect();
            builder = builder.choice(
                i,
                j,
                (spec.reward)(s, a),
                project_onto_grid(&states, &normalized),
            );
        }
        if !any {
            return Err(StructureError::NoAdmissibleAction { state: s });
        }
    }
    Ok(GridModel {
        state_grid: states,
        action_grid: actions,
        mdp: builder.build()?,
        claimed_class: spec.claimed_class,
    })
}

/// A function on which a verifier failed, with where and by how much.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub f: ValueFunction,
    /// Grid index where the violation was measured.
    pub location: usize,
    pub violation: f64,
}

impl Witness {
    /// Recomputes the violation by applying `T` to the witness once.
    pub fn recheck(&self, grid: &GridModel, verifier: Verifier) -> f64 {
        let tf = apply_t_unchecked(&grid.mdp, self.f.as_slice());
        match verifier {
            Verifier::Monotone => monotone_violation(tf.as_slice()).0,
            Verifier::Concave => concave_violation(tf.as_slice()).0,
            Verifier::Bounded => bounded_violation(&grid.mdp, &self.f, &tf).0,
            Verifier::MonotoneSelection => f64::NAN,
        }
    }
}

/// Outcome of a sampled verifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub verifier: Verifier,
    pub trials: usize,
    pub passed_trials: usize,
    pub tolerance: f64,
    /// Largest violation seen (negative when every trial passed with room).
    pub worst_violation: f64,
    /// Present iff some trial failed.
    pub witness: Option<Witness>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.passed_trials == self.trials
    }
}

fn monotone_violation(tf: &[f64]) -> (f64, usize) {
    tf.windows(2)
        .enumerate()
        .map(|(i, w)| (w[0] - w[1], i))
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a })
}

/// Largest `Tf[i-1] - 2 Tf[i] + Tf[i+1]` on the (uniform) grid.
fn concave_violation(tf: &[f64]) -> (f64, usize) {
    tf.windows(3)
        .enumerate()
        .map(|(i, w)| ((w[2] - w[1]) - (w[1] - w[0]), i + 1))
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a })
}

fn bounded_violation(mdp: &FiniteMdp, f: &ValueFunction, tf: &ValueFunction) -> (f64, usize) {
    let bound = mdp.reward_bound() + mdp.beta() * f.sup_norm();
    tf.iter()
        .enumerate()
        .map(|(i, &v)| {
            (
                if v.is_finite() {
                    v.abs() - bound
                } else {
                    f64::INFINITY
                },
                i,
            )
        })
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a })
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_trials(
    grid: &GridModel,
    verifier: Verifier,
    trials: usize,
    seed: u64,
    tolerance: f64,
    sample: impl Fn(usize, &mut ChaCha8Rng) -> Vec<f64> + Sync,
    measure: impl Fn(&ValueFunction, &ValueFunction) -> (f64, usize) + Sync,
) -> CheckReport {
    let outcomes: Vec<(f64, usize, ValueFunction)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let f = ValueFunction::from_vec_unchecked(sample(t, &mut rng));
            let tf = apply_t_unchecked(&grid.mdp, f.as_slice());
            let (v, at) = measure(&f, &tf);
            (v, at, f)
        })
        .collect();
    let passed_trials = outcomes.iter().filter(|o| o.0 <= tolerance).count();
    let worst = outcomes
        .iter()
        .enumerate()
        .fold(None::<usize>, |best, (i, o)| match best {
            Some(b) if outcomes[b].0 >= o.0 => Some(b),
            _ => Some(i),
        });
    let worst_violation = worst.map_or(f64::NEG_INFINITY, |i| outcomes[i].0);
    let witness = worst
        .filter(|&i| outcomes[i].0 > tolerance)
        .map(|i| Witness {
            f: outcomes[i].2.clone(),
            location: outcomes[i].1,
            violation: outcomes[i].0,
        });
    CheckReport {
        verifier,
        trials,
        passed_trials,
        tolerance,
        worst_violation,
        witness,
    }
}

fn value_scale(grid: &GridModel) -> f64 {
    (grid.mdp.reward_bound() / (1.0 - grid.mdp.beta())).max(1.0)
}

/// Samples increasing `f` and checks `Tf` is increasing within [`MONOTONE_TOLERANCE`].
///
/// Trial 0 is a constant function.
pub fn check_preserves_monotone(grid: &GridModel, trials: usize, seed: u64) -> CheckReport {
    let n = grid.state_grid.len();
    let scale = value_scale(grid);
    run_trials(
        grid,
        Verifier::Monotone,
        trials,
        seed,
        MONOTONE_TOLERANCE,
        |t, rng| {
            let start = rng.gen_range(-scale..scale);
            if t == 0 {
                return vec![start; n];
            }
            let step = rng.gen_range(0.0..2.0 * scale / n as f64);
            let mut acc = start;
            (0..n)
                .map(|i| {
                    if i > 0 && rng.gen_bool(0.8) {
                        acc += rng.gen_range(0.0..step);
                    }
                    acc
                })
                .collect()
        },
        |_, tf| monotone_violation(tf.as_slice()),
    )
}

/// Samples concave piecewise-linear `f` and checks midpoint concavity of `Tf`
/// within `CONCAVE_TOLERANCE + CONCAVE_ALLOWANCE_PER_H2 * h^2`.
///
/// Trial 0 is an affine function.
pub fn check_preserves_concave(grid: &GridModel, trials: usize, seed: u64) -> CheckReport {
    let xs = &grid.state_grid;
    let n = xs.len();
    let h = (xs[n - 1] - xs[0]) / (n - 1).max(1) as f64;
    let tolerance = CONCAVE_TOLERANCE + CONCAVE_ALLOWANCE_PER_H2 * h * h;
    let scale = value_scale(grid);
    let width = (xs[n - 1] - xs[0]).max(f64::MIN_POSITIVE);
    run_trials(
        grid,
        Verifier::Concave,
        trials,
        seed,
        tolerance,
        |t, rng| {
            let max_slope = scale / width;
            let mut slopes: Vec<f64> = if t == 0 {
                vec![rng.gen_range(-max_slope..max_slope); n.saturating_sub(1)]
            } else {
                (1..n)
                    .map(|_| rng.gen_range(-max_slope..max_slope))
                    .collect()
            };
            slopes.sort_by(|a, b| b.total_cmp(a));
            let mut acc = rng.gen_range(-scale..scale);
            let mut out = Vec::with_capacity(n);
            out.push(acc);
            for (i, slope) in slopes.into_iter().enumerate() {
                acc += slope * (xs[i + 1] - xs[i]);
                out.push(acc);
            }
            out
        },
        |_, tf| concave_violation(tf.as_slice()),
    )
}

/// Samples bounded `f` and checks `‖Tf‖ <= M + β‖f‖`.
pub fn check_preserves_bounded(grid: &GridModel, trials: usize, seed: u64) -> CheckReport {
    let n = grid.state_grid.len();
    let scale = value_scale(grid);
    let mdp = &grid.mdp;
    run_trials(
        grid,
        Verifier::Bounded,
        trials,
        seed,
        1e-9 * scale,
        |_, rng| (0..n).map(|_| rng.gen_range(-scale..scale)).collect(),
        |f, tf| bounded_violation(mdp, f, tf),
    )
}

/// Whether some maximizing selection for `v` is nondecreasing in the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SelectionReport {
    /// The lowest-index greedy policy is itself nondecreasing.
    Monotone { policy: Vec<usize> },
    /// The lowest-index policy is not, but another maximizing selection is.
    MonotoneSelectionExists {
        selection: Vec<usize>,
        first_drop: usize,
    },
    /// No maximizing selection is nondecreasing; fails at `state`.
    NoMonotoneSelection { state: usize },
}

impl SelectionReport {
    pub fn passed(&self) -> bool {
        !matches!(self, SelectionReport::NoMonotoneSelection { .. })
    }
}

/// Per-state argmax sets of `Q(s, ·, v)` (within [`ARGMAX_TOLERANCE`]), in action order.
pub fn argmax_sets(mdp: &FiniteMdp, v: &ValueFunction) -> Result<Vec<Vec<usize>>, MdpError> {
    (0..mdp.n_states())
        .map(|s| {
            let qs: Vec<(usize, f64)> = mdp
                .feasible_actions(s)
                .map(|a| q_value(mdp, s, a, v).map(|q| (a, q)))
                .collect::<Result<_, _>>()?;
            let best = qs.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
            let tol = ARGMAX_TOLERANCE * best.abs().max(1.0);
            Ok(qs
                .into_iter()
                .filter(|&(_, q)| q >= best - tol)
                .map(|(a, _)| a)
                .collect())
        })
        .collect()
}

pub fn check_greedy_monotone(
    grid: &GridModel,
    v: &ValueFunction,
) -> Result<SelectionReport, MdpError> {
    let sets = argmax_sets(&grid.mdp, v)?;
    let lowest: Vec<usize> = sets.iter().map(|s| s[0]).collect();
    let Some(first_drop) = lowest.windows(2).position(|w| w[1] < w[0]) else {
        return Ok(SelectionReport::Monotone { policy: lowest });
    };
    let mut selection = Vec::with_capacity(sets.len());
    let mut floor = 0;
    for (state, set) in sets.iter().enumerate() {
        match set.iter().find(|&&a| a >= floor) {
            Some(&a) => {
                selection.push(a);
                floor = a;
            }
            None => return Ok(SelectionReport::NoMonotoneSelection { state }),
        }
    }
    Ok(SelectionReport::MonotoneSelectionExists {
        selection,
        first_drop: first_drop + 1,
    })
}

/// One verifier's result within a class report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckOutcome {
    Sampled(CheckReport),
    Selection(SelectionReport),
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        match self {
            CheckOutcome::Sampled(r) => r.passed(),
            CheckOutcome::Selection(r) => r.passed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: StructuralClass,
    pub checks: Vec<CheckOutcome>,
    pub notes: Vec<String>,
}

impl ClassReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }
}

/// Runs every verifier of `class` on `grid`.
pub fn verify_class(
    grid: &GridModel,
    class: StructuralClass,
    trials: usize,
    seed: u64,
) -> Result<ClassReport, StructureError> {
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    if !class.is_verifiable() {
        notes.push(format!(
            "class {class} has no finite numeric verifier; nothing was checked"
        ));
    }
    for &verifier in class.verifiers() {
        let outcome = match verifier {
            Verifier::Bounded => CheckOutcome::Sampled(check_preserves_bounded(grid, trials, seed)),
            Verifier::Monotone => {
                notes.push(
                    "supermodularity of the grid-projected kernel is checked only empirically"
                        .into(),
                );
                CheckOutcome::Sampled(check_preserves_monotone(grid, trials, seed))
            }
            Verifier::Concave => CheckOutcome::Sampled(check_preserves_concave(grid, trials, seed)),
            Verifier::MonotoneSelection => {
                let solved = solve(&grid.mdp, 1e-9)?;
                CheckOutcome::Selection(check_greedy_monotone(grid, &solved.value)?)
            }
        };
        checks.push(outcome);
    }
    Ok(ClassReport {
        class,
        checks,
        notes,
    })
}

/// Models built to break one class each, for checker soundness tests.
pub mod counterexamples {
    use super::*;

    fn settle_at(x: f64) -> NextStateLaw {
        NextStateLaw::PointMasses(Arc::new(move |_, _| vec![(x, 1.0)]))
    }

    /// Reward decreasing in the state: `T` maps increasing functions to decreasing ones.
    pub fn decreasing_reward() -> ContinuousModelSpec {
        ContinuousModelSpec {
            state_interval: (0.0, 1.0),
            action_interval: (0.0, 1.0),
            reward: Arc::new(|s, a| -s - 0.1 * a),
            law: settle_at(0.5),
            admissible: None,
            beta: 0.9,
            claimed_class: StructuralClass::Monotone,
        }
    }

    /// Reward `|s - 1/2|` has a convex kink; `Tf` inherits it.
    pub fn convex_kink() -> ContinuousModelSpec {
        ContinuousModelSpec {
            state_interval: (0.0, 1.0),
            action_interval: (0.0, 1.0),
            reward: Arc::new(|s, a| (s - 0.5).abs() - 0.1 * a * a),
            law: settle_at(0.5),
            admissible: None,
            beta: 0.9,
            claimed_class: StructuralClass::ContinuousConcave,
        }
    }

    /// Reward `-(a - (1 - s))^2` is submodular: the unique maximizer falls with `s`.
    pub fn anti_supermodular() -> ContinuousModelSpec {
        ContinuousModelSpec {
            state_interval: (0.0, 1.0),
            action_interval: (0.0, 1.0),
            reward: Arc::new(|s, a| -(a - (1.0 - s)).powi(2)),
            law: settle_at(0.5),
            admissible: None,
            beta: 0.9,
            claimed_class: StructuralClass::Monotone,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_spec() -> ContinuousModelSpec {
        ContinuousModelSpec {
            state_interval: (0.0, 2.0),
            action_interval: (0.0, 1.0),
            reward: Arc::new(|s, a| s - a),
            law: NextStateLaw::PointMasses(Arc::new(|s, _| vec![(s, 1.0)])),
            admissible: None,
            beta: 0.9,
            claimed_class: StructuralClass::Continuous,
        }
    }

    #[test]
    fn identity_transition_projects_to_identity() {
        let g = discretize(&identity_spec(), 9, 3).unwrap();
        for i in 0..9 {
            for a in 0..3 {
                assert_eq!(g.mdp.choice(i, a).unwrap().next, vec![(i, 1.0)]);
            }
        }
    }

    #[test]
    fn uniform_density_projects_to_hat_weights() {
        let mut spec = identity_spec();
        spec.law = NextStateLaw::Density(Arc::new(|_, _, _| 0.5));
        let n = 5;
        let g = discretize(&spec, n, 2).unwrap();
        // Hat-function masses of the uniform law on [0, 2] with h = 0.5.
        let expected = [0.125, 0.25, 0.25, 0.25, 0.125];
        for i in 0..n {
            for a in 0..2 {
                let row = &g.mdp.choice(i, a).unwrap().next;
                assert_eq!(row.len(), n);
                for &(t, p) in row {
                    assert!((p - expected[t]).abs() <= 1e-12, "{t}: {p}");
                }
            }
        }
    }

    #[test]
    fn projection_preserves_mean() {
        let grid = uniform_grid(-1.0, 3.0, 17);
        let masses = [(0.13, 0.2), (2.71, 0.5), (-0.999, 0.3)];
        let row = project_onto_grid(&grid, &masses);
        let mean: f64 = row.iter().map(|&(k, p)| grid[k] * p).sum();
        let target: f64 = masses.iter().map(|&(x, p)| x * p).sum();
        assert!((mean - target).abs() <= 1e-12);
        let total: f64 = row.iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn interpolation_matches_grid_and_is_linear_between() {
        let grid = uniform_grid(0.0, 1.0, 3);
        let v = [0.0, 2.0, 3.0];
        assert_eq!(interpolate(&grid, &v, 0.5), 2.0);
        assert_eq!(interpolate(&grid, &v, 0.25), 1.0);
        assert_eq!(interpolate(&grid, &v, -4.0), 0.0);
        assert_eq!(interpolate(&grid, &v, 7.0), 3.0);
        assert_eq!(interpolate(&grid, &v, 1.0), 3.0);
    }

    #[test]
    fn discretize_rejects_bad_inputs() {
        let mut spec = identity_spec();
        assert!(discretize(&spec, 1, 4).is_err());
        spec.reward = Arc::new(|s, _| 1.0 / (s - 0.25));
        assert!(matches!(
            discretize(&spec, 5, 2),
            Err(StructureError::UnboundedReward { .. })
        ));
        let mut spec = identity_spec();
        spec.state_interval = (1.0, 1.0);
        assert!(discretize(&spec, 5, 2).is_err());
        let mut spec = identity_spec();
        spec.admissible = Some(Arc::new(|s, _| s < 1.0));
        assert!(matches!(
            discretize(&spec, 5, 2),
            Err(StructureError::NoAdmissibleAction { .. })
        ));
        let mut spec = identity_spec();
        spec.law = NextStateLaw::PointMasses(Arc::new(|s, _| vec![(s, 0.7)]));
        assert!(matches!(
            discretize(&spec, 5, 2),
            Err(StructureError::InvalidLaw { .. })
        ));
    }

    #[test]
    fn constant_f_passes_monotone_when_rewards_increase() {
        let g = discretize(&identity_spec(), 11, 3).unwrap();
        let r = check_preserves_monotone(&g, 1, 0);
        assert!(r.passed());
        assert!(r.witness.is_none());
    }

    #[test]
    fn decreasing_reward_is_flagged_with_witness() {
        let g = discretize(&counterexamples::decreasing_reward(), 21, 5).unwrap();
        let r = check_preserves_monotone(&g, 50, 3);
        assert!(!r.passed());
        let w = r.witness.as_ref().unwrap();
        assert!(w.recheck(&g, Verifier::Monotone) > MONOTONE_TOLERANCE);
        assert_eq!(w.recheck(&g, Verifier::Monotone), w.violation);
    }

    #[test]
    fn affine_reward_keeps_affine_f_concave() {
        let spec = ContinuousModelSpec {
            reward: Arc::new(|s, a| 2.0 * s + a),
            law: NextStateLaw::PointMasses(Arc::new(|_, a| vec![(a, 1.0)])),
            claimed_class: StructuralClass::ContinuousConcave,
            ..identity_spec()
        };
        let g = discretize(&spec, 15, 4).unwrap();
        let r = check_preserves_concave(&g, 1, 0);
        assert!(r.passed());
        assert!(r.worst_violation.abs() <= 1e-12);
    }

    #[test]
    fn convex_kink_is_flagged() {
        let g = discretize(&counterexamples::convex_kink(), 41, 5).unwrap();
        let r = check_preserves_concave(&g, 20, 1);
        assert!(!r.passed());
        let w = r.witness.unwrap();
        assert!(w.recheck(&g, Verifier::Concave) > r.tolerance);
        assert_eq!(w.location, 20);
    }

    #[test]
    fn single_action_is_trivially_monotone() {
        let spec = ContinuousModelSpec {
            action_interval: (0.0, 1.0),
            admissible: Some(Arc::new(|_, a| a == 0.0)),
            ..identity_spec()
        };
        let g = discretize(&spec, 7, 2).unwrap();
        let v = solve(&g.mdp, 1e-9).unwrap().value;
        assert_eq!(
            check_greedy_monotone(&g, &v).unwrap(),
            SelectionReport::Monotone { policy: vec![0; 7] }
        );
    }

    #[test]
    fn anti_supermodular_has_no_monotone_selection() {
        let g = discretize(&counterexamples::anti_supermodular(), 11, 11).unwrap();
        let v = solve(&g.mdp, 1e-9).unwrap().value;
        assert!(matches!(
            check_greedy_monotone(&g, &v).unwrap(),
            SelectionReport::NoMonotoneSelection { state: 1 }
        ));
    }

    #[test]
    fn tie_broken_policy_can_be_repaired() {
        // State 0 is indifferent; its lowest-index pick 0 drops below state 1's forced 1.
        let m = FiniteMdp::builder(3, 2, 0.5)
            .choice(0, 0, 0.0, [(0, 1.0)])
            .choice(0, 1, 0.0, [(0, 1.0)])
            .choice(1, 0, -1.0, [(0, 1.0)])
            .choice(1, 1, 0.0, [(0, 1.0)])
            .choice(2, 0, 0.0, [(0, 1.0)])
            .choice(2, 1, 0.0, [(0, 1.0)])
            .build()
            .unwrap();
        let g = GridModel::from_finite(m, StructuralClass::Finite);
        let v = ValueFunction::zeros(3);
        assert_eq!(
            check_greedy_monotone(&g, &v).unwrap(),
            SelectionReport::MonotoneSelectionExists {
                selection: vec![0, 1, 1],
                first_drop: 2
            }
        );
    }

    #[test]
    fn class_tags_round_trip() {
        for c in StructuralClass::ALL {
            assert_eq!(StructuralClass::from_tag(c.tag()), Some(c));
        }
        assert!(!StructuralClass::UscUnverifiable.is_verifiable());
        assert!(StructuralClass::SemianalyticUnverifiable
            .verifiers()
            .is_empty());
    }

    #[test]
    fn unverifiable_class_reports_note() {
        let g = discretize(&identity_spec(), 5, 2).unwrap();
        let r = verify_class(&g, StructuralClass::UscUnverifiable, 10, 0).unwrap();
        assert!(r.checks.is_empty());
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn class_nesting_concave_implies_continuous() {
        for c in StructuralClass::ALL {
            if c.verifiers().contains(&Verifier::Concave)
                || c.verifiers().contains(&Verifier::Monotone)
            {
                assert!(c.verifiers().contains(&Verifier::Bounded));
            }
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let g = discretize(&counterexamples::decreasing_reward(), 15, 4).unwrap();
        assert_eq!(
            check_preserves_monotone(&g, 30, 9),
            check_preserves_monotone(&g, 30, 9)
        );
    }
}

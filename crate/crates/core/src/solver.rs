//! Value iteration to the fixed point of `T`, optimal and ε-optimal policy
//! extraction, exact policy evaluation, and brute-force finite-horizon
//! oracles.

use thiserror::Error;

use crate::bellman::{apply_t_policy_unchecked, apply_t_unchecked, greedy};
use crate::fixed_point::{ContractionMap, FixedPointError, IterationTrace, DEFAULT_MAX_ITERS};
use crate::mdp::{
    sup_norm_unchecked, FiniteHorizonStrategy, FiniteMdp, History, MdpError, StationaryPolicy,
    ValueFunction, MAX_MATERIALIZED_HORIZON, MAX_MATERIALIZED_PAIRS,
};

/// Size guard for [`brute_force_oracle`]: `n_states * n_actions`.
pub const ORACLE_MAX_PAIRS: usize = 64;

/// Node budget for exact evaluation over the history tree.
pub const MAX_TREE_NODES: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] MdpError),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error("policy evaluation system is singular at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("no feasible action meets the slack at state {state} (short by {shortfall:e})")]
    SlackUnmet { state: usize, shortfall: f64 },
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error("model too large for the oracle: {pairs} state-action pairs (limit {limit})")]
    TooLarge { pairs: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Within `tol` of the value function in sup-norm.
    pub value: ValueFunction,
    /// Greedy with respect to `value`.
    pub policy: StationaryPolicy,
    pub trace: IterationTrace,
    /// `‖T value - value‖`.
    pub bellman_residual: f64,
    /// Certified bound on `‖V - V_policy‖`.
    pub epsilon_certificate: f64,
}

/// Value iteration from the zero function with the a posteriori stopping rule.
pub fn solve(model: &FiniteMdp, tol: f64) -> Result<SolveResult, SolverError> {
    solve_with(
        model,
        SolveOptions {
            tol,
            ..SolveOptions::default()
        },
    )
}

pub fn solve_with(model: &FiniteMdp, opts: SolveOptions) -> Result<SolveResult, SolverError> {
    let map = ContractionMap::new(
        |v: &ValueFunction| apply_t_unchecked(model, v.as_slice()),
        model.beta(),
        |a: &ValueFunction, b: &ValueFunction| sup_norm_unchecked(a.as_slice(), b.as_slice()),
    )?;
    let (value, trace) = map.iterate_to_fixed_point(
        ValueFunction::zeros(model.n_states()),
        opts.tol,
        opts.max_iters,
    )?;
    let g = greedy(model, &value)?;
    let bellman_residual = sup_norm_unchecked(g.values.as_slice(), value.as_slice());
    let epsilon_certificate = certify_epsilon_optimal(model, &g.policy, &value)?;
    Ok(SolveResult {
        value,
        policy: g.policy,
        trace,
        bellman_residual,
        epsilon_certificate,
    })
}

/// Solves `(I - β P_λ) W = r_λ` by Gaussian elimination with partial pivoting.
pub fn evaluate_policy_exact(
    model: &FiniteMdp,
    policy: &StationaryPolicy,
) -> Result<ValueFunction, SolverError> {
    policy.check_feasible(model)?;
    let n = model.n_states();
    let beta = model.beta();
    let mut a = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for s in 0..n {
        let c = model.choice(s, policy.action(s)).expect("feasible");
        a[s * n + s] = 1.0;
        for &(t, p) in &c.next {
            a[s * n + t] -= beta * p;
        }
        rhs[s] = c.reward;
    }
    let w = solve_dense(n, &mut a, &mut rhs)?;
    Ok(ValueFunction::new(w)?)
}

fn solve_dense(n: usize, a: &mut [f64], b: &mut [f64]) -> Result<Vec<f64>, SolverError> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .expect("nonempty range");
        if a[pivot * n + col].abs() < 1e-300 {
            return Err(SolverError::Singular { pivot: col });
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row * n + row];
    }
    Ok(x)
}

/// Returns a policy with `T_λ x >= x - ε(1 - β)` pointwise.
///
/// In the finite case the greedy policy attains the supremum, so it is
/// returned whenever the slack can be met at all.
pub fn extract_epsilon_policy(
    model: &FiniteMdp,
    x: &ValueFunction,
    eps: f64,
) -> Result<StationaryPolicy, SolverError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(SolverError::InvalidEpsilon(eps));
    }
    let g = greedy(model, x)?;
    let floor = eps * (1.0 - model.beta());
    for s in 0..model.n_states() {
        let shortfall = (x[s] - floor) - g.values[s];
        if shortfall > 0.0 {
            return Err(SolverError::SlackUnmet {
                state: s,
                shortfall,
            });
        }
    }
    Ok(g.policy)
}

/// Bound on `‖V - V_λ‖` from a candidate `v`:
/// `‖v - V_λ‖ + ‖Tv - v‖ / (1 - β)`.
pub fn certify_epsilon_optimal(
    model: &FiniteMdp,
    policy: &StationaryPolicy,
    v_candidate: &ValueFunction,
) -> Result<f64, SolverError> {
    if v_candidate.len() != model.n_states() {
        return Err(MdpError::DimensionMismatch {
            expected: model.n_states(),
            got: v_candidate.len(),
        }
        .into());
    }
    let w = evaluate_policy_exact(model, policy)?;
    let tv = apply_t_unchecked(model, v_candidate.as_slice());
    let rho = sup_norm_unchecked(tv.as_slice(), v_candidate.as_slice());
    Ok(sup_norm_unchecked(v_candidate.as_slice(), w.as_slice()) + rho / (1.0 - model.beta()))
}

/// Exact `horizon`-period optimum by backward induction.
///
/// Within `β^horizon M / (1 - β)` of the value function.
pub fn brute_force_oracle(model: &FiniteMdp, horizon: usize) -> Result<ValueFunction, SolverError> {
    if horizon == 0 {
        return Err(SolverError::InvalidHorizon);
    }
    let pairs = model.n_states() * model.n_actions();
    if pairs > ORACLE_MAX_PAIRS {
        return Err(SolverError::TooLarge {
            pairs,
            limit: ORACLE_MAX_PAIRS,
        });
    }
    let n = model.n_states();
    // Dense (s, a) tables so this path shares nothing with `bellman`.
    let mut table: Vec<Vec<(f64, Vec<f64>)>> = Vec::with_capacity(n);
    for s in 0..n {
        let rows = model
            .feasible_actions(s)
            .map(|a| {
                let dense = (0..n)
                    .map(|t| model.probability(s, a, t).expect("feasible"))
                    .collect();
                (model.reward(s, a).expect("feasible"), dense)
            })
            .collect();
        table.push(rows);
    }
    let beta = model.beta();
    let mut togo = vec![0.0; n];
    for _ in 0..horizon {
        let next: Vec<f64> = table
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|(r, p)| {
                        let cont: f64 = p.iter().zip(&togo).map(|(pi, vi)| pi * vi).sum();
                        r + beta * cont
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        togo = next;
    }
    Ok(ValueFunction::new(togo)?)
}

fn check_tree_guard(model: &FiniteMdp, horizon: usize) -> Result<(), SolverError> {
    if horizon == 0 {
        return Err(SolverError::InvalidHorizon);
    }
    let pairs = model.n_states() * model.n_actions();
    if horizon > MAX_MATERIALIZED_HORIZON || pairs > MAX_MATERIALIZED_PAIRS {
        return Err(MdpError::TooLargeToMaterialize { horizon, pairs }.into());
    }
    Ok(())
}

/// Supremum over all history-dependent strategies of the `horizon`-period
/// payoff from `initial_state`, by exhaustive search of the history tree.
///
/// Only for tiny models; agrees with [`brute_force_oracle`], which shows that
/// conditioning on the past never helps.
pub fn history_tree_optimum(
    model: &FiniteMdp,
    horizon: usize,
    initial_state: usize,
) -> Result<f64, SolverError> {
    check_tree_guard(model, horizon)?;
    fn go(model: &FiniteMdp, h: &History, remaining: usize) -> f64 {
        let s = h.current_state();
        model
            .choices(s)
            .iter()
            .map(|c| {
                let cont = if remaining > 1 {
                    c.next
                        .iter()
                        .map(|&(t, p)| p * go(model, &h.extended(c.action, t), remaining - 1))
                        .sum()
                } else {
                    0.0
                };
                c.reward + model.beta() * cont
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
    Ok(go(model, &History::start(initial_state), horizon))
}

/// Exact expected discounted payoff of `sigma` over `horizon` periods from
/// `initial_state`, by recursion over the history tree.
pub fn evaluate_strategy_exact(
    model: &FiniteMdp,
    sigma: &FiniteHorizonStrategy,
    horizon: usize,
    initial_state: usize,
) -> Result<f64, SolverError> {
    if horizon == 0 || horizon > sigma.horizon() {
        return Err(SolverError::InvalidHorizon);
    }
    if initial_state >= model.n_states() {
        return Err(MdpError::StateOutOfRange {
            state: initial_state,
            n_states: model.n_states(),
        }
        .into());
    }
    let mut budget = MAX_TREE_NODES;
    fn go(
        model: &FiniteMdp,
        sigma: &FiniteHorizonStrategy,
        h: &History,
        remaining: usize,
        budget: &mut usize,
    ) -> Result<f64, SolverError> {
        if *budget == 0 {
            return Err(SolverError::TooLarge {
                pairs: model.n_pairs(),
                limit: MAX_TREE_NODES,
            });
        }
        *budget -= 1;
        let s = h.current_state();
        let a = sigma.decide(h);
        let c = model.choice(s, a).ok_or(MdpError::InfeasibleAction {
            state: s,
            action: a,
        })?;
        let mut cont = 0.0;
        if remaining > 1 {
            for &(t, p) in &c.next {
                cont += p * go(model, sigma, &h.extended(a, t), remaining - 1, budget)?;
            }
        }
        Ok(c.reward + model.beta() * cont)
    }
    go(
        model,
        sigma,
        &History::start(initial_state),
        horizon,
        &mut budget,
    )
}

/// Iterates `T_λ` from zero `iterations` times.
pub fn iterate_policy_operator(
    model: &FiniteMdp,
    policy: &StationaryPolicy,
    iterations: usize,
) -> Result<ValueFunction, SolverError> {
    policy.check_feasible(model)?;
    let mut v = ValueFunction::zeros(model.n_states());
    for _ in 0..iterations {
        v = apply_t_policy_unchecked(model, policy, v.as_slice());
    }
    Ok(v)
}

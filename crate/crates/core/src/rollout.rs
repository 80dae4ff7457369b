//! Monte Carlo estimates of `E_σ Σ_{t=1}^{H} β^{t-1} r(s(t), a(t))`.
//!
//! Each trajectory `i` draws from its own ChaCha8 stream: the generator is
//! seeded with `cfg.seed` and switched to stream `i`. Results are therefore
//! identical whether trajectories run serially or in parallel, and the
//! aggregation runs in trajectory order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{Choice, FiniteHorizonStrategy, FiniteMdp, History, MdpError, StationaryPolicy};

#[derive(Debug, Error)]
pub enum RolloutError {
    #[error(transparent)]
    Model(#[from] MdpError),
    #[error("invalid rollout configuration: {0}")]
    InvalidConfig(String),
    #[error("strategy horizon {strategy} is shorter than the rollout horizon {requested}")]
    StrategyTooShort { strategy: usize, requested: usize },
    #[error("strategy chose infeasible action {action} in state {state} at timestep {timestep}")]
    InfeasibleDecision {
        timestep: usize,
        state: usize,
        action: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RolloutConfig {
    pub n_trajectories: usize,
    pub horizon: usize,
    pub seed: u64,
    pub initial_state: usize,
}

impl RolloutConfig {
    /// Picks the shortest horizon whose truncation bias is within `budget`.
    pub fn with_bias_budget(
        model: &FiniteMdp,
        budget: f64,
        n_trajectories: usize,
        seed: u64,
        initial_state: usize,
    ) -> Self {
        Self {
            n_trajectories,
            horizon: model.horizon_for_budget(budget).max(1),
            seed,
            initial_state,
        }
    }

    fn check(&self, model: &FiniteMdp) -> Result<(), RolloutError> {
        if self.n_trajectories == 0 {
            return Err(RolloutError::InvalidConfig(
                "n_trajectories must be positive".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(RolloutError::InvalidConfig(
                "horizon must be positive".into(),
            ));
        }
        if self.initial_state >= model.n_states() {
            return Err(MdpError::StateOutOfRange {
                state: self.initial_state,
                n_states: model.n_states(),
            }
            .into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_trajectories)`.
    pub standard_error: f64,
    /// `β^H M / (1 - β)`.
    pub truncation_bias_bound: f64,
    pub n_trajectories: usize,
    pub horizon: usize,
}

fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Inverse-CDF draw over the row in state-index order.
fn sample_next(choice: &Choice, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(t, p) in &choice.next {
        acc += p;
        if u < acc {
            return t;
        }
    }
    choice.next.last().expect("stochastic row is nonempty").0
}

/// Discounted return of one trajectory.
fn run_trajectory(
    model: &FiniteMdp,
    cfg: &RolloutConfig,
    index: usize,
    decide: &(dyn Fn(&History) -> usize + Sync),
) -> Result<f64, RolloutError> {
    let mut rng = trajectory_rng(cfg.seed, index);
    let mut history = History::start(cfg.initial_state);
    let mut total = 0.0;
    let mut discount = 1.0;
    for t in 1..=cfg.horizon {
        let s = history.current_state();
        let a = decide(&history);
        let c = model.choice(s, a).ok_or(RolloutError::InfeasibleDecision {
            timestep: t,
            state: s,
            action: a,
        })?;
        total += discount * c.reward;
        discount *= model.beta();
        if t < cfg.horizon {
            let next = sample_next(c, &mut rng);
            history.extend(a, next);
        }
    }
    Ok(total)
}

fn aggregate(
    model: &FiniteMdp,
    cfg: &RolloutConfig,
    decide: &(dyn Fn(&History) -> usize + Sync),
) -> Result<RolloutEstimate, RolloutError> {
    let returns: Vec<f64> = (0..cfg.n_trajectories)
        .into_par_iter()
        .map(|i| run_trajectory(model, cfg, i, decide))
        .collect::<Result<_, _>>()?;
    // Welford; exact for constant samples.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in returns.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = returns.len();
    let variance = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    Ok(RolloutEstimate {
        mean,
        standard_error: (variance / n as f64).sqrt(),
        truncation_bias_bound: model.truncation_bound(cfg.horizon),
        n_trajectories: n,
        horizon: cfg.horizon,
    })
}

/// Estimates `V_λ(initial_state)`; deterministic given the seed.
pub fn simulate_policy(
    model: &FiniteMdp,
    policy: &StationaryPolicy,
    cfg: &RolloutConfig,
) -> Result<RolloutEstimate, RolloutError> {
    policy.check_feasible(model)?;
    cfg.check(model)?;
    aggregate(model, cfg, &|h: &History| policy.action(h.current_state()))
}

/// Estimates the payoff of a history-dependent strategy, feeding the full
/// history to it at every step.
pub fn simulate_strategy(
    model: &FiniteMdp,
    sigma: &FiniteHorizonStrategy,
    cfg: &RolloutConfig,
) -> Result<RolloutEstimate, RolloutError> {
    cfg.check(model)?;
    if sigma.horizon() < cfg.horizon {
        return Err(RolloutError::StrategyTooShort {
            strategy: sigma.horizon(),
            requested: cfg.horizon,
        });
    }
    aggregate(model, cfg, &|h: &History| sigma.decide(h))
}

//! Discounted dynamic programming on finite and discretized models.
//!
//! * [`fixed_point`]: Picard iteration with a priori / a posteriori bounds.
//! * [`mdp`]: finite models, value functions, policies, strategies.
//! * [`bellman`]: the operators `T` and `T_λ`, greedy selection, property checks.
//! * [`solver`]: value iteration, policy evaluation, ε-optimality certificates, oracles.
//! * [`rollout`]: Monte Carlo estimates of discounted payoffs.
//! * [`structure`]: grid discretization and structural-class verifiers.
//! * [`zoo`]: canonical named models.
//! * [`cli`]: the command-line front end.

pub mod bellman;
pub mod cli;
pub mod fixed_point;
pub mod mdp;
pub mod rollout;
pub mod solver;
pub mod structure;
pub mod testkit;
pub mod zoo;

pub use mdp::{FiniteMdp, MdpDocument, StationaryPolicy, ValueFunction};

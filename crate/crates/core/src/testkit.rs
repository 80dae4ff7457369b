//! Seeded random instances for property tests and the acceptance suite.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::mdp::{FiniteMdp, StationaryPolicy, ValueFunction};

/// Discount factors the randomized suites sweep over.
pub const SUITE_BETAS: [f64; 3] = [0.5, 0.9, 0.99];

/// A random model with `1..=max_states` states, `1..=max_actions` actions and
/// β drawn from [`SUITE_BETAS`].
pub fn random_mdp<R: Rng>(rng: &mut R, max_states: usize, max_actions: usize) -> FiniteMdp {
    let n = rng.gen_range(1..=max_states);
    let m = rng.gen_range(1..=max_actions);
    let beta = *SUITE_BETAS.choose(rng).unwrap();
    random_mdp_with(rng, n, m, beta)
}

/// A random model with exactly the given shape. Rewards lie in `[-5, 5]`,
/// feasible sets are random nonempty subsets and rows are dense-ish.
pub fn random_mdp_with<R: Rng>(rng: &mut R, n: usize, m: usize, beta: f64) -> FiniteMdp {
    let mut b = FiniteMdp::builder(n, m, beta);
    for s in 0..n {
        let mut actions: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.7)).collect();
        if actions.is_empty() {
            actions.push(rng.gen_range(0..m));
        }
        for a in actions {
            let reward = rng.gen_range(-5.0..5.0);
            b = b.choice(s, a, reward, random_row(rng, n));
        }
    }
    b.build().expect("random model is valid")
}

/// A model whose rows touch at most three successors, for large-state tests.
pub fn random_sparse_mdp<R: Rng>(rng: &mut R, n: usize, m: usize) -> FiniteMdp {
    let mut b = FiniteMdp::builder(n, m, 0.9);
    for s in 0..n {
        for a in 0..m {
            let mut targets: Vec<usize> = (0..3).map(|_| rng.gen_range(0..n)).collect();
            targets.sort_unstable();
            targets.dedup();
            let w: Vec<f64> = targets.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            b = b.choice(
                s,
                a,
                rng.gen_range(-1.0..1.0),
                targets.into_iter().zip(w.into_iter().map(|x| x / total)),
            );
        }
    }
    b.build().expect("random model is valid")
}

fn random_row<R: Rng>(rng: &mut R, n: usize) -> Vec<(usize, f64)> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.6) {
                rng.gen_range(0.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..n)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.into_iter()
        .enumerate()
        .filter(|&(_, x)| x > 0.0)
        .map(|(s, x)| (s, x / total))
        .collect()
}

pub fn random_value<R: Rng>(rng: &mut R, n: usize, scale: f64) -> ValueFunction {
    ValueFunction::new((0..n).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

/// Uniformly random feasible stationary policy.
pub fn random_policy<R: Rng>(rng: &mut R, model: &FiniteMdp) -> StationaryPolicy {
    let actions = (0..model.n_states())
        .map(|s| model.choices(s).choose(rng).unwrap().action)
        .collect();
    StationaryPolicy::new(model, actions).unwrap()
}

/// Every feasible stationary policy, in lexicographic order.
pub fn all_policies(model: &FiniteMdp) -> Vec<StationaryPolicy> {
    let mut out = vec![Vec::new()];
    for s in 0..model.n_states() {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                model.feasible_actions(s).map(move |a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|p| StationaryPolicy::new(model, p).unwrap())
        .collect()
}

/// Every state gets reward `c` whatever it does; transitions are random.
pub fn constant_reward_mdp<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    beta: f64,
    c: f64,
) -> FiniteMdp {
    let mut b = FiniteMdp::builder(n, m, beta);
    for s in 0..n {
        for a in 0..m {
            b = b.choice(s, a, c, random_row(rng, n));
        }
    }
    b.build().expect("constant reward model is valid")
}

/// Two states; action `a` moves to state `a`; reward 1 for staying put.
pub fn two_state_switching(beta: f64) -> FiniteMdp {
    FiniteMdp::builder(2, 2, beta)
        .choice(0, 0, 1.0, [(0, 1.0)])
        .choice(0, 1, 0.0, [(1, 1.0)])
        .choice(1, 0, 0.0, [(0, 1.0)])
        .choice(1, 1, 1.0, [(1, 1.0)])
        .build()
        .expect("two-state model is valid")
}

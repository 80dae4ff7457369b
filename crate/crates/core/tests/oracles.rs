//! Cross-checks against oracles written here, independent of the library's
//! own solver paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dynprog::mdp::FiniteHorizonStrategy;
use dynprog::solver::{
    evaluate_policy_exact, evaluate_strategy_exact, history_tree_optimum, solve,
};
use dynprog::testkit::{all_policies, random_mdp, random_mdp_with};
use dynprog::{FiniteMdp, StationaryPolicy};

/// Dense `(I - βP) x = r` by Gauss-Jordan with full pivoting.
fn local_policy_value(m: &FiniteMdp, policy: &StationaryPolicy) -> Vec<f64> {
    let n = m.n_states();
    let mut a = vec![vec![0.0; n + 1]; n];
    for (s, row) in a.iter_mut().enumerate() {
        let act = policy.action(s);
        for (t, x) in row.iter_mut().take(n).enumerate() {
            *x = f64::from(u8::from(s == t)) - m.beta() * m.probability(s, act, t).unwrap();
        }
        row[n] = m.reward(s, act).unwrap();
    }
    let mut col_of: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, x) in row.iter().enumerate().take(n).skip(k) {
                if x.abs() > best {
                    (pr, pc, best) = (i, j, x.abs());
                }
            }
        }
        a.swap(k, pr);
        for row in a.iter_mut() {
            row.swap(k, pc);
        }
        col_of.swap(k, pc);
        let piv = a[k][k];
        for x in a[k].iter_mut() {
            *x /= piv;
        }
        for i in 0..n {
            if i != k {
                let f = a[i][k];
                let pivot_row = a[k].clone();
                for (x, p) in a[i].iter_mut().zip(pivot_row) {
                    *x -= f * p;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in 0..n {
        x[col_of[k]] = a[k][n];
    }
    x
}

#[test]
fn value_iteration_matches_policy_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..40 {
        let m = random_mdp(&mut rng, 5, 3);
        let mut best = vec![f64::NEG_INFINITY; m.n_states()];
        for p in all_policies(&m) {
            for (b, v) in best.iter_mut().zip(local_policy_value(&m, &p)) {
                *b = b.max(v);
            }
        }
        let v = solve(&m, 1e-10).unwrap().value;
        for s in 0..m.n_states() {
            assert!(
                (v[s] - best[s]).abs() <= 1e-9,
                "state {s}: {} vs {}",
                v[s],
                best[s]
            );
        }
    }
}

#[test]
fn exact_evaluation_matches_local_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..60 {
        let m = random_mdp(&mut rng, 8, 3);
        for p in all_policies(&m).into_iter().take(20) {
            let w = evaluate_policy_exact(&m, &p).unwrap();
            let local = local_policy_value(&m, &p);
            let scale = 1.0 / (1.0 - m.beta());
            for s in 0..m.n_states() {
                assert!((w[s] - local[s]).abs() <= 1e-11 * scale * scale);
            }
        }
    }
}

/// Recursion over explicit history lists; shares no code with the library.
fn local_tree_optimum(m: &FiniteMdp, s: usize, remaining: usize) -> f64 {
    if remaining == 0 {
        return 0.0;
    }
    (0..m.n_actions())
        .filter_map(|a| {
            let r = m.reward(s, a)?;
            let cont: f64 = (0..m.n_states())
                .map(|t| m.probability(s, a, t).unwrap())
                .enumerate()
                .filter(|&(_, p)| p > 0.0)
                .map(|(t, p)| p * local_tree_optimum(m, t, remaining - 1))
                .sum();
            Some(r + m.beta() * cont)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn history_tree_matches_local_recursion() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..30 {
        let n = rng.gen_range(1..=4);
        let a = rng.gen_range(1..=3);
        let m = random_mdp_with(&mut rng, n, a, 0.9);
        for h in 1..=4 {
            for s in 0..n {
                let lib = history_tree_optimum(&m, h, s).unwrap();
                let local = local_tree_optimum(&m, s, h);
                assert!((lib - local).abs() <= 1e-12, "h {h} s {s}");
            }
        }
    }
}

#[test]
fn random_history_strategies_never_beat_the_tree_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for k in 0..20 {
        let m = random_mdp_with(&mut rng, 3, 2, 0.8);
        let sigma = FiniteHorizonStrategy::random(&m, 4, k);
        for s in 0..3 {
            let v = evaluate_strategy_exact(&m, &sigma, 4, s).unwrap();
            assert!(v <= local_tree_optimum(&m, s, 4) + 1e-12);
        }
    }
}

//! The Bellman operators `T` and `T_λ`, greedy selection, and executable
//! checks of monotonicity, discounting and the β-contraction property.

use rayon::prelude::*;
use thiserror::Error;

use crate::mdp::{sup_norm_unchecked, FiniteMdp, MdpError, StationaryPolicy, ValueFunction};

/// Tolerance for the algebraic identities of `T`.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Below this many states the operators run serially.
const PARALLEL_THRESHOLD: usize = 512;

#[derive(Debug, Error)]
pub enum BellmanError {
    #[error(transparent)]
    Model(#[from] MdpError),
    #[error("precondition f >= g violated at state {state}")]
    NotOrdered { state: usize },
    #[error("contraction ratio undefined for identical functions")]
    IdenticalArguments,
}

fn check_len(model: &FiniteMdp, f: &ValueFunction) -> Result<(), MdpError> {
    if f.len() != model.n_states() {
        return Err(MdpError::DimensionMismatch {
            expected: model.n_states(),
            got: f.len(),
        });
    }
    Ok(())
}

fn per_state(n: usize, op: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
    if n >= PARALLEL_THRESHOLD {
        (0..n).into_par_iter().map(op).collect()
    } else {
        (0..n).map(op).collect()
    }
}

/// `Q(s, a, f) = r(s, a) + β Σ_{s'} f(s') p(s' | s, a)`.
pub fn q_value(model: &FiniteMdp, s: usize, a: usize, f: &ValueFunction) -> Result<f64, MdpError> {
    check_len(model, f)?;
    if s >= model.n_states() {
        return Err(MdpError::StateOutOfRange {
            state: s,
            n_states: model.n_states(),
        });
    }
    let choice = model.choice(s, a).ok_or(MdpError::InfeasibleAction {
        state: s,
        action: a,
    })?;
    Ok(choice.reward + model.beta() * choice.expectation(f.as_slice()))
}

/// Maximum of `Q(s, ·, f)` over the feasible set and the lowest action attaining it.
fn best_choice(model: &FiniteMdp, s: usize, f: &[f64]) -> (usize, f64) {
    let beta = model.beta();
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for c in model.choices(s) {
        let q = c.reward + beta * c.expectation(f);
        if q > best.1 {
            best = (c.action, q);
        }
    }
    best
}

/// `(Tf)(s) = max_{a ∈ Γ(s)} Q(s, a, f)`.
pub fn apply_t(model: &FiniteMdp, f: &ValueFunction) -> Result<ValueFunction, MdpError> {
    check_len(model, f)?;
    Ok(apply_t_unchecked(model, f.as_slice()))
}

pub(crate) fn apply_t_unchecked(model: &FiniteMdp, f: &[f64]) -> ValueFunction {
    ValueFunction::from_vec_unchecked(per_state(model.n_states(), |s| best_choice(model, s, f).1))
}

/// `(T_λ f)(s) = Q(s, λ(s), f)`.
pub fn apply_t_policy(
    model: &FiniteMdp,
    policy: &StationaryPolicy,
    f: &ValueFunction,
) -> Result<ValueFunction, MdpError> {
    check_len(model, f)?;
    policy.check_feasible(model)?;
    Ok(apply_t_policy_unchecked(model, policy, f.as_slice()))
}

pub(crate) fn apply_t_policy_unchecked(
    model: &FiniteMdp,
    policy: &StationaryPolicy,
    f: &[f64],
) -> ValueFunction {
    let beta = model.beta();
    ValueFunction::from_vec_unchecked(per_state(model.n_states(), |s| {
        let c = model
            .choice(s, policy.action(s))
            .expect("policy checked feasible");
        c.reward + beta * c.expectation(f)
    }))
}

/// A maximizing selection for `Tf`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyResult {
    pub policy: StationaryPolicy,
    /// `(Tf)(s)`.
    pub values: ValueFunction,
    /// Supremum minus the value achieved by `policy`; zero for finite models.
    pub slack: Vec<f64>,
}

/// Per-state argmax of `Q(s, ·, f)`, ties broken toward the lowest action index.
pub fn greedy(model: &FiniteMdp, f: &ValueFunction) -> Result<GreedyResult, MdpError> {
    check_len(model, f)?;
    let n = model.n_states();
    let picks: Vec<(usize, f64)> = if n >= PARALLEL_THRESHOLD {
        (0..n)
            .into_par_iter()
            .map(|s| best_choice(model, s, f.as_slice()))
            .collect()
    } else {
        (0..n)
            .map(|s| best_choice(model, s, f.as_slice()))
            .collect()
    };
    let (actions, values): (Vec<usize>, Vec<f64>) = picks.into_iter().unzip();
    Ok(GreedyResult {
        policy: StationaryPolicy::from_vec_unchecked(actions),
        values: ValueFunction::from_vec_unchecked(values),
        slack: vec![0.0; n],
    })
}

/// Whether `Tf >= Tg` pointwise (within [`IDENTITY_TOLERANCE`]) for `f >= g`.
pub fn check_monotone(
    model: &FiniteMdp,
    f: &ValueFunction,
    g: &ValueFunction,
) -> Result<bool, BellmanError> {
    check_len(model, f)?;
    check_len(model, g)?;
    if let Some(state) = (0..f.len()).find(|&s| f[s] < g[s]) {
        return Err(BellmanError::NotOrdered { state });
    }
    let tf = apply_t_unchecked(model, f.as_slice());
    let tg = apply_t_unchecked(model, g.as_slice());
    Ok(tf.dominates(&tg, IDENTITY_TOLERANCE))
}

/// `‖T(f + c) - (Tf + βc)‖`.
pub fn check_discounting(model: &FiniteMdp, f: &ValueFunction, c: f64) -> Result<f64, MdpError> {
    check_len(model, f)?;
    let shifted = apply_t_unchecked(model, f.shifted(c).as_slice());
    let expected = apply_t_unchecked(model, f.as_slice()).shifted(model.beta() * c);
    Ok(sup_norm_unchecked(shifted.as_slice(), expected.as_slice()))
}

/// `‖Tf - Tg‖ / ‖f - g‖`; at most β for every pair.
pub fn check_contraction(
    model: &FiniteMdp,
    f: &ValueFunction,
    g: &ValueFunction,
) -> Result<f64, BellmanError> {
    check_len(model, f)?;
    check_len(model, g)?;
    ratio(
        f,
        g,
        apply_t_unchecked(model, f.as_slice()),
        apply_t_unchecked(model, g.as_slice()),
    )
}

/// `‖T_λ f - T_λ g‖ / ‖f - g‖`; at most β for every pair and every feasible λ.
pub fn check_policy_contraction(
    model: &FiniteMdp,
    policy: &StationaryPolicy,
    f: &ValueFunction,
    g: &ValueFunction,
) -> Result<f64, BellmanError> {
    check_len(model, f)?;
    check_len(model, g)?;
    policy.check_feasible(model)?;
    ratio(
        f,
        g,
        apply_t_policy_unchecked(model, policy, f.as_slice()),
        apply_t_policy_unchecked(model, policy, g.as_slice()),
    )
}

fn ratio(
    f: &ValueFunction,
    g: &ValueFunction,
    tf: ValueFunction,
    tg: ValueFunction,
) -> Result<f64, BellmanError> {
    let before = sup_norm_unchecked(f.as_slice(), g.as_slice());
    if before == 0.0 {
        return Err(BellmanError::IdenticalArguments);
    }
    Ok(sup_norm_unchecked(tf.as_slice(), tg.as_slice()) / before)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::tests::two_state;
    use crate::testkit::{random_mdp, random_value};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vf(v: &[f64]) -> ValueFunction {
        ValueFunction::new(v.to_vec()).unwrap()
    }

    #[test]
    fn q_value_examples() {
        let m = two_state(0.5);
        assert_eq!(q_value(&m, 0, 0, &ValueFunction::zeros(2)).unwrap(), 1.0);
        assert_eq!(
            q_value(&m, 1, 0, &ValueFunction::constant(2, 3.0)).unwrap(),
            1.5
        );
        let f = vf(&[2.0, 2.0]);
        assert_eq!(q_value(&m, 0, 0, &f).unwrap(), 2.0);
        assert_eq!(q_value(&m, 0, 1, &f).unwrap(), 1.0);
    }

    #[test]
    fn q_value_rejects_infeasible() {
        let m = FiniteMdp::builder(1, 2, 0.5)
            .choice(0, 0, 1.0, [(0, 1.0)])
            .build()
            .unwrap();
        assert!(matches!(
            q_value(&m, 0, 1, &ValueFunction::zeros(1)),
            Err(MdpError::InfeasibleAction {
                state: 0,
                action: 1
            })
        ));
    }

    #[test]
    fn apply_t_examples() {
        let m = two_state(0.5);
        assert_eq!(
            apply_t(&m, &ValueFunction::zeros(2)).unwrap(),
            vf(&[1.0, 1.0])
        );
        assert_eq!(apply_t(&m, &vf(&[2.0, 2.0])).unwrap(), vf(&[2.0, 2.0]));
    }

    #[test]
    fn apply_t_policy_examples() {
        let m = two_state(0.5);
        let switch = StationaryPolicy::new(&m, vec![1, 0]).unwrap();
        assert_eq!(
            apply_t_policy(&m, &switch, &vf(&[2.0, 2.0])).unwrap(),
            vf(&[1.0, 1.0])
        );
        assert_eq!(
            apply_t_policy(&m, &switch, &ValueFunction::zeros(2)).unwrap(),
            vf(&[0.0, 0.0])
        );
        let stay = StationaryPolicy::new(&m, vec![0, 1]).unwrap();
        let f = vf(&[0.3, -1.0]);
        assert_eq!(
            apply_t_policy(&m, &stay, &f).unwrap(),
            apply_t(&m, &f).unwrap()
        );
    }

    #[test]
    fn greedy_examples() {
        let m = two_state(0.5);
        let g = greedy(&m, &vf(&[2.0, 2.0])).unwrap();
        assert_eq!(g.policy.actions(), &[0, 1]);
        assert_eq!(g.values, vf(&[2.0, 2.0]));
        assert_eq!(g.slack, vec![0.0, 0.0]);

        let ties = FiniteMdp::builder(1, 3, 0.9)
            .choice(0, 0, 1.0, [(0, 1.0)])
            .choice(0, 1, 1.0, [(0, 1.0)])
            .choice(0, 2, 1.0, [(0, 1.0)])
            .build()
            .unwrap();
        assert_eq!(
            greedy(&ties, &ValueFunction::zeros(1))
                .unwrap()
                .policy
                .actions(),
            &[0]
        );
    }

    #[test]
    fn greedy_on_zero_picks_best_reward() {
        let m = FiniteMdp::builder(2, 3, 0.9)
            .choice(0, 0, 1.0, [(1, 1.0)])
            .choice(0, 2, 4.0, [(0, 1.0)])
            .choice(1, 1, -2.0, [(0, 1.0)])
            .choice(1, 2, -1.0, [(1, 1.0)])
            .build()
            .unwrap();
        assert_eq!(
            greedy(&m, &ValueFunction::zeros(2))
                .unwrap()
                .policy
                .actions(),
            &[2, 2]
        );
    }

    #[test]
    fn monotone_and_discounting_examples() {
        let m = two_state(0.5);
        let f = vf(&[0.3, 1.7]);
        assert!(check_monotone(&m, &f, &f).unwrap());
        assert!(check_monotone(&m, &f.shifted(2.0), &f).unwrap());
        let tf = apply_t(&m, &f).unwrap();
        let tfc = apply_t(&m, &f.shifted(2.0)).unwrap();
        for s in 0..2 {
            assert_eq!(tfc[s] - tf[s], 1.0);
        }
        assert!(matches!(
            check_monotone(&m, &f, &f.shifted(1.0)),
            Err(BellmanError::NotOrdered { state: 0 })
        ));
        assert_eq!(check_discounting(&m, &f, 0.0).unwrap(), 0.0);
        assert!(check_discounting(&m, &f, 1.0).unwrap() <= IDENTITY_TOLERANCE);
    }

    #[test]
    fn contraction_examples() {
        let m = two_state(0.5);
        let f = vf(&[0.3, 1.7]);
        assert_eq!(check_contraction(&m, &f.shifted(4.0), &f).unwrap(), 0.5);
        assert!(matches!(
            check_contraction(&m, &f, &f),
            Err(BellmanError::IdenticalArguments)
        ));
        // State 2 is never entered, so changing f there leaves Tf unchanged.
        let m3 = FiniteMdp::builder(3, 1, 0.7)
            .choice(0, 0, 1.0, [(1, 1.0)])
            .choice(1, 0, 1.0, [(0, 1.0)])
            .choice(2, 0, 1.0, [(0, 1.0)])
            .build()
            .unwrap();
        let g = vf(&[0.0, 0.0, 5.0]);
        assert_eq!(
            check_contraction(&m3, &g, &ValueFunction::zeros(3)).unwrap(),
            0.0
        );
    }

    #[test]
    fn random_models_are_monotone_and_discounted() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let m = random_mdp(&mut rng, 6, 4);
            let g = random_value(&mut rng, m.n_states(), 10.0);
            let noise: Vec<f64> = (0..m.n_states()).map(|_| rng.gen_range(0.0..3.0)).collect();
            let f = ValueFunction::new(g.iter().zip(&noise).map(|(a, b)| a + b).collect()).unwrap();
            assert!(check_monotone(&m, &f, &g).unwrap());
            let c = rng.gen_range(-5.0..5.0);
            assert!(check_discounting(&m, &g, c).unwrap() <= IDENTITY_TOLERANCE);
            if f != g {
                assert!(check_contraction(&m, &f, &g).unwrap() <= m.beta() + IDENTITY_TOLERANCE);
            }
            let greedy_g = greedy(&m, &g).unwrap();
            assert_eq!(
                apply_t_policy(&m, &greedy_g.policy, &g).unwrap(),
                apply_t(&m, &g).unwrap()
            );
            let lambda = crate::testkit::random_policy(&mut rng, &m);
            assert!(apply_t(&m, &g)
                .unwrap()
                .dominates(&apply_t_policy(&m, &lambda, &g).unwrap(), 0.0));
        }
    }

    #[test]
    fn large_models_use_parallel_path_consistently() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = crate::testkit::random_sparse_mdp(&mut rng, 700, 3);
        let f = random_value(&mut rng, 700, 1.0);
        let serial: Vec<f64> = (0..700)
            .map(|s| best_choice(&m, s, f.as_slice()).1)
            .collect();
        assert_eq!(apply_t(&m, &f).unwrap().as_slice(), serial.as_slice());
    }
}

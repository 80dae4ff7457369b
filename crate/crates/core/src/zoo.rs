//! Named, parameterized example models, one per verifiable structural class.
//!
//! | name                  | class              | kind       |
//! |-----------------------|--------------------|------------|
//! | `machine_replacement` | finite             | finite     |
//! | `queueing`            | countable_compact  | finite     |
//! | `inventory`           | monotone           | continuous |
//! | `consumption_savings` | continuous_concave | continuous |
//! | `dynamic_pricing`     | continuous         | continuous |
//!
//! Parameters are passed as `key=value` strings; [`registry`] lists every
//! name, range and default. `docs/zoo_registry.json` is that listing
//! serialized.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{FiniteMdp, MdpError};
use crate::solver::{brute_force_oracle, SolverError};
use crate::structure::{
    discretize, ContinuousModelSpec, GridModel, NextStateLaw, StructuralClass, StructureError,
};

const MACHINE_GOLDEN: &str = include_str!("../data/machine_replacement_golden.json");

#[derive(Debug, Error)]
pub enum ZooError {
    #[error("unknown model `{name}`; valid models: {}", .valid.join(", "))]
    UnknownModel {
        name: String,
        valid: Vec<&'static str>,
    },
    #[error("unknown parameter `{param}` for `{model}`; valid parameters: {}", .valid.join(", "))]
    UnknownParam {
        model: &'static str,
        param: String,
        valid: Vec<&'static str>,
    },
    #[error("parameter `{param}` = `{value}`: {reason}")]
    BadParam {
        param: String,
        value: String,
        reason: String,
    },
    #[error("parameter `{0}` given more than once")]
    DuplicateParam(String),
    #[error("malformed parameter `{0}`; expected key=value")]
    Malformed(String),
    #[error(transparent)]
    Model(#[from] MdpError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Splits `key=value` assignments; keys must be nonempty and unique.
pub fn parse_params<S: AsRef<str>>(items: &[S]) -> Result<BTreeMap<String, String>, ZooError> {
    let mut out = BTreeMap::new();
    for item in items {
        let item = item.as_ref();
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| ZooError::Malformed(item.to_string()))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ZooError::Malformed(item.to_string()));
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(ZooError::DuplicateParam(k.to_string()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParamKind {
    Integer {
        min: u64,
        max: u64,
        default: u64,
    },
    /// Open or closed bounds as flagged.
    Real {
        min: f64,
        max: f64,
        min_inclusive: bool,
        max_inclusive: bool,
        default: f64,
    },
    Choice {
        options: Vec<String>,
        default: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub description: &'static str,
    #[serde(flatten)]
    pub kind: ParamKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: &'static str,
    pub claimed_class: StructuralClass,
    pub description: &'static str,
    pub params: Vec<ParamSpec>,
}

fn int(
    name: &'static str,
    description: &'static str,
    min: u64,
    max: u64,
    default: u64,
) -> ParamSpec {
    ParamSpec {
        name,
        description,
        kind: ParamKind::Integer { min, max, default },
    }
}

fn closed(
    name: &'static str,
    description: &'static str,
    min: f64,
    max: f64,
    default: f64,
) -> ParamSpec {
    ParamSpec {
        name,
        description,
        kind: ParamKind::Real {
            min,
            max,
            min_inclusive: true,
            max_inclusive: true,
            default,
        },
    }
}

fn beta(default: f64) -> ParamSpec {
    ParamSpec {
        name: "beta",
        description: "discount factor",
        kind: ParamKind::Real {
            min: 0.0,
            max: 1.0,
            min_inclusive: false,
            max_inclusive: false,
            default,
        },
    }
}

fn grid(name: &'static str, default: u64) -> ParamSpec {
    int(name, "grid points", 2, 2000, default)
}

/// Every zoo model with its parameter schema.
pub fn registry() -> Vec<ModelEntry> {
    vec![
        ModelEntry {
            name: "machine_replacement",
            claimed_class: StructuralClass::Finite,
            description: "Machine wears from state 0 (new) towards n_states - 1; keep pays an \
                          operating cost growing with wear, replace pays a fixed cost and resets.",
            params: vec![
                int("n_states", "wear levels", 2, 32, 4),
                beta(0.9),
                closed(
                    "wear_prob",
                    "probability of wearing one level per period",
                    0.0,
                    1.0,
                    0.6,
                ),
                closed(
                    "operating_cost",
                    "cost per period per wear level",
                    0.0,
                    100.0,
                    1.0,
                ),
                closed("replace_cost", "cost of a replacement", 0.0, 1000.0, 4.0),
            ],
        },
        ModelEntry {
            name: "queueing",
            claimed_class: StructuralClass::CountableCompact,
            description: "Service-rate control of a discrete-time queue truncated at capacity; \
                          arrivals beyond capacity are lost.",
            params: vec![
                int("capacity", "largest queue length", 1, 500, 20),
                beta(0.95),
                closed(
                    "arrival_prob",
                    "arrival probability per period",
                    0.0,
                    1.0,
                    0.3,
                ),
                closed(
                    "slow_rate",
                    "service probability at the slow rate",
                    0.0,
                    1.0,
                    0.2,
                ),
                closed(
                    "fast_rate",
                    "service probability at the fast rate",
                    0.0,
                    1.0,
                    0.5,
                ),
                closed(
                    "holding_cost",
                    "cost per waiting customer per period",
                    0.0,
                    100.0,
                    1.0,
                ),
                closed(
                    "fast_cost",
                    "extra cost per period of fast service",
                    0.0,
                    100.0,
                    2.0,
                ),
            ],
        },
        ModelEntry {
            name: "inventory",
            claimed_class: StructuralClass::Monotone,
            description: "Order-up-to inventory with disposal: from stock s choose the post-order \
                          level y; Poisson demand truncated at capacity; unmet demand is lost.",
            params: vec![
                closed("capacity", "storage capacity", 1.0, 1000.0, 20.0),
                beta(0.95),
                closed("demand_mean", "mean of the Poisson demand", 0.0, 100.0, 3.0),
                closed("price", "revenue per unit sold", 0.0, 100.0, 4.0),
                closed("order_cost", "cost per unit ordered", 0.0, 100.0, 2.0),
                closed(
                    "salvage",
                    "refund per unit disposed; must not exceed order_cost",
                    0.0,
                    100.0,
                    1.0,
                ),
                closed("holding_cost", "cost per unit left over", 0.0, 100.0, 0.5),
                grid("n_state", 50),
                grid("n_action", 50),
            ],
        },
        ModelEntry {
            name: "consumption_savings",
            claimed_class: StructuralClass::ContinuousConcave,
            description: "Split wealth w into consumption w - k and savings k <= w; savings \
                          earn gross return R and an equally likely income y_low or y_high \
                          arrives. R * wealth_max + y_high must not exceed wealth_max.",
            params: vec![
                closed(
                    "wealth_max",
                    "upper end of the wealth interval",
                    0.1,
                    1000.0,
                    10.0,
                ),
                beta(0.9),
                ParamSpec {
                    name: "utility",
                    description: "sqrt(c) or log(1 + c)",
                    kind: ParamKind::Choice {
                        options: vec!["sqrt".into(), "log1p".into()],
                        default: "sqrt".into(),
                    },
                },
                closed("gross_return", "gross return R on savings", 0.0, 1.0, 0.95),
                closed("income_low", "low income draw", 0.0, 1000.0, 0.25),
                closed("income_high", "high income draw", 0.0, 1000.0, 0.5),
                grid("n_state", 200),
            ],
        },
        ModelEntry {
            name: "dynamic_pricing",
            claimed_class: StructuralClass::Continuous,
            description: "Post a price for a stock of goods; Poisson demand with mean \
                          demand_scale * exp(-price / price_sensitivity); stock is topped up by \
                          restock units each period.",
            params: vec![
                closed("capacity", "largest stock", 1.0, 100.0, 10.0),
                beta(0.9),
                closed("price_min", "lowest price", 0.0, 100.0, 0.5),
                closed("price_max", "highest price", 0.0, 100.0, 5.0),
                closed("demand_scale", "mean demand at price 0", 0.0, 30.0, 4.0),
                closed(
                    "price_sensitivity",
                    "price scale of demand decay",
                    0.01,
                    100.0,
                    2.0,
                ),
                closed("restock", "units added per period", 0.0, 100.0, 1.0),
                grid("n_state", 41),
                grid("n_action", 41),
            ],
        },
    ]
}

/// Model names in registry order.
pub fn names() -> Vec<&'static str> {
    registry().into_iter().map(|e| e.name).collect()
}

/// A built zoo model.
#[derive(Debug, Clone)]
pub enum ModelInstance {
    Finite(FiniteMdp),
    Continuous {
        spec: ContinuousModelSpec,
        n_state: usize,
        n_action: usize,
    },
}

/// Stored values with the oracle that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValues {
    pub generator: String,
    pub horizon: usize,
    pub params: BTreeMap<String, String>,
    pub values: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct NamedModel {
    pub name: &'static str,
    pub claimed_class: StructuralClass,
    pub instance: ModelInstance,
    pub reference_values: Option<ReferenceValues>,
}

impl NamedModel {
    /// The finite model, discretizing continuous specs at their grid sizes.
    pub fn grid_model(&self) -> Result<GridModel, ZooError> {
        Ok(match &self.instance {
            ModelInstance::Finite(m) => GridModel::from_finite(m.clone(), self.claimed_class),
            ModelInstance::Continuous {
                spec,
                n_state,
                n_action,
            } => discretize(spec, *n_state, *n_action)?,
        })
    }
}

/// Resolved parameter values after defaults and range checks.
struct Params {
    model: &'static str,
    values: BTreeMap<&'static str, String>,
}

impl Params {
    fn resolve(entry: &ModelEntry, given: &BTreeMap<String, String>) -> Result<Self, ZooError> {
        let valid: Vec<&'static str> = entry.params.iter().map(|p| p.name).collect();
        if let Some(unknown) = given.keys().find(|k| !valid.contains(&k.as_str())) {
            return Err(ZooError::UnknownParam {
                model: entry.name,
                param: unknown.clone(),
                valid,
            });
        }
        let mut values = BTreeMap::new();
        for spec in &entry.params {
            let raw = given.get(spec.name);
            let bad = |value: &str, reason: String| ZooError::BadParam {
                param: spec.name.to_string(),
                value: value.to_string(),
                reason,
            };
            let text = match (&spec.kind, raw) {
                (ParamKind::Integer { default, .. }, None) => default.to_string(),
                (ParamKind::Real { default, .. }, None) => default.to_string(),
                (ParamKind::Choice { default, .. }, None) => default.clone(),
                (ParamKind::Integer { min, max, .. }, Some(v)) => {
                    let x: u64 = v
                        .parse()
                        .map_err(|_| bad(v, "expected an integer".into()))?;
                    if x < *min || x > *max {
                        return Err(bad(v, format!("must lie in [{min}, {max}]")));
                    }
                    x.to_string()
                }
                (
                    ParamKind::Real {
                        min,
                        max,
                        min_inclusive,
                        max_inclusive,
                        ..
                    },
                    Some(v),
                ) => {
                    let x: f64 = v.parse().map_err(|_| bad(v, "expected a number".into()))?;
                    let above = if *min_inclusive { x >= *min } else { x > *min };
                    let below = if *max_inclusive { x <= *max } else { x < *max };
                    if !(x.is_finite() && above && below) {
                        let (l, r) = (
                            if *min_inclusive { '[' } else { '(' },
                            if *max_inclusive { ']' } else { ')' },
                        );
                        return Err(bad(v, format!("must lie in {l}{min}, {max}{r}")));
                    }
                    x.to_string()
                }
                (ParamKind::Choice { options, .. }, Some(v)) => {
                    if !options.contains(v) {
                        return Err(bad(v, format!("valid options: {}", options.join(", "))));
                    }
                    v.clone()
                }
            };
            values.insert(spec.name, text);
        }
        Ok(Self {
            model: entry.name,
            values,
        })
    }

    fn real(&self, name: &str) -> f64 {
        self.values[name].parse().expect("resolved real")
    }

    fn count(&self, name: &str) -> usize {
        self.values[name].parse().expect("resolved integer")
    }

    fn text(&self, name: &str) -> &str {
        &self.values[name]
    }

    fn reject(&self, param: &str, reason: &str) -> ZooError {
        ZooError::BadParam {
            param: param.to_string(),
            value: self.values[param].clone(),
            reason: format!("{reason} (model {})", self.model),
        }
    }

    fn as_strings(&self) -> BTreeMap<String, String> {
        self.values
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }
}

/// Builds a zoo model. Missing parameters take their registry defaults.
pub fn build(name: &str, params: &BTreeMap<String, String>) -> Result<NamedModel, ZooError> {
    let entries = registry();
    let entry = entries
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| ZooError::UnknownModel {
            name: name.to_string(),
            valid: names(),
        })?;
    let p = Params::resolve(entry, params)?;
    let (instance, reference_values) = match entry.name {
        "machine_replacement" => {
            let m = machine_replacement(&p)?;
            let golden = golden_machine_replacement();
            let reference = (golden.params == p.as_strings()).then_some(golden);
            (ModelInstance::Finite(m), reference)
        }
        "queueing" => (ModelInstance::Finite(queueing(&p)?), None),
        "inventory" => (
            continuous(inventory(&p)?, &p, "n_state", Some("n_action")),
            None,
        ),
        "consumption_savings" => (
            continuous(consumption_savings(&p)?, &p, "n_state", None),
            None,
        ),
        "dynamic_pricing" => (
            continuous(dynamic_pricing(&p)?, &p, "n_state", Some("n_action")),
            None,
        ),
        _ => unreachable!("registry and builders disagree"),
    };
    Ok(NamedModel {
        name: entry.name,
        claimed_class: entry.claimed_class,
        instance,
        reference_values,
    })
}

fn continuous(
    spec: ContinuousModelSpec,
    p: &Params,
    n_state: &str,
    n_action: Option<&str>,
) -> ModelInstance {
    let n = p.count(n_state);
    ModelInstance::Continuous {
        spec,
        n_state: n,
        n_action: n_action.map_or(n, |k| p.count(k)),
    }
}

/// The shipped golden values for `machine_replacement` at default parameters.
pub fn golden_machine_replacement() -> ReferenceValues {
    serde_json::from_str(MACHINE_GOLDEN).expect("shipped golden file parses")
}

/// Recomputes the golden values from scratch with the backward-induction oracle.
pub fn regenerate_machine_replacement_golden() -> Result<ReferenceValues, ZooError> {
    let model = build("machine_replacement", &BTreeMap::new())?;
    let ModelInstance::Finite(m) = &model.instance else {
        unreachable!("machine_replacement is finite")
    };
    let horizon = m.horizon_for_budget(1e-12);
    let v = brute_force_oracle(m, horizon)?;
    let params = Params::resolve(&registry()[0], &BTreeMap::new())?.as_strings();
    Ok(ReferenceValues {
        generator: "brute_force_oracle".into(),
        horizon,
        params,
        values: v.iter().copied().enumerate().collect(),
    })
}

fn machine_replacement(p: &Params) -> Result<FiniteMdp, ZooError> {
    let n = p.count("n_states");
    let wear = p.real("wear_prob");
    let op = p.real("operating_cost");
    let replace = p.real("replace_cost");
    let mut b = FiniteMdp::builder(n, 2, p.real("beta"));
    for s in 0..n {
        let keep = if s + 1 < n && wear > 0.0 {
            if wear < 1.0 {
                vec![(s, 1.0 - wear), (s + 1, wear)]
            } else {
                vec![(s + 1, 1.0)]
            }
        } else {
            vec![(s, 1.0)]
        };
        b = b.choice(s, 0, -op * s as f64, keep);
        b = b.choice(s, 1, -replace, [(0, 1.0)]);
    }
    Ok(b.build()?)
}

fn queueing(p: &Params) -> Result<FiniteMdp, ZooError> {
    let cap = p.count("capacity");
    let lambda = p.real("arrival_prob");
    let rates = [p.real("slow_rate"), p.real("fast_rate")];
    let hold = p.real("holding_cost");
    let fast = p.real("fast_cost");
    let mut b = FiniteMdp::builder(cap + 1, 2, p.real("beta"));
    for s in 0..=cap {
        for (a, &mu) in rates.iter().enumerate() {
            let mu = if s == 0 { 0.0 } else { mu };
            let mut row = vec![0.0; cap + 1];
            // Independent arrival and departure within the period.
            for (arrive, pa) in [(0usize, 1.0 - lambda), (1, lambda)] {
                for (depart, pd) in [(0usize, 1.0 - mu), (1, mu)] {
                    if pd == 0.0 {
                        continue;
                    }
                    let next = (s + arrive - depart).min(cap);
                    row[next] += pa * pd;
                }
            }
            let next = row.into_iter().enumerate().filter(|&(_, q)| q > 0.0);
            b = b.choice(s, a, -hold * s as f64 - fast * a as f64, next);
        }
    }
    Ok(b.build()?)
}

/// Poisson(mean) on `0..=max`, renormalized.
pub fn truncated_poisson(mean: f64, max: usize) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(max + 1);
    let mut term = (-mean).exp();
    for k in 0..=max {
        pmf.push(term);
        term *= mean / (k + 1) as f64;
    }
    let total: f64 = pmf.iter().sum();
    pmf.into_iter().map(|q| q / total).collect()
}

fn inventory(p: &Params) -> Result<ContinuousModelSpec, ZooError> {
    let cap = p.real("capacity");
    let price = p.real("price");
    let order = p.real("order_cost");
    let salvage = p.real("salvage");
    let hold = p.real("holding_cost");
    if salvage > order {
        return Err(p.reject("salvage", "must not exceed order_cost"));
    }
    let pmf = Arc::new(truncated_poisson(
        p.real("demand_mean"),
        cap.floor() as usize,
    ));
    let demand = pmf.clone();
    let reward = move |s: f64, y: f64| {
        let (sold, left) = demand
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(sold, left), (d, q)| {
                let d = d as f64;
                (sold + q * d.min(y), left + q * (y - d).max(0.0))
            });
        -order * (y - s).max(0.0) + salvage * (s - y).max(0.0) + price * sold - hold * left
    };
    Ok(ContinuousModelSpec {
        state_interval: (0.0, cap),
        action_interval: (0.0, cap),
        reward: Arc::new(reward),
        law: NextStateLaw::PointMasses(Arc::new(move |_, y| {
            pmf.iter()
                .enumerate()
                .map(|(d, &q)| ((y - d as f64).max(0.0), q))
                .collect()
        })),
        admissible: None,
        beta: p.real("beta"),
        claimed_class: StructuralClass::Monotone,
    })
}

fn consumption_savings(p: &Params) -> Result<ContinuousModelSpec, ZooError> {
    let w_max = p.real("wealth_max");
    let ret = p.real("gross_return");
    let (lo, hi) = (p.real("income_low"), p.real("income_high"));
    if lo > hi {
        return Err(p.reject("income_low", "must not exceed income_high"));
    }
    if ret * w_max + hi > w_max {
        return Err(p.reject(
            "income_high",
            "gross_return * wealth_max + income_high must not exceed wealth_max",
        ));
    }
    let utility: fn(f64) -> f64 = match p.text("utility") {
        "sqrt" => f64::sqrt,
        _ => f64::ln_1p,
    };
    Ok(ContinuousModelSpec {
        state_interval: (0.0, w_max),
        action_interval: (0.0, w_max),
        reward: Arc::new(move |w, k| utility((w - k).max(0.0))),
        law: NextStateLaw::PointMasses(Arc::new(move |_, k| {
            vec![(ret * k + lo, 0.5), (ret * k + hi, 0.5)]
        })),
        admissible: Some(Arc::new(|w, k| k <= w)),
        beta: p.real("beta"),
        claimed_class: StructuralClass::ContinuousConcave,
    })
}

fn dynamic_pricing(p: &Params) -> Result<ContinuousModelSpec, ZooError> {
    let cap = p.real("capacity");
    let (pmin, pmax) = (p.real("price_min"), p.real("price_max"));
    if pmin >= pmax {
        return Err(p.reject("price_min", "must be below price_max"));
    }
    let scale = p.real("demand_scale");
    let sens = p.real("price_sensitivity");
    let restock = p.real("restock");
    // Demand beyond 4 * demand_scale + 20 has negligible mass for the allowed range.
    let support = (4.0 * scale).ceil() as usize + 20;
    let demand = move |price: f64| truncated_poisson(scale * (-price / sens).exp(), support);
    let reward = move |s: f64, price: f64| {
        let sold: f64 = demand(price)
            .iter()
            .enumerate()
            .map(|(d, q)| q * (d as f64).min(s))
            .sum();
        price * sold
    };
    Ok(ContinuousModelSpec {
        state_interval: (0.0, cap),
        action_interval: (pmin, pmax),
        reward: Arc::new(reward),
        law: NextStateLaw::PointMasses(Arc::new(move |s, price| {
            demand(price)
                .into_iter()
                .enumerate()
                .map(|(d, q)| ((s - (d as f64).min(s) + restock).min(cap), q))
                .collect()
        })),
        admissible: None,
        beta: p.real("beta"),
        claimed_class: StructuralClass::Continuous,
    })
}

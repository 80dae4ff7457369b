//! The `dynprog` command line.
//!
//! ```text
//! dynprog solve    --model m.json [--tol 1e-8]
//! dynprog evaluate --zoo queueing --param capacity=10 [--policy 0,1,...]
//! dynprog rollout  --model m.json --trajectories 10000 --seed 7
//! dynprog check    --zoo inventory [--trials 100]
//! dynprog oracle   --model m.json [--horizon H]
//! ```
//!
//! Exit codes: 0 success, 1 usage error (including unreadable files and bad
//! zoo parameters), 2 parse or validation failure, 3 non-convergence,
//! 4 a verifier found a violation.
//!
//! `--format structured` prints one JSON document; its schema is the
//! [`StructuredOutput`] type and [`parse_structured_output`] reads it back.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bellman::apply_t;
use crate::fixed_point::FixedPointError;
use crate::mdp::{FiniteMdp, MdpError, StationaryPolicy};
use crate::rollout::{simulate_policy, RolloutConfig, RolloutError, RolloutEstimate};
use crate::solver::{
    brute_force_oracle, evaluate_policy_exact, solve_with, SolveOptions, SolverError,
};
use crate::structure::{verify_class, ClassReport, GridModel, StructuralClass, StructureError};
use crate::zoo::{self, ZooError};

/// Rows per page in table output.
pub const TABLE_PAGE: usize = 50;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Value iteration; value, policy and convergence report.
    Solve,
    /// Exact value of a stationary policy.
    Evaluate,
    /// Monte Carlo estimate of a policy's value from one state.
    Rollout,
    /// Structural verifiers of the model's claimed class.
    Check,
    /// Value iteration against backward induction.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Structured,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "dynprog",
    version,
    about = "Discounted dynamic programming solver"
)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Model file (JSON).
    #[arg(long, conflicts_with = "zoo", required_unless_present = "zoo")]
    pub model: Option<PathBuf>,
    /// Built-in model name.
    #[arg(long)]
    pub zoo: Option<String>,
    /// Zoo parameter as key=value; repeatable.
    #[arg(long = "param", requires = "zoo")]
    pub params: Vec<String>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rollout or oracle horizon; defaults to the shortest with truncation bound <= tol.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trajectories: usize,
    /// Sampled functions per structural check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Comma-separated action per state for evaluate/rollout; defaults to the solved policy.
    #[arg(long)]
    pub policy: Option<String>,
    /// Start state for rollout.
    #[arg(long, default_value_t = 0)]
    pub initial_state: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] MdpError),
    #[error(transparent)]
    Zoo(#[from] ZooError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Rollout(#[from] RolloutError),
    #[error("structured output: {0}")]
    Output(#[from] serde_json::Error),
}

fn model_error_code(e: &MdpError) -> i32 {
    match e {
        MdpError::TooLargeToMaterialize { .. } => EXIT_USAGE,
        _ => EXIT_INVALID,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Model(e) => model_error_code(e),
            CliError::Zoo(ZooError::Model(e)) => model_error_code(e),
            CliError::Zoo(ZooError::Structure(_) | ZooError::Solver(_)) => EXIT_INVALID,
            CliError::Zoo(_) => EXIT_USAGE,
            CliError::Solver(SolverError::FixedPoint(FixedPointError::NonConvergence {
                ..
            })) => EXIT_NONCONVERGENCE,
            CliError::Solver(SolverError::Model(e)) => model_error_code(e),
            CliError::Solver(
                SolverError::TooLarge { .. }
                | SolverError::InvalidHorizon
                | SolverError::InvalidEpsilon(_),
            ) => EXIT_USAGE,
            CliError::Solver(SolverError::FixedPoint(_)) => EXIT_USAGE,
            CliError::Solver(_) => EXIT_INVALID,
            CliError::Structure(StructureError::Solver(SolverError::FixedPoint(
                FixedPointError::NonConvergence { .. },
            ))) => EXIT_NONCONVERGENCE,
            CliError::Structure(_) => EXIT_INVALID,
            CliError::Rollout(RolloutError::InvalidConfig(_)) => EXIT_USAGE,
            CliError::Rollout(RolloutError::Model(e)) => model_error_code(e),
            CliError::Rollout(_) => EXIT_INVALID,
            CliError::Output(_) => EXIT_INVALID,
        }
    }
}

/// Shape and provenance of the model a command ran on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub source: String,
    pub claimed_class: StructuralClass,
    pub n_states: usize,
    pub n_actions: usize,
    pub beta: f64,
    /// State coordinates of discretized models.
    pub state_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub final_residual: f64,
    /// `β/(1-β)` times the final residual: bound on the distance to `V`.
    pub a_posteriori_bound: f64,
    /// `‖Tv - v‖` at the returned `v`.
    pub bellman_residual: f64,
    /// Certified bound on `‖V - V_policy‖`.
    pub epsilon_certificate: f64,
    pub residual_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub model: ModelSummary,
    pub tol: f64,
    pub value: Vec<f64>,
    pub policy: Vec<usize>,
    /// `|Tv(s) - v(s)|` per state.
    pub state_residual: Vec<f64>,
    pub convergence: ConvergenceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOutput {
    pub model: ModelSummary,
    pub policy: Vec<usize>,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutOutput {
    pub model: ModelSummary,
    pub policy: Vec<usize>,
    pub initial_state: usize,
    pub seed: u64,
    pub estimate: RolloutEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutput {
    pub model: ModelSummary,
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub report: ClassReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub model: ModelSummary,
    pub tol: f64,
    pub horizon: usize,
    pub truncation_bound: f64,
    /// `tol + truncation_bound`: the largest difference consistent with both being correct.
    pub bound: f64,
    pub solve: Vec<f64>,
    pub oracle: Vec<f64>,
    pub max_difference: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum StructuredOutput {
    Solve(SolveOutput),
    Evaluate(EvaluateOutput),
    Rollout(RolloutOutput),
    Check(CheckOutput),
    Oracle(OracleOutput),
}

impl StructuredOutput {
    /// Whether a verifier in this output reported a violation.
    pub fn violation(&self) -> bool {
        match self {
            StructuredOutput::Check(c) => !c.passed,
            StructuredOutput::Oracle(o) => !o.agree,
            _ => false,
        }
    }
}

pub fn parse_structured_output(text: &str) -> Result<StructuredOutput, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn to_structured(output: &StructuredOutput) -> String {
    let mut s = serde_json::to_string_pretty(output).expect("outputs hold only finite numbers");
    s.push('\n');
    s
}

struct Loaded {
    summary: ModelSummary,
    grid: GridModel,
}

impl Loaded {
    fn mdp(&self) -> &FiniteMdp {
        &self.grid.mdp
    }
}

fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    let (source, grid, discretized) = match (&cfg.model, &cfg.zoo) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let mdp = FiniteMdp::from_json(&text)?;
            (
                path.display().to_string(),
                GridModel::from_finite(mdp, StructuralClass::Finite),
                false,
            )
        }
        (None, Some(name)) => {
            let named = zoo::build(name, &zoo::parse_params(&cfg.params)?)?;
            let mut source = format!("zoo:{name}");
            for p in &cfg.params {
                let _ = write!(source, " {p}");
            }
            let discretized = matches!(named.instance, zoo::ModelInstance::Continuous { .. });
            (source, named.grid_model()?, discretized)
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --model and --zoo is required".into(),
            ))
        }
    };
    let mdp = &grid.mdp;
    Ok(Loaded {
        summary: ModelSummary {
            source,
            claimed_class: grid.claimed_class,
            n_states: mdp.n_states(),
            n_actions: mdp.n_actions(),
            beta: mdp.beta(),
            state_grid: discretized.then(|| grid.state_grid.clone()),
        },
        grid,
    })
}

fn check_config(cfg: &RunConfig) -> Result<(), CliError> {
    if !(cfg.tol > 0.0 && cfg.tol.is_finite()) {
        return Err(CliError::Usage(format!(
            "--tol must be positive, got {}",
            cfg.tol
        )));
    }
    if cfg.horizon == Some(0) {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    if cfg.command == Command::Rollout && cfg.trajectories == 0 {
        return Err(CliError::Usage("--trajectories must be at least 1".into()));
    }
    if cfg.command == Command::Check && cfg.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if cfg.policy.is_some() && !matches!(cfg.command, Command::Evaluate | Command::Rollout) {
        return Err(CliError::Usage(
            "--policy applies to evaluate and rollout only".into(),
        ));
    }
    Ok(())
}

fn solve_opts(cfg: &RunConfig) -> SolveOptions {
    SolveOptions {
        tol: cfg.tol,
        ..SolveOptions::default()
    }
}

fn chosen_policy(cfg: &RunConfig, mdp: &FiniteMdp) -> Result<StationaryPolicy, CliError> {
    match &cfg.policy {
        Some(text) => {
            let actions = text
                .split(',')
                .map(|a| a.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| {
                    CliError::Usage(format!(
                        "--policy `{text}` is not a comma-separated action list"
                    ))
                })?;
            Ok(StationaryPolicy::new(mdp, actions)?)
        }
        None => Ok(solve_with(mdp, solve_opts(cfg))?.policy),
    }
}

/// Runs one command. A verifier-detected violation is reported through
/// [`StructuredOutput::violation`], not as an error.
pub fn run(cfg: &RunConfig) -> Result<StructuredOutput, CliError> {
    check_config(cfg)?;
    let loaded = load(cfg)?;
    let mdp = loaded.mdp();
    let output = match cfg.command {
        Command::Solve => {
            let r = solve_with(mdp, solve_opts(cfg))?;
            let tv = apply_t(mdp, &r.value)?;
            let state_residual = tv
                .iter()
                .zip(r.value.iter())
                .map(|(a, b)| (a - b).abs())
                .collect();
            StructuredOutput::Solve(SolveOutput {
                tol: cfg.tol,
                value: r.value.into_vec(),
                policy: r.policy.actions().to_vec(),
                state_residual,
                convergence: ConvergenceReport {
                    iterations: r.trace.iterations(),
                    final_residual: r.trace.last_residual().unwrap_or(0.0),
                    a_posteriori_bound: r.trace.a_posteriori_bound(),
                    bellman_residual: r.bellman_residual,
                    epsilon_certificate: r.epsilon_certificate,
                    residual_trace: r.trace.residuals().to_vec(),
                },
                model: loaded.summary,
            })
        }
        Command::Evaluate => {
            let policy = chosen_policy(cfg, mdp)?;
            let value = evaluate_policy_exact(mdp, &policy)?;
            StructuredOutput::Evaluate(EvaluateOutput {
                policy: policy.actions().to_vec(),
                value: value.into_vec(),
                model: loaded.summary,
            })
        }
        Command::Rollout => {
            let policy = chosen_policy(cfg, mdp)?;
            let mut rc = RolloutConfig::with_bias_budget(
                mdp,
                cfg.tol,
                cfg.trajectories,
                cfg.seed,
                cfg.initial_state,
            );
            if let Some(h) = cfg.horizon {
                rc.horizon = h;
            }
            let estimate = simulate_policy(mdp, &policy, &rc)?;
            StructuredOutput::Rollout(RolloutOutput {
                policy: policy.actions().to_vec(),
                initial_state: cfg.initial_state,
                seed: cfg.seed,
                estimate,
                model: loaded.summary,
            })
        }
        Command::Check => {
            let report = verify_class(
                &loaded.grid,
                loaded.grid.claimed_class,
                cfg.trials,
                cfg.seed,
            )?;
            StructuredOutput::Check(CheckOutput {
                seed: cfg.seed,
                trials: cfg.trials,
                passed: report.passed(),
                report,
                model: loaded.summary,
            })
        }
        Command::Oracle => {
            let horizon = cfg
                .horizon
                .unwrap_or_else(|| mdp.horizon_for_budget(cfg.tol).max(1));
            let oracle = brute_force_oracle(mdp, horizon)?;
            let solved = solve_with(mdp, solve_opts(cfg))?;
            let truncation_bound = mdp.truncation_bound(horizon);
            let bound = cfg.tol + truncation_bound;
            let max_difference = solved.value.distance(&oracle)?;
            StructuredOutput::Oracle(OracleOutput {
                tol: cfg.tol,
                horizon,
                truncation_bound,
                bound,
                solve: solved.value.into_vec(),
                oracle: oracle.into_vec(),
                max_difference,
                agree: max_difference <= bound,
                model: loaded.summary,
            })
        }
    };
    Ok(output)
}

fn header(out: &mut String, model: &ModelSummary) {
    let _ = writeln!(
        out,
        "model {} ({}), {} states x {} actions, beta = {}",
        model.source, model.claimed_class, model.n_states, model.n_actions, model.beta
    );
}

/// Table with a header line repeated every [`TABLE_PAGE`] rows.
fn paged_table(out: &mut String, columns: &[&str], rows: Vec<Vec<String>>) {
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            rows.iter()
                .map(|r| r[i].len())
                .chain([c.len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |out: &mut String, cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    let head: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
    for (i, row) in rows.iter().enumerate() {
        if i % TABLE_PAGE == 0 {
            if i > 0 {
                out.push('\n');
            }
            line(out, &head);
        }
        line(out, row);
    }
}

fn state_cells(model: &ModelSummary, s: usize) -> Vec<String> {
    let mut cells = vec![s.to_string()];
    if let Some(grid) = &model.state_grid {
        cells.push(format!("{:.6}", grid[s]));
    }
    cells
}

fn state_columns<'a>(model: &ModelSummary, rest: &[&'a str]) -> Vec<&'a str> {
    let mut cols = vec!["state"];
    if model.state_grid.is_some() {
        cols.push("x");
    }
    cols.extend_from_slice(rest);
    cols
}

pub fn render_table(output: &StructuredOutput) -> String {
    let mut out = String::new();
    match output {
        StructuredOutput::Solve(o) => {
            header(&mut out, &o.model);
            let rows = (0..o.value.len())
                .map(|s| {
                    let mut r = state_cells(&o.model, s);
                    r.push(format!("{:.10}", o.value[s]));
                    r.push(o.policy[s].to_string());
                    r.push(format!("{:.3e}", o.state_residual[s]));
                    r
                })
                .collect();
            paged_table(
                &mut out,
                &state_columns(&o.model, &["value", "action", "residual"]),
                rows,
            );
            let c = &o.convergence;
            let _ = writeln!(
                out,
                "\niterations {}; final residual {:.3e}; a posteriori bound {:.3e} (tol {:e})",
                c.iterations, c.final_residual, c.a_posteriori_bound, o.tol
            );
            let _ = writeln!(
                out,
                "bellman residual {:.3e}; certified policy gap {:.3e}",
                c.bellman_residual, c.epsilon_certificate
            );
            let tail: Vec<String> = c
                .residual_trace
                .iter()
                .rev()
                .take(5)
                .rev()
                .map(|r| format!("{r:.3e}"))
                .collect();
            let _ = writeln!(out, "last residuals: {}", tail.join(" "));
        }
        StructuredOutput::Evaluate(o) => {
            header(&mut out, &o.model);
            let rows = (0..o.value.len())
                .map(|s| {
                    let mut r = state_cells(&o.model, s);
                    r.push(o.policy[s].to_string());
                    r.push(format!("{:.10}", o.value[s]));
                    r
                })
                .collect();
            paged_table(
                &mut out,
                &state_columns(&o.model, &["action", "value"]),
                rows,
            );
        }
        StructuredOutput::Rollout(o) => {
            header(&mut out, &o.model);
            let e = &o.estimate;
            let _ = writeln!(
                out,
                "state {}: {:.6} +/- {:.6} (standard error) +/- {:.3e} (truncation bias bound)",
                o.initial_state, e.mean, e.standard_error, e.truncation_bias_bound
            );
            let _ = writeln!(
                out,
                "{} trajectories, horizon {}, seed {}",
                e.n_trajectories, e.horizon, o.seed
            );
        }
        StructuredOutput::Check(o) => {
            header(&mut out, &o.model);
            let _ = writeln!(
                out,
                "class {}: {} ({} trials, seed {})",
                o.report.class,
                if o.passed { "PASS" } else { "FAIL" },
                o.trials,
                o.seed
            );
            for check in &o.report.checks {
                match check {
                    crate::structure::CheckOutcome::Sampled(r) => {
                        let _ = writeln!(
                            out,
                            "  {:?}: {}/{} trials pass, worst violation {:.3e} (tolerance {:.3e}){}",
                            r.verifier,
                            r.passed_trials,
                            r.trials,
                            r.worst_violation,
                            r.tolerance,
                            r.witness
                                .as_ref()
                                .map(|w| format!(", witness violates at state {}", w.location))
                                .unwrap_or_default()
                        );
                    }
                    crate::structure::CheckOutcome::Selection(r) => {
                        let _ = writeln!(out, "  MonotoneSelection: {}", selection_summary(r));
                    }
                }
            }
            for note in &o.report.notes {
                let _ = writeln!(out, "  note: {note}");
            }
        }
        StructuredOutput::Oracle(o) => {
            header(&mut out, &o.model);
            let rows = (0..o.solve.len())
                .map(|s| {
                    let mut r = state_cells(&o.model, s);
                    r.push(format!("{:.10}", o.solve[s]));
                    r.push(format!("{:.10}", o.oracle[s]));
                    r.push(format!("{:.3e}", (o.solve[s] - o.oracle[s]).abs()));
                    r
                })
                .collect();
            paged_table(
                &mut out,
                &state_columns(&o.model, &["solve", "oracle", "difference"]),
                rows,
            );
            let _ = writeln!(
                out,
                "\nmax difference {:.3e} {} bound {:.3e} (tol {:e} + truncation {:.3e} at horizon {}): {}",
                o.max_difference,
                if o.agree { "<=" } else { ">" },
                o.bound,
                o.tol,
                o.truncation_bound,
                o.horizon,
                if o.agree { "agree" } else { "DISAGREE" }
            );
        }
    }
    out
}

fn selection_summary(r: &crate::structure::SelectionReport) -> String {
    use crate::structure::SelectionReport::*;
    match r {
        Monotone { .. } => "greedy policy is nondecreasing".into(),
        MonotoneSelectionExists { first_drop, .. } => format!(
            "greedy policy drops at state {first_drop}, but a nondecreasing maximizing selection exists"
        ),
        NoMonotoneSelection { state } => format!("no nondecreasing maximizing selection (fails at state {state})"),
    }
}

pub fn render(output: &StructuredOutput, format: Format) -> String {
    match format {
        Format::Table => render_table(output),
        Format::Structured => to_structured(output),
    }
}

/// Parses `args` (including the program name), runs, writes output, and
/// returns the exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs `cfg` and writes its rendered output; returns 0 or [`EXIT_VIOLATION`].
pub fn execute(cfg: &RunConfig) -> Result<i32, CliError> {
    let output = run(cfg)?;
    let text = render(&output, cfg.format);
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => print!("{text}"),
    }
    if output.violation() {
        eprintln!("error: {} reported a violation", cli_name(cfg.command));
        return Ok(EXIT_VIOLATION);
    }
    Ok(EXIT_OK)
}

fn cli_name(c: Command) -> &'static str {
    match c {
        Command::Solve => "solve",
        Command::Evaluate => "evaluate",
        Command::Rollout => "rollout",
        Command::Check => "check",
        Command::Oracle => "oracle",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("dynprog").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn parses_defaults() {
        let c = cfg(&["solve", "--zoo", "queueing"]);
        assert_eq!(c.tol, 1e-8);
        assert_eq!(c.seed, 0);
        assert_eq!(c.format, Format::Table);
        assert!(c.out.is_none());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_with_args(["dynprog", "solve"]), EXIT_USAGE);
        assert_eq!(
            main_with_args(["dynprog", "solve", "--zoo", "queueing", "--model", "x.json"]),
            EXIT_USAGE
        );
        assert_eq!(
            main_with_args(["dynprog", "frobnicate", "--zoo", "queueing"]),
            EXIT_USAGE
        );
        assert_eq!(
            main_with_args(["dynprog", "solve", "--param", "a=1", "--model", "m"]),
            EXIT_USAGE
        );
        assert_eq!(
            main_with_args(["dynprog", "solve", "--zoo", "nope"]),
            EXIT_USAGE
        );
        assert_eq!(
            main_with_args(["dynprog", "solve", "--zoo", "queueing", "--tol=-1"]),
            EXIT_USAGE
        );
        assert_eq!(
            main_with_args(["dynprog", "solve", "--model", "/definitely/not/here.json"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn oracle_on_large_model_is_usage_error() {
        let e = run(&cfg(&[
            "oracle",
            "--zoo",
            "queueing",
            "--param",
            "capacity=40",
        ]))
        .unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn oracle_on_machine_replacement_agrees() {
        let out = run(&cfg(&["oracle", "--zoo", "machine_replacement"])).unwrap();
        let StructuredOutput::Oracle(o) = &out else {
            panic!()
        };
        assert!(o.agree);
        assert!(!out.violation());
        assert!(render_table(&out).contains("agree"));
    }

    #[test]
    fn table_paginates() {
        let out = run(&cfg(&[
            "evaluate",
            "--zoo",
            "queueing",
            "--param",
            "capacity=120",
        ]))
        .unwrap();
        let text = render_table(&out);
        assert_eq!(
            text.lines()
                .filter(|l| l.trim_start().starts_with("state"))
                .count(),
            3
        );
    }

    #[test]
    fn policy_flag_is_checked() {
        let e = run(&cfg(&[
            "evaluate",
            "--zoo",
            "machine_replacement",
            "--policy",
            "0,1",
        ]))
        .unwrap_err();
        assert_eq!(e.exit_code(), EXIT_INVALID);
        let e = run(&cfg(&[
            "evaluate",
            "--zoo",
            "machine_replacement",
            "--policy",
            "a,b",
        ]))
        .unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
        let out = run(&cfg(&[
            "evaluate",
            "--zoo",
            "machine_replacement",
            "--policy",
            "1,1,1,1",
        ]))
        .unwrap();
        let StructuredOutput::Evaluate(o) = out else {
            panic!()
        };
        // Always replacing: V = -replace_cost / (1 - β) = -40 everywhere.
        for v in o.value {
            assert!((v + 40.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn non_convergence_exits_three() {
        let slow = FiniteMdp::builder(1, 1, 0.999_999)
            .choice(0, 0, 1.0, [(0, 1.0)])
            .build()
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slow.json");
        std::fs::write(&path, slow.to_json()).unwrap();
        let path = path.to_str().unwrap();
        let e = run(&cfg(&["solve", "--model", path])).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_NONCONVERGENCE, "{e}");
        assert_eq!(
            main_with_args(["dynprog", "solve", "--model", path]),
            EXIT_NONCONVERGENCE
        );
    }
}

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::config::{ConfigError, CostRule, Scenario};
use super::fmt_float;
use crate::cost::{CostModel, CostModelError};
use crate::deadline::{plan_deadlines, DeadlineError, DeadlineMode, DeadlinePlan};
use crate::engine::{run_batch, BatchConfig, BatchSummary, EngineError, TrialSetup};
use crate::numerics::rng_stream;
use crate::observation::{generate_benchmark_instance, ObservationError, ObservationModel};
use crate::policies::{prepare_policy, PolicyConfig, PolicyError, PolicyKind};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("drawing cost models: {0}")]
    Cost(#[from] CostModelError),
    #[error("planning the {arm} arm: {source}")]
    Deadline { arm: DeadlineMode, source: DeadlineError },
    #[error("building the instance: {0}")]
    Observation(#[from] ObservationError),
    #[error("{policy} at delta {delta}, {arm} arm: {source}")]
    Policy { policy: PolicyKind, delta: f64, arm: DeadlineMode, source: PolicyError },
    #[error("{policy} at delta {delta}, {arm} arm: {source}")]
    Engine { policy: PolicyKind, delta: f64, arm: DeadlineMode, source: EngineError },
    #[error("writing {path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Column order of `results.csv`.
pub const RESULT_COLUMNS: [&str; 12] = [
    "policy",
    "cost_family",
    "deadline_mode",
    "delta",
    "trials",
    "avg_total_cost",
    "stderr",
    "empirical_error",
    "avg_N",
    "avg_N_eff",
    "avg_N_cancel",
    "censored_count",
];

/// One `(policy, δ, arm)` cell. The counter averages are summed over actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub policy: PolicyKind,
    pub cost_family: String,
    pub deadline_mode: DeadlineMode,
    pub delta: f64,
    pub trials: u64,
    pub avg_total_cost: f64,
    pub stderr: f64,
    pub empirical_error: f64,
    pub avg_n: f64,
    pub avg_n_eff: f64,
    pub avg_n_cancel: f64,
    pub censored_count: u64,
}

impl ResultRow {
    fn from_summary(policy: PolicyKind, family: &str, arm: DeadlineMode, delta: f64, s: &BatchSummary) -> Self {
        ResultRow {
            policy,
            cost_family: family.to_string(),
            deadline_mode: arm,
            delta,
            trials: s.trials,
            avg_total_cost: s.avg_total_cost,
            stderr: s.stderr,
            empirical_error: s.empirical_error,
            avg_n: s.mean_n.iter().sum(),
            avg_n_eff: s.mean_n_eff.iter().sum(),
            avg_n_cancel: s.mean_n_cancel.iter().sum(),
            censored_count: s.censored_count,
        }
    }

    fn fields(&self) -> [String; 12] {
        [
            self.policy.to_string(),
            self.cost_family.clone(),
            self.deadline_mode.to_string(),
            fmt_float(self.delta),
            self.trials.to_string(),
            fmt_float(self.avg_total_cost),
            fmt_float(self.stderr),
            fmt_float(self.empirical_error),
            fmt_float(self.avg_n),
            fmt_float(self.avg_n_eff),
            fmt_float(self.avg_n_cancel),
            self.censored_count.to_string(),
        ]
    }
}

/// Everything a scenario run produced.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub costs: Vec<CostModel>,
    pub instance: ObservationModel,
    /// The plan of each arm, `none` first. Only one arm when the scenario
    /// itself asks for no deadlines.
    pub arms: Vec<DeadlinePlan>,
    /// Ordered by policy, then δ, then arm.
    pub rows: Vec<ResultRow>,
}

/// Draw the per-action cost models from `cost.seed`. Pareto draws `x_min`
/// before `α` for each action.
pub fn draw_cost_models(scenario: &Scenario) -> Result<Vec<CostModel>, CostModelError> {
    let mut stream = rng_stream(scenario.cost_seed, 0);
    let mut uniform = |(lo, hi): (f64, f64)| lo + (hi - lo) * stream.uniform_open();
    match &scenario.cost_rule {
        CostRule::LogLogisticEqual { alpha } => (0..scenario.actions)
            .map(|_| {
                let a = uniform(*alpha);
                CostModel::log_logistic(a, a)
            })
            .collect(),
        CostRule::ParetoUniform { x_min, alpha } => (0..scenario.actions)
            .map(|_| {
                let x = uniform(*x_min);
                CostModel::pareto(x, uniform(*alpha))
            })
            .collect(),
        CostRule::Explicit(models) => Ok(models.clone()),
    }
}

/// The observation instance of `instance_seed`.
pub fn draw_instance(scenario: &Scenario) -> Result<ObservationModel, ObservationError> {
    generate_benchmark_instance(scenario.hypotheses, scenario.actions, &mut rng_stream(scenario.instance_seed, 0))
}

fn worker_threads(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map_or(1, usize::from)
    }
}

/// Run every `(policy, δ, arm)` cell. Both arms of a cell use the same trial
/// seed, so they see the same true hypotheses.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioReport, ScenarioError> {
    scenario.validate()?;
    let costs = draw_cost_models(scenario)?;
    let instance = draw_instance(scenario)?;
    let mut arm_modes = vec![DeadlineMode::None];
    if scenario.deadline != DeadlineMode::None {
        arm_modes.push(scenario.deadline);
    }
    let arms = arm_modes
        .iter()
        .map(|&mode| {
            let fixed = (mode == DeadlineMode::Fixed).then_some(scenario.fixed_deadlines.as_deref()).flatten();
            plan_deadlines(&costs, mode, fixed).map_err(|source| ScenarioError::Deadline { arm: mode, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let family = scenario.cost_rule.family_label();
    let batch = BatchConfig {
        trials: scenario.trials,
        seed: scenario.seed,
        parallelism: worker_threads(scenario.parallelism),
        truth: scenario.truth,
    };

    let mut rows = Vec::new();
    for &policy in &scenario.policies {
        for &delta in &scenario.deltas {
            for plan in &arms {
                let arm = plan.mode;
                let config = PolicyConfig {
                    kind: policy,
                    delta,
                    rho_tilde: scenario.rho_tilde,
                    effective_costs: plan.effective_costs.clone(),
                    game_tol: scenario.game_tol,
                };
                let prepared = prepare_policy(&instance, &config).map_err(|source| ScenarioError::Policy {
                    policy,
                    delta,
                    arm,
                    source,
                })?;
                let setup = TrialSetup {
                    policy: &prepared,
                    model: &instance,
                    costs: &costs,
                    plan,
                    timing: scenario.timing,
                    max_steps: scenario.max_steps,
                };
                let summary =
                    run_batch(&setup, &batch).map_err(|source| ScenarioError::Engine { policy, delta, arm, source })?;
                rows.push(ResultRow::from_summary(policy, &family, arm, delta, &summary));
            }
        }
    }
    Ok(ScenarioReport { scenario: scenario.clone(), costs, instance, arms, rows })
}

impl ScenarioReport {
    /// `results.csv`: a header line, then one line per row.
    pub fn results_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(RESULT_COLUMNS).expect("in-memory CSV");
        for row in &self.rows {
            w.write_record(row.fields()).expect("in-memory CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
    }

    /// The scenario in loadable form, followed by the drawn cost models and
    /// the deadlines of each arm as comments.
    pub fn manifest(&self) -> String {
        let mut out = String::from("# replay with: casht simulate --config <this file>\n");
        out.push_str(&self.scenario.to_config());
        out.push_str("\n# drawn from cost.seed\n");
        for (a, model) in self.costs.iter().enumerate() {
            let params: Vec<String> = model.params().iter().map(|p| fmt_float(*p)).collect();
            writeln!(out, "# cost[{a}] = {}({})", model.family_name(), params.join(", ")).expect("String");
        }
        for plan in &self.arms {
            writeln!(out, "# arm {}", plan.mode).expect("String");
            for (a, (t, k)) in plan.deadlines.iter().zip(&plan.effective_costs).enumerate() {
                writeln!(out, "#   action {a}: deadline {}, kappa {}", fmt_float(*t), fmt_float(*k)).expect("String");
            }
        }
        writeln!(out, "# observation means: instance.csv (hypotheses x actions)").expect("String");
        out
    }

    pub fn instance_csv(&self) -> String {
        let mut buf = Vec::new();
        self.instance.write_csv(&mut buf).expect("in-memory CSV");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    /// Write `results.csv`, `manifest.txt` and `instance.csv` into `dir`,
    /// creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<(), ScenarioError> {
        let io_err = |path: &Path| {
            let path = path.display().to_string();
            move |source| ScenarioError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (name, body) in [
            ("results.csv", self.results_csv()),
            ("manifest.txt", self.manifest()),
            ("instance.csv", self.instance_csv()),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(io_err(&path))?;
        }
        Ok(())
    }

    /// Rows of one policy and arm, in δ order.
    pub fn series(&self, policy: PolicyKind, arm: DeadlineMode) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.policy == policy && r.deadline_mode == arm).collect()
    }
}

/// Least-squares line through `(x, y)` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit `y = slope·x + intercept`. `r_squared` is 1 when `y` is constant.
pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    LinearFit { slope, intercept: my - slope * mx, r_squared }
}

/// Fit average total cost against `ln(1/δ)` for a series of rows.
pub fn log_delta_fit(rows: &[&ResultRow]) -> LinearFit {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| ((1.0 / r.delta).ln(), r.avg_total_cost)).collect();
    linear_fit(&points)
}

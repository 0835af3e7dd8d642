//! Trial and batch execution.
//!
//! Each step of a trial asks the policy for an action, draws its random cost
//! and, depending on the [`Timing`], either delivers a sample or aborts at the
//! deadline. Under [`Timing::ExAnte`] an action whose cost exceeds its
//! deadline `T_a` is cancelled: it costs `T_a` and yields no sample. Under
//! [`Timing::ExPost`] the cost is only known once the sample has arrived, so
//! deadlines have no effect and the full cost is always paid.
//!
//! Batches are reproducible: trial `t` runs on `rng_stream(seed, t)`, and the
//! summary is reduced in trial order, so the result does not depend on the
//! degree of parallelism.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cost::CostModel;
use crate::deadline::DeadlinePlan;
use crate::numerics::{rng_stream, RandomStream};
use crate::observation::ObservationModel;
use crate::policies::{Observation, PolicyError, PreparedPolicy};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

const ACTION_STREAM: u64 = 0;
const COST_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid plan: action {action} has deadline {deadline} with no cost mass below it")]
    InvalidPlan { action: usize, deadline: f64 },
    #[error("{what}: expected {expected} entries (one per action), got {got}")]
    ActionCount { what: &'static str, expected: usize, got: usize },
    #[error("true hypothesis {0} out of range")]
    Hypothesis(usize),
    #[error("batch needs at least one trial")]
    NoTrials,
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    /// Cost revealed before the sample; actions past their deadline abort.
    ExAnte,
    /// Cost revealed with the sample; nothing can be aborted.
    ExPost,
}

impl fmt::Display for Timing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Timing::ExAnte => "ex_ante",
            Timing::ExPost => "ex_post",
        })
    }
}

impl FromStr for Timing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ex_ante" | "ex-ante" => Ok(Timing::ExAnte),
            "ex_post" | "ex-post" => Ok(Timing::ExPost),
            other => Err(format!("unknown timing {other:?} (expected ex_ante or ex_post)")),
        }
    }
}

/// Everything a trial needs besides its randomness and true hypothesis.
#[derive(Debug, Clone, Copy)]
pub struct TrialSetup<'a> {
    pub policy: &'a PreparedPolicy,
    pub model: &'a ObservationModel,
    pub costs: &'a [CostModel],
    pub plan: &'a DeadlinePlan,
    pub timing: Timing,
    pub max_steps: u64,
}

impl TrialSetup<'_> {
    fn validate(&self) -> Result<(), EngineError> {
        let n = self.model.actions();
        for (what, got) in [("cost models", self.costs.len()), ("deadlines", self.plan.deadlines.len())] {
            if got != n {
                return Err(EngineError::ActionCount { what, expected: n, got });
            }
        }
        if self.timing == Timing::ExAnte {
            for (action, (&t, c)) in self.plan.deadlines.iter().zip(self.costs).enumerate() {
                if !(c.cdf(t) > 0.0) {
                    return Err(EngineError::InvalidPlan { action, deadline: t });
                }
            }
        }
        Ok(())
    }
}

/// Outcome and counters of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub true_hypothesis: usize,
    /// `None` when the step guard stopped the trial.
    pub declared: Option<usize>,
    pub total_cost: f64,
    /// Times each action was started.
    pub n: Vec<u64>,
    /// Times each action delivered a sample.
    pub n_eff: Vec<u64>,
    /// Times each action was aborted at its deadline.
    pub n_cancel: Vec<u64>,
    pub steps: u64,
    pub correct: bool,
    pub censored: bool,
}

/// One step of a trial, for auditing cost accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrace {
    pub action: usize,
    pub drawn_cost: f64,
    pub charged: f64,
    pub cancelled: bool,
}

/// Run a single trial.
pub fn run_trial(
    setup: &TrialSetup<'_>,
    true_hypothesis: usize,
    stream: &mut RandomStream,
) -> Result<TrialRecord, EngineError> {
    setup.validate()?;
    run_validated(setup, true_hypothesis, stream, None)
}

/// [`run_trial`], also returning every step's action and cost.
pub fn run_trial_traced(
    setup: &TrialSetup<'_>,
    true_hypothesis: usize,
    stream: &mut RandomStream,
) -> Result<(TrialRecord, Vec<StepTrace>), EngineError> {
    setup.validate()?;
    let mut trace = Vec::new();
    let record = run_validated(setup, true_hypothesis, stream, Some(&mut trace))?;
    Ok((record, trace))
}

/// Substreams of a trial stream: action draws, costs, samples.
pub fn trial_substreams(stream: &mut RandomStream) -> [RandomStream; 3] {
    [stream.fork(ACTION_STREAM), stream.fork(COST_STREAM), stream.fork(SAMPLE_STREAM)]
}

fn run_validated(
    setup: &TrialSetup<'_>,
    truth: usize,
    stream: &mut RandomStream,
    mut trace: Option<&mut Vec<StepTrace>>,
) -> Result<TrialRecord, EngineError> {
    let model = setup.model;
    if truth >= model.hypotheses() {
        return Err(EngineError::Hypothesis(truth));
    }
    let [mut action_rng, mut cost_rng, mut sample_rng] = trial_substreams(stream);
    let n_actions = model.actions();
    let mut record = TrialRecord {
        true_hypothesis: truth,
        declared: None,
        total_cost: 0.0,
        n: vec![0; n_actions],
        n_eff: vec![0; n_actions],
        n_cancel: vec![0; n_actions],
        steps: 0,
        correct: false,
        censored: false,
    };
    let mut run = setup.policy.start(model)?;
    loop {
        if let Some(d) = run.decision() {
            record.declared = Some(d);
            record.correct = d == truth;
            break;
        }
        if record.steps >= setup.max_steps {
            record.censored = true;
            break;
        }
        let a = run.next_action(&mut action_rng);
        let cost = setup.costs[a].sample(&mut cost_rng);
        let deadline = setup.plan.deadlines[a];
        record.steps += 1;
        record.n[a] += 1;
        let cancelled = setup.timing == Timing::ExAnte && cost > deadline;
        let charged = if cancelled { deadline } else { cost };
        record.total_cost += charged;
        let obs = if cancelled {
            record.n_cancel[a] += 1;
            Observation::Abstain
        } else {
            record.n_eff[a] += 1;
            Observation::Sample(model.sample(truth, a, &mut sample_rng))
        };
        if let Some(t) = trace.as_deref_mut() {
            t.push(StepTrace { action: a, drawn_cost: cost, charged, cancelled });
        }
        run.observe(model, a, obs)?;
    }
    Ok(record)
}

/// How the true hypothesis of each trial is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthRule {
    /// Drawn uniformly from the trial's own stream.
    Uniform,
    /// Trial `t` uses hypothesis `t mod H`.
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchConfig {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; 1 runs on the calling thread.
    pub parallelism: usize,
    pub truth: TruthRule,
}

/// Aggregates over a batch. Costs, errors and counters are averaged over the
/// trials that finished; censored trials are only counted.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub trials: u64,
    pub completed: u64,
    pub censored_count: u64,
    pub avg_total_cost: f64,
    pub stderr: f64,
    pub empirical_error: f64,
    pub avg_steps: f64,
    pub mean_n: Vec<f64>,
    pub mean_n_eff: Vec<f64>,
    pub mean_n_cancel: Vec<f64>,
    /// `mean N_a / (mean N_eff_a / F(T_a))`, where some sample was delivered.
    pub wald_ratio: Vec<Option<f64>>,
}

/// Run `config.trials` independent trials and summarise them.
pub fn run_batch(setup: &TrialSetup<'_>, config: &BatchConfig) -> Result<BatchSummary, EngineError> {
    let records = run_batch_records(setup, config)?;
    Ok(summarize(&records, setup))
}

/// The individual records of a batch, in trial order.
pub fn run_batch_records(setup: &TrialSetup<'_>, config: &BatchConfig) -> Result<Vec<TrialRecord>, EngineError> {
    if config.trials == 0 {
        return Err(EngineError::NoTrials);
    }
    setup.validate()?;
    let h = setup.model.hypotheses();
    let one = |t: u64| {
        let mut stream = rng_stream(config.seed, t);
        let truth = match config.truth {
            TruthRule::Uniform => stream.random_range(0..h),
            TruthRule::Sweep => (t % h as u64) as usize,
        };
        run_validated(setup, truth, &mut stream, None)
    };
    if config.parallelism <= 1 {
        return (0..config.trials).map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.parallelism).build()?;
    pool.install(|| (0..config.trials).into_par_iter().map(one).collect())
}

/// Fixed-order reduction of trial records.
pub fn summarize(records: &[TrialRecord], setup: &TrialSetup<'_>) -> BatchSummary {
    let n_actions = setup.model.actions();
    let done: Vec<&TrialRecord> = records.iter().filter(|r| !r.censored).collect();
    let completed = done.len() as u64;
    let m = completed.max(1) as f64;
    let avg = done.iter().map(|r| r.total_cost).sum::<f64>() / m;
    let var =
        if completed > 1 { done.iter().map(|r| (r.total_cost - avg).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    let mean_of = |pick: fn(&TrialRecord) -> &Vec<u64>| -> Vec<f64> {
        (0..n_actions).map(|a| done.iter().map(|r| pick(r)[a] as f64).sum::<f64>() / m).collect()
    };
    let mean_n = mean_of(|r| &r.n);
    let mean_n_eff = mean_of(|r| &r.n_eff);
    let mean_n_cancel = mean_of(|r| &r.n_cancel);
    let wald_ratio = (0..n_actions)
        .map(|a| {
            (mean_n_eff[a] > 0.0).then(|| {
                let f = effective_cdf(setup, a);
                mean_n[a] / (mean_n_eff[a] / f)
            })
        })
        .collect();
    BatchSummary {
        trials: records.len() as u64,
        completed,
        censored_count: records.len() as u64 - completed,
        avg_total_cost: if completed > 0 { avg } else { f64::NAN },
        stderr: (var / m).sqrt(),
        empirical_error: done.iter().filter(|r| !r.correct).count() as f64 / m,
        avg_steps: done.iter().map(|r| r.steps as f64).sum::<f64>() / m,
        mean_n,
        mean_n_eff,
        mean_n_cancel,
        wald_ratio,
    }
}

/// Probability that action `a` delivers, `F(T_a)`; 1 when nothing can abort.
fn effective_cdf(setup: &TrialSetup<'_>, a: usize) -> f64 {
    match setup.timing {
        Timing::ExPost => 1.0,
        Timing::ExAnte => setup.costs[a].cdf(setup.plan.deadlines[a]),
    }
}

/// Predicted versus observed counters for one action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldCheck {
    pub action: usize,
    pub success_probability: f64,
    pub mean_n_eff: f64,
    pub mean_n: f64,
    pub predicted_n: f64,
    pub mean_n_cancel: f64,
    pub predicted_n_cancel: f64,
    /// `|observed − predicted| / predicted`, 0 when both vanish.
    pub rel_dev_n: f64,
    pub rel_dev_cancel: f64,
}

fn rel_dev(observed: f64, predicted: f64) -> f64 {
    if predicted == 0.0 {
        if observed == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (observed - predicted).abs() / predicted
    }
}

/// Compare each action's counters with `E[N_a] = E[N_eff_a]/F(T_a)` and
/// `E[N_cancel_a] = E[N_eff_a]·(1/F(T_a) − 1)`. Actions never sampled are
/// skipped.
pub fn wald_consistency(summary: &BatchSummary, plan: &DeadlinePlan, costs: &[CostModel]) -> Vec<WaldCheck> {
    (0..costs.len())
        .filter(|&a| summary.mean_n_eff[a] > 0.0)
        .map(|a| {
            let f = costs[a].cdf(plan.deadlines[a]);
            let eff = summary.mean_n_eff[a];
            let predicted_n = eff / f;
            let predicted_n_cancel = if f == 1.0 { 0.0 } else { eff * (1.0 / f - 1.0) };
            WaldCheck {
                action: a,
                success_probability: f,
                mean_n_eff: eff,
                mean_n: summary.mean_n[a],
                predicted_n,
                mean_n_cancel: summary.mean_n_cancel[a],
                predicted_n_cancel,
                rel_dev_n: rel_dev(summary.mean_n[a], predicted_n),
                rel_dev_cancel: rel_dev(summary.mean_n_cancel[a], predicted_n_cancel),
            }
        })
        .collect()
}

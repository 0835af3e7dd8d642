//! Flat `key = value` scenario files.
//!
//! ```text
//! # Log-Logistic costs at desk scale
//! name = loglogistic
//! hypotheses = 8
//! actions = 4
//! policies = ca_chernoff, ca_nj1, ca_phidelta
//! deltas = 0.1, 0.01, 0.001, 0.0001
//! cost.rule = loglogistic_equal
//! cost.alpha_range = 1, 2
//! deadline = median
//! ```
//!
//! `#` starts a comment, dotted keys group related settings and unknown keys
//! are rejected. Every key except `cost.rule` has a default; see
//! [`Scenario::default`].

use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::cost::CostModel;
use crate::deadline::DeadlineMode;
use crate::engine::{Timing, TruthRule, DEFAULT_MAX_STEPS};
use crate::policies::{PolicyConfig, PolicyKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    Duplicate { line: usize, key: String },
    #[error("{key}: {message}")]
    Invalid { key: &'static str, message: String },
}

/// How per-action cost distributions are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum CostRule {
    /// `LogLogistic(α_a, α_a)` with `α_a ~ Unif[lo, hi]`.
    LogLogisticEqual { alpha: (f64, f64) },
    /// `Pareto(x_min_a, α_a)` with both drawn uniformly from their ranges.
    ParetoUniform { x_min: (f64, f64), alpha: (f64, f64) },
    /// One model per action.
    Explicit(Vec<CostModel>),
}

impl CostRule {
    pub fn family_label(&self) -> String {
        match self {
            CostRule::LogLogisticEqual { .. } => "loglogistic".into(),
            CostRule::ParetoUniform { .. } => "pareto".into(),
            CostRule::Explicit(models) => {
                let first = models.first().map_or("none", CostModel::family_name);
                if models.iter().all(|m| m.family_name() == first) {
                    first.into()
                } else {
                    "mixed".into()
                }
            }
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub hypotheses: usize,
    pub actions: usize,
    pub trials: u64,
    /// Seed of the trial streams.
    pub seed: u64,
    /// Seed of the observation-model instance.
    pub instance_seed: u64,
    /// Seed of the cost hyperparameter draws.
    pub cost_seed: u64,
    pub policies: Vec<PolicyKind>,
    pub deltas: Vec<f64>,
    pub rho_tilde: f64,
    pub game_tol: f64,
    pub cost_rule: CostRule,
    pub deadline: DeadlineMode,
    pub fixed_deadlines: Option<Vec<f64>>,
    pub timing: Timing,
    pub truth: TruthRule,
    pub max_steps: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    pub parallelism: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for Scenario {
    /// Desk scale: 8 hypotheses, 4 actions, 2000 trials, all three policies,
    /// δ ∈ {1e−1, …, 1e−4}, ex-ante timing, optimal deadlines, ρ̃ = 0.75 and
    /// Log-Logistic(α, α) costs with α ~ Unif[1, 2].
    fn default() -> Self {
        Scenario {
            name: "scenario".into(),
            hypotheses: 8,
            actions: 4,
            trials: 2000,
            seed: 1,
            instance_seed: 1,
            cost_seed: 2,
            policies: PolicyKind::ALL.to_vec(),
            deltas: vec![1e-1, 1e-2, 1e-3, 1e-4],
            rho_tilde: PolicyConfig::DEFAULT_RHO_TILDE,
            game_tol: PolicyConfig::DEFAULT_GAME_TOL,
            cost_rule: CostRule::LogLogisticEqual { alpha: (1.0, 2.0) },
            deadline: DeadlineMode::Optimal,
            fixed_deadlines: None,
            timing: Timing::ExAnte,
            truth: TruthRule::Uniform,
            max_steps: DEFAULT_MAX_STEPS,
            parallelism: 0,
            output_dir: None,
        }
    }
}

const KEYS: &[&str] = &[
    "name",
    "hypotheses",
    "actions",
    "trials",
    "seed",
    "instance_seed",
    "cost.seed",
    "policies",
    "deltas",
    "policy.rho_tilde",
    "policy.game_tol",
    "cost.rule",
    "cost.alpha_range",
    "cost.x_min_range",
    "cost.models",
    "deadline",
    "deadline.fixed",
    "timing",
    "truth",
    "max_steps",
    "parallelism",
    "output_dir",
];

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, message: message.into() }
}

fn parse_num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| invalid(key, format!("cannot parse {v:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',').map(|x| parse_num(key, x.trim())).collect()
}

fn parse_range(key: &'static str, v: &str) -> Result<(f64, f64), ConfigError> {
    match parse_list::<f64>(key, v)?.as_slice() {
        &[lo, hi] if lo <= hi && lo.is_finite() && hi.is_finite() => Ok((lo, hi)),
        _ => Err(invalid(key, format!("expected \"lo, hi\" with lo ≤ hi, got {v:?}"))),
    }
}

/// Parse and validate a scenario file.
pub fn load_config(text: &str) -> Result<Scenario, ConfigError> {
    let mut entries: Vec<(&'static str, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected `key = value`, got {content:?}") })?;
        let key = key.trim();
        let known = KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| ConfigError::UnknownKey { line, key: key.to_string() })?;
        if entries.iter().any(|(k, _)| *k == known) {
            return Err(ConfigError::Duplicate { line, key: key.to_string() });
        }
        entries.push((known, value.trim().to_string()));
    }
    let get = |k: &str| entries.iter().find(|(key, _)| *key == k).map(|(_, v)| v.as_str());

    let mut s = Scenario::default();
    if let Some(v) = get("name") {
        s.name = v.to_string();
    }
    if let Some(v) = get("hypotheses") {
        s.hypotheses = parse_num("hypotheses", v)?;
    }
    if let Some(v) = get("actions") {
        s.actions = parse_num("actions", v)?;
    }
    if let Some(v) = get("trials") {
        s.trials = parse_num("trials", v)?;
    }
    if let Some(v) = get("seed") {
        s.seed = parse_num("seed", v)?;
    }
    if let Some(v) = get("instance_seed") {
        s.instance_seed = parse_num("instance_seed", v)?;
    }
    if let Some(v) = get("cost.seed") {
        s.cost_seed = parse_num("cost.seed", v)?;
    }
    if let Some(v) = get("policies") {
        s.policies = v
            .split(',')
            .map(|p| p.trim().parse::<PolicyKind>().map_err(|e| invalid("policies", e.to_string())))
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = get("deltas") {
        s.deltas = parse_list("deltas", v)?;
    }
    if let Some(v) = get("policy.rho_tilde") {
        s.rho_tilde = parse_num("policy.rho_tilde", v)?;
    }
    if let Some(v) = get("policy.game_tol") {
        s.game_tol = parse_num("policy.game_tol", v)?;
    }
    let rule = get("cost.rule")
        .ok_or_else(|| invalid("cost.rule", "missing (loglogistic_equal, pareto_uniform or explicit)"))?;
    s.cost_rule = match rule {
        "loglogistic_equal" => {
            if get("cost.x_min_range").is_some() || get("cost.models").is_some() {
                return Err(invalid("cost.rule", "loglogistic_equal only takes cost.alpha_range"));
            }
            let alpha = get("cost.alpha_range").map_or(Ok((1.0, 2.0)), |v| parse_range("cost.alpha_range", v))?;
            CostRule::LogLogisticEqual { alpha }
        }
        "pareto_uniform" => {
            if get("cost.models").is_some() {
                return Err(invalid("cost.rule", "pareto_uniform does not take cost.models"));
            }
            let x_min = get("cost.x_min_range").map_or(Ok((2.0, 3.0)), |v| parse_range("cost.x_min_range", v))?;
            let alpha = get("cost.alpha_range").map_or(Ok((1.1, 2.0)), |v| parse_range("cost.alpha_range", v))?;
            CostRule::ParetoUniform { x_min, alpha }
        }
        "explicit" => {
            if get("cost.alpha_range").is_some() || get("cost.x_min_range").is_some() {
                return Err(invalid("cost.rule", "explicit costs take only cost.models"));
            }
            let models =
                get("cost.models").ok_or_else(|| invalid("cost.models", "required when cost.rule = explicit"))?;
            CostRule::Explicit(
                models
                    .split(';')
                    .map(|m| m.trim().parse::<CostModel>().map_err(|e| invalid("cost.models", e.to_string())))
                    .collect::<Result<_, _>>()?,
            )
        }
        other => return Err(invalid("cost.rule", format!("unknown rule {other:?}"))),
    };
    if let Some(v) = get("deadline") {
        s.deadline = v.parse().map_err(|e: String| invalid("deadline", e))?;
    }
    if let Some(v) = get("deadline.fixed") {
        s.fixed_deadlines = Some(parse_list("deadline.fixed", v)?);
    }
    if let Some(v) = get("timing") {
        s.timing = v.parse().map_err(|e: String| invalid("timing", e))?;
    }
    if let Some(v) = get("truth") {
        s.truth = match v {
            "uniform" => TruthRule::Uniform,
            "sweep" => TruthRule::Sweep,
            other => return Err(invalid("truth", format!("expected uniform or sweep, got {other:?}"))),
        };
    }
    if let Some(v) = get("max_steps") {
        s.max_steps = parse_num("max_steps", v)?;
    }
    if let Some(v) = get("parallelism") {
        s.parallelism = parse_num("parallelism", v)?;
    }
    if let Some(v) = get("output_dir") {
        s.output_dir = Some(PathBuf::from(v));
    }
    s.validate()?;
    Ok(s)
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.hypotheses < 2 {
            return Err(invalid("hypotheses", "need at least 2"));
        }
        if self.actions < 1 {
            return Err(invalid("actions", "need at least 1"));
        }
        if self.trials < 1 {
            return Err(invalid("trials", "need at least 1"));
        }
        if self.policies.is_empty() {
            return Err(invalid("policies", "empty list"));
        }
        if self.deltas.is_empty() {
            return Err(invalid("deltas", "empty list"));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(invalid("deltas", format!("{d} not in (0, 1)")));
        }
        if !(self.rho_tilde > 0.5 && self.rho_tilde < 1.0) {
            return Err(invalid("policy.rho_tilde", format!("{} not in (0.5, 1)", self.rho_tilde)));
        }
        if !(self.game_tol > 0.0) {
            return Err(invalid("policy.game_tol", "must be positive"));
        }
        if self.max_steps < 1 {
            return Err(invalid("max_steps", "need at least 1"));
        }
        match &self.cost_rule {
            CostRule::LogLogisticEqual { alpha } => {
                if !(alpha.0 > 0.0) {
                    return Err(invalid("cost.alpha_range", "values must be positive"));
                }
            }
            CostRule::ParetoUniform { x_min, alpha } => {
                if !(x_min.0 > 0.0) {
                    return Err(invalid("cost.x_min_range", "values must be positive"));
                }
                if !(alpha.0 > 0.0) {
                    return Err(invalid("cost.alpha_range", "values must be positive"));
                }
            }
            CostRule::Explicit(models) => {
                if models.len() != self.actions {
                    return Err(invalid(
                        "cost.models",
                        format!("{} models for {} actions", models.len(), self.actions),
                    ));
                }
            }
        }
        match (&self.deadline, &self.fixed_deadlines) {
            (DeadlineMode::Fixed, Some(v)) if v.len() == self.actions => {}
            (DeadlineMode::Fixed, _) => {
                return Err(invalid("deadline.fixed", format!("needs {} values when deadline = fixed", self.actions)))
            }
            (_, Some(_)) => return Err(invalid("deadline.fixed", "only allowed with deadline = fixed")),
            _ => {}
        }
        Ok(())
    }

    /// Full-scale size: 32 hypotheses, 16 actions, 50000 trials.
    pub fn full_scale(mut self) -> Self {
        self.hypotheses = 32;
        self.actions = 16;
        self.trials = 50_000;
        self
    }

    /// Loadable text form; [`load_config`] of the result gives back `self`.
    pub fn to_config(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("writing to a String");
        put("name", self.name.clone());
        put("hypotheses", self.hypotheses.to_string());
        put("actions", self.actions.to_string());
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        put("instance_seed", self.instance_seed.to_string());
        put("cost.seed", self.cost_seed.to_string());
        put("policies", self.policies.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "));
        put("deltas", join(&self.deltas));
        put("policy.rho_tilde", self.rho_tilde.to_string());
        put("policy.game_tol", self.game_tol.to_string());
        match &self.cost_rule {
            CostRule::LogLogisticEqual { alpha } => {
                put("cost.rule", "loglogistic_equal".into());
                put("cost.alpha_range", join(&[alpha.0, alpha.1]));
            }
            CostRule::ParetoUniform { x_min, alpha } => {
                put("cost.rule", "pareto_uniform".into());
                put("cost.x_min_range", join(&[x_min.0, x_min.1]));
                put("cost.alpha_range", join(&[alpha.0, alpha.1]));
            }
            CostRule::Explicit(models) => {
                put("cost.rule", "explicit".into());
                put("cost.models", models.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "));
            }
        }
        put("deadline", self.deadline.to_string());
        if let Some(v) = &self.fixed_deadlines {
            put("deadline.fixed", join(v));
        }
        put("timing", self.timing.to_string());
        put(
            "truth",
            match self.truth {
                TruthRule::Uniform => "uniform".into(),
                TruthRule::Sweep => "sweep".into(),
            },
        );
        put("max_steps", self.max_steps.to_string());
        put("parallelism", self.parallelism.to_string());
        if let Some(dir) = &self.output_dir {
            put("output_dir", dir.display().to_string());
        }
        out
    }
}

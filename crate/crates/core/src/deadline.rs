//! Per-action deadlines.
//!
//! A deadline `T` on an action's cost lowers the effective per-sample cost
//! κ(T) below the mean exactly when the overshoot `E[C − T | C > T]` exceeds
//! the mean. This module decides, per action, whether to set a deadline and
//! where, and packages the result as a [`DeadlinePlan`].

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::cost::{CostFamily, CostModel, CostModelError};
use crate::numerics::{find_root_bracketed, minimize_convex_1d, NumericsError, RootProblem};

const NEUTRAL_TOL: f64 = 1e-9;
const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeadlineError {
    #[error(transparent)]
    Cost(#[from] CostModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("Pareto tail index must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("search interval [{lo}, {hi}] is empty or not positive")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("mode 'fixed' needs exactly one deadline per action ({expected}), got {got}")]
    FixedValues { expected: usize, got: usize },
    #[error("no deadline and infinite mean: the effective cost is unbounded")]
    InfiniteMean,
    #[error("action {action}: {source}")]
    Action {
        action: usize,
        #[source]
        source: Box<DeadlineError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Improves,
    Degrades,
    Neutral,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Improves => "improves",
            Verdict::Degrades => "degrades",
            Verdict::Neutral => "neutral",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenefitVerdict {
    pub verdict: Verdict,
    /// `overshoot(T) − mean`; `+∞` when the mean is infinite.
    pub overshoot_minus_mean: f64,
}

/// Does a deadline at `t` lower the effective cost below the mean?
///
/// Infinite-mean models always report [`Verdict::Improves`]; a deadline past
/// all of the mass (`F(t) = 1`) is neutral.
pub fn benefit_verdict(model: &CostModel, t: f64) -> Result<BenefitVerdict, DeadlineError> {
    if !(model.cdf(t) > 0.0) {
        return Err(CostModelError::ZeroMass { t }.into());
    }
    let mean = model.mean();
    if mean.is_infinite() {
        return Ok(BenefitVerdict { verdict: Verdict::Improves, overshoot_minus_mean: f64::INFINITY });
    }
    if model.survival(t) == 0.0 {
        return Ok(BenefitVerdict { verdict: Verdict::Neutral, overshoot_minus_mean: 0.0 });
    }
    let diff = model.overshoot(t)? - mean;
    let verdict = if diff.abs() <= NEUTRAL_TOL * mean.max(1.0) {
        Verdict::Neutral
    } else if diff > 0.0 {
        Verdict::Improves
    } else {
        Verdict::Degrades
    };
    Ok(BenefitVerdict { verdict, overshoot_minus_mean: diff })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoOptimum {
    pub t_star: f64,
    pub kappa_star: f64,
    /// Set for `alpha ≤ 1`; the optimum still exists but there is no finite
    /// mean to compare it against.
    pub mean_infinite: bool,
}

/// The κ-minimising deadline of a Pareto(`x_min`, `alpha`) cost.
///
/// `T* = x_min·τ*` where τ* is the root above 1 of
/// `(α−1)τ^α − α²τ^{α−1} + 1`. κ is convex in τ, so the root is the global
/// minimiser. At `alpha = 1` that polynomial vanishes identically and the
/// stationarity condition becomes `τ − 2 − ln τ = 0`.
pub fn pareto_optimal_deadline(x_min: f64, alpha: f64) -> Result<ParetoOptimum, DeadlineError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(DeadlineError::InvalidAlpha(alpha));
    }
    let model = CostModel::pareto(x_min, alpha)?;
    let tau = if alpha == 1.0 {
        solve_from_one(|tau: f64| tau - 2.0 - tau.ln())?
    } else {
        solve_from_one(|tau: f64| (alpha - 1.0) * tau.powf(alpha) - alpha * alpha * tau.powf(alpha - 1.0) + 1.0)?
    };
    let t_star = x_min * tau;
    Ok(ParetoOptimum { t_star, kappa_star: model.kappa(t_star)?, mean_infinite: alpha <= 1.0 })
}

/// Root of `g` in (1, ∞): bracket `[1 + 1e−9, 2]`, doubling the upper end until
/// the sign flips.
fn solve_from_one(g: impl Fn(f64) -> f64) -> Result<f64, DeadlineError> {
    let lo = 1.0 + 1e-9;
    let mut hi = 2.0;
    while g(lo).signum() == g(hi).signum() {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(NumericsError::BracketInvalid { lo, hi, f_lo: g(lo), f_hi: g(hi) }.into());
        }
    }
    Ok(find_root_bracketed(&RootProblem::new(g, lo, hi, ROOT_TOL))?)
}

/// The median rule for a LogLogistic(`alpha`, `beta`) cost: `T = alpha`.
///
/// For `beta ≤ 2` this never raises the effective cost; beyond that it does,
/// which [`benefit_verdict`] reports.
pub fn loglogistic_median_deadline(alpha: f64, _beta: f64) -> f64 {
    alpha
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumericOptimum {
    Optimum {
        t: f64,
        kappa: f64,
    },
    /// No deadline in the interval beats the mean by more than the tolerance.
    NoImprovement,
}

/// Minimise κ over `[lo, hi]`.
///
/// Families with convex κ use golden-section search; the others scan 1024
/// log-spaced points and refine around the best one.
pub fn numeric_optimal_deadline(
    model: &CostModel,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<NumericOptimum, DeadlineError> {
    if !(lo > 0.0 && lo < hi) {
        return Err(DeadlineError::InvalidInterval { lo, hi });
    }
    if !(model.cdf(lo) > 0.0) {
        return Err(CostModelError::ZeroMass { t: lo }.into());
    }
    let kappa = |t: f64| model.kappa(t).unwrap_or(f64::INFINITY);
    let (t, k) = if model.kappa_is_convex() {
        minimize_convex_1d(kappa, lo, hi, tol)?
    } else {
        const GRID: usize = 1024;
        let ratio = (hi / lo).ln() / (GRID - 1) as f64;
        let grid: Vec<f64> = (0..GRID).map(|i| lo * (ratio * i as f64).exp()).collect();
        let (best, _) =
            grid.iter()
                .map(|&t| kappa(t))
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, k)| if k < acc.1 { (i, k) } else { acc });
        let left = grid[best.saturating_sub(1)];
        let right = grid[(best + 1).min(GRID - 1)];
        minimize_convex_1d(kappa, left, right, tol * lo.min(1.0))?
    };
    if k >= model.mean() - tol {
        Ok(NumericOptimum::NoImprovement)
    } else {
        Ok(NumericOptimum::Optimum { t, kappa: k })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeadlineMode {
    /// No deadlines; every action costs its mean.
    None,
    /// Caller-supplied deadlines.
    Fixed,
    /// Each action's median cost.
    Median,
    /// Family-specific rule (Pareto root, LogLogistic median), numeric otherwise.
    Optimal,
    /// Numeric minimisation for every action.
    Numeric,
}

impl fmt::Display for DeadlineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeadlineMode::None => "none",
            DeadlineMode::Fixed => "fixed",
            DeadlineMode::Median => "median",
            DeadlineMode::Optimal => "optimal",
            DeadlineMode::Numeric => "numeric",
        })
    }
}

impl FromStr for DeadlineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(DeadlineMode::None),
            "fixed" => Ok(DeadlineMode::Fixed),
            "median" => Ok(DeadlineMode::Median),
            "optimal" => Ok(DeadlineMode::Optimal),
            "numeric" => Ok(DeadlineMode::Numeric),
            other => Err(format!("unknown deadline mode {other:?} (expected none, fixed, median, optimal or numeric)")),
        }
    }
}

/// Deadlines and the resulting effective costs, indexed by action.
#[derive(Debug, Clone, PartialEq)]
pub struct DeadlinePlan {
    /// `f64::INFINITY` means no deadline.
    pub deadlines: Vec<f64>,
    pub mode: DeadlineMode,
    pub effective_costs: Vec<f64>,
}

/// Build a plan for `models` under `mode`. `fixed` must be given exactly when
/// `mode` is [`DeadlineMode::Fixed`].
pub fn plan_deadlines(
    models: &[CostModel],
    mode: DeadlineMode,
    fixed: Option<&[f64]>,
) -> Result<DeadlinePlan, DeadlineError> {
    match (mode, fixed) {
        (DeadlineMode::Fixed, Some(values)) if values.len() == models.len() => {}
        (DeadlineMode::Fixed, values) => {
            return Err(DeadlineError::FixedValues { expected: models.len(), got: values.map_or(0, <[f64]>::len) })
        }
        (_, Some(values)) => return Err(DeadlineError::FixedValues { expected: 0, got: values.len() }),
        _ => {}
    }
    let mut deadlines = Vec::with_capacity(models.len());
    let mut effective_costs = Vec::with_capacity(models.len());
    for (action, model) in models.iter().enumerate() {
        let planned = plan_one(model, mode, fixed.map(|v| v[action]))
            .map_err(|e| DeadlineError::Action { action, source: Box::new(e) })?;
        deadlines.push(planned.0);
        effective_costs.push(planned.1);
    }
    Ok(DeadlinePlan { deadlines, mode, effective_costs })
}

fn no_deadline(model: &CostModel) -> Result<(f64, f64), DeadlineError> {
    let mean = model.mean();
    if mean.is_infinite() {
        return Err(DeadlineError::InfiniteMean);
    }
    Ok((f64::INFINITY, mean))
}

fn with_deadline(model: &CostModel, t: f64) -> Result<(f64, f64), DeadlineError> {
    if t == f64::INFINITY {
        return no_deadline(model);
    }
    Ok((t, model.kappa(t)?))
}

/// A search window that starts inside the support and spans four decades
/// around the median.
fn search_window(model: &CostModel) -> (f64, f64) {
    let median = model.median();
    let lo = match model.family() {
        CostFamily::Pareto { x_min, .. } => x_min * (1.0 + 1e-6),
        _ => 0.01 * median,
    };
    (lo, 100.0 * median)
}

fn numeric_or_none(model: &CostModel) -> Result<(f64, f64), DeadlineError> {
    let (lo, hi) = search_window(model);
    match numeric_optimal_deadline(model, lo, hi, 1e-8)? {
        NumericOptimum::Optimum { t, kappa } => Ok((t, kappa)),
        NumericOptimum::NoImprovement => no_deadline(model),
    }
}

fn plan_one(model: &CostModel, mode: DeadlineMode, fixed: Option<f64>) -> Result<(f64, f64), DeadlineError> {
    match mode {
        DeadlineMode::None => no_deadline(model),
        DeadlineMode::Fixed => with_deadline(model, fixed.expect("checked by plan_deadlines")),
        DeadlineMode::Median => with_deadline(model, model.median()),
        DeadlineMode::Numeric => numeric_or_none(model),
        DeadlineMode::Optimal => match model.family() {
            CostFamily::Pareto { x_min, alpha } => {
                let opt = pareto_optimal_deadline(x_min, alpha)?;
                Ok((opt.t_star, opt.kappa_star))
            }
            CostFamily::LogLogistic { scale, shape } => {
                let t = loglogistic_median_deadline(scale, shape);
                if benefit_verdict(model, t)?.verdict == Verdict::Degrades {
                    no_deadline(model)
                } else {
                    with_deadline(model, t)
                }
            }
            _ => numeric_or_none(model),
        },
    }
}

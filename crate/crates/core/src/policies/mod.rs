//! Cost-aware action selection and stopping.
//!
//! Three policies share the same ingredients, the divergences of the
//! observation model and the effective per-action costs κ:
//!
//! * **CA-Chernoff** draws actions from the distribution that maximises the
//!   worst-case information gain per unit cost against the currently most
//!   likely hypothesis, and stops once a posterior exceeds `1 − δ`.
//! * **CA-NJ1** does the same, but while no posterior exceeds `ρ̃` it explores
//!   with weights that maximise the worst pairwise separation per unit cost.
//! * **CA-Φ-Δ** eliminates hypotheses in stages, each stage playing the single
//!   action with the best separation per unit cost among the survivors.
//!
//! The ratio games only depend on the model and on κ, so
//! [`prepare_policy`] solves them once and the result is shared by every
//! trial.

mod belief;
mod phidelta;

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use thiserror::Error;

pub use belief::{chernoff_stop, update_belief, Belief, Observation};
pub use phidelta::{phidelta_stage_action, phidelta_update_and_prune, PhiDeltaState};

use crate::numerics::{solve_ratio_game, NumericsError, RandomStream, RatioGame};
use crate::observation::ObservationModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("invalid policy configuration: {0}")]
    Config(String),
    #[error("hypothesis {believed} cannot be told apart from any other by any action")]
    Degenerate { believed: usize },
    #[error("no action separates any pair of the remaining hypotheses")]
    NoSeparatingAction,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    CaChernoff,
    CaNj1,
    CaPhiDelta,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::CaChernoff, PolicyKind::CaNj1, PolicyKind::CaPhiDelta];
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::CaChernoff => "ca_chernoff",
            PolicyKind::CaNj1 => "ca_nj1",
            PolicyKind::CaPhiDelta => "ca_phidelta",
        })
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "cachernoff" | "chernoff" => Ok(PolicyKind::CaChernoff),
            "canj1" | "nj1" => Ok(PolicyKind::CaNj1),
            "caphidelta" | "phidelta" => Ok(PolicyKind::CaPhiDelta),
            _ => {
                Err(PolicyError::Config(format!("unknown policy {s:?} (expected ca_chernoff, ca_nj1 or ca_phidelta)")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Target error probability, in (0, 1).
    pub delta: f64,
    /// Exploration threshold of CA-NJ1, in (0.5, 1).
    pub rho_tilde: f64,
    /// κ per action.
    pub effective_costs: Vec<f64>,
    /// Tolerance of the ratio-game bisection.
    pub game_tol: f64,
}

impl PolicyConfig {
    pub const DEFAULT_RHO_TILDE: f64 = 0.75;
    pub const DEFAULT_GAME_TOL: f64 = 1e-6;

    pub fn new(kind: PolicyKind, delta: f64, effective_costs: Vec<f64>) -> Self {
        PolicyConfig {
            kind,
            delta,
            rho_tilde: Self::DEFAULT_RHO_TILDE,
            effective_costs,
            game_tol: Self::DEFAULT_GAME_TOL,
        }
    }

    pub fn validate(&self, model: &ObservationModel) -> Result<(), PolicyError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(PolicyError::Config(format!("delta {} not in (0, 1)", self.delta)));
        }
        if !(self.rho_tilde > 0.5 && self.rho_tilde < 1.0) {
            return Err(PolicyError::Config(format!("rho_tilde {} not in (0.5, 1)", self.rho_tilde)));
        }
        if self.effective_costs.len() != model.actions() {
            return Err(PolicyError::Config(format!(
                "{} effective costs for {} actions",
                self.effective_costs.len(),
                model.actions()
            )));
        }
        if let Some(c) = self.effective_costs.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(PolicyError::Config(format!("effective cost {c} is not positive and finite")));
        }
        if !(self.game_tol > 0.0) {
            return Err(PolicyError::Config(format!("game_tol {} must be positive", self.game_tol)));
        }
        Ok(())
    }
}

/// Solve the gain-per-cost game over the given rows, ignoring all-zero rows.
fn ratio_weights(rows: Vec<Vec<f64>>, costs: &[f64], tol: f64) -> Result<Option<Vec<f64>>, PolicyError> {
    let mut rows: Vec<Vec<f64>> = rows.into_iter().filter(|r| r.iter().any(|&d| d != 0.0)).collect();
    if rows.is_empty() {
        return Ok(None);
    }
    // duplicate rows do not change a minimum
    rows.sort_by(|a, b| a.partial_cmp(b).expect("finite divergences"));
    rows.dedup();
    let mut game = RatioGame::new(rows, costs.to_vec());
    game.tol = tol;
    Ok(Some(solve_ratio_game(&game)?.weights))
}

/// Action distribution maximising `min_j Σ λ_a D(believed‖j; a) / Σ λ_a κ_a`.
///
/// Hypotheses that no action separates from `believed` are left out of the
/// minimum; if that leaves nothing, [`PolicyError::Degenerate`] is returned.
pub fn chernoff_action_weights(
    model: &ObservationModel,
    believed: usize,
    effective_costs: &[f64],
    tol: f64,
) -> Result<Vec<f64>, PolicyError> {
    let rows = (0..model.hypotheses())
        .filter(|&j| j != believed)
        .map(|j| (0..model.actions()).map(|a| model.kld_unchecked(believed, j, a)).collect())
        .collect();
    ratio_weights(rows, effective_costs, tol)?.ok_or(PolicyError::Degenerate { believed })
}

/// Exploration distribution: maximises the worst separation per unit cost
/// over all ordered hypothesis pairs.
pub fn exploration_weights(
    model: &ObservationModel,
    effective_costs: &[f64],
    tol: f64,
) -> Result<Vec<f64>, PolicyError> {
    let h = model.hypotheses();
    let rows = (0..h)
        .flat_map(|i| (0..h).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| (0..model.actions()).map(|a| model.kld_unchecked(i, j, a)).collect())
        .collect();
    ratio_weights(rows, effective_costs, tol)?.ok_or(PolicyError::NoSeparatingAction)
}

/// CA-NJ1 weights: exploration while the top posterior is at most `rho_tilde`,
/// Chernoff weights for the most likely hypothesis afterwards.
pub fn nj1_action_weights(
    model: &ObservationModel,
    belief: &Belief,
    effective_costs: &[f64],
    rho_tilde: f64,
    tol: f64,
) -> Result<Vec<f64>, PolicyError> {
    let (believed, top) = belief.argmax();
    if top <= rho_tilde {
        exploration_weights(model, effective_costs, tol)
    } else {
        chernoff_action_weights(model, believed, effective_costs, tol)
    }
}

/// A policy with its ratio games solved, ready to run any number of trials.
#[derive(Debug, Clone)]
pub struct PreparedPolicy {
    config: PolicyConfig,
    chernoff: Vec<Vec<f64>>,
    chernoff_samplers: Vec<WeightedIndex<f64>>,
    exploration: Option<(Vec<f64>, WeightedIndex<f64>)>,
    uniform_fallbacks: Vec<usize>,
}

fn sampler(weights: &[f64]) -> WeightedIndex<f64> {
    WeightedIndex::new(weights).expect("ratio game weights form a distribution")
}

/// Validate `config` against `model` and precompute all action distributions.
///
/// A believed hypothesis that no action separates from the rest gets uniform
/// weights; such hypotheses are listed by [`PreparedPolicy::uniform_fallbacks`].
pub fn prepare_policy(model: &ObservationModel, config: &PolicyConfig) -> Result<PreparedPolicy, PolicyError> {
    config.validate(model)?;
    let costs = &config.effective_costs;
    let mut chernoff = Vec::new();
    let mut uniform_fallbacks = Vec::new();
    if config.kind != PolicyKind::CaPhiDelta {
        for believed in 0..model.hypotheses() {
            match chernoff_action_weights(model, believed, costs, config.game_tol) {
                Ok(w) => chernoff.push(w),
                Err(PolicyError::Degenerate { .. }) => {
                    uniform_fallbacks.push(believed);
                    chernoff.push(vec![1.0 / model.actions() as f64; model.actions()]);
                }
                Err(e) => return Err(e),
            }
        }
    }
    let exploration = if config.kind == PolicyKind::CaNj1 {
        let w = exploration_weights(model, costs, config.game_tol)?;
        let s = sampler(&w);
        Some((w, s))
    } else {
        None
    };
    let chernoff_samplers = chernoff.iter().map(|w| sampler(w)).collect();
    Ok(PreparedPolicy { config: config.clone(), chernoff, chernoff_samplers, exploration, uniform_fallbacks })
}

impl PreparedPolicy {
    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn chernoff_weights(&self, believed: usize) -> Option<&[f64]> {
        self.chernoff.get(believed).map(Vec::as_slice)
    }

    pub fn exploration_weights(&self) -> Option<&[f64]> {
        self.exploration.as_ref().map(|(w, _)| w.as_slice())
    }

    pub fn uniform_fallbacks(&self) -> &[usize] {
        &self.uniform_fallbacks
    }

    /// Per-trial state at the uniform prior.
    pub fn start(&self, model: &ObservationModel) -> Result<PolicyRun<'_>, PolicyError> {
        let state = match self.config.kind {
            PolicyKind::CaPhiDelta => {
                RunState::PhiDelta(PhiDeltaState::new(model, &self.config.effective_costs, self.config.delta)?)
            }
            _ => RunState::Belief(Belief::uniform(model.hypotheses())),
        };
        Ok(PolicyRun { policy: self, state })
    }
}

#[derive(Debug, Clone)]
enum RunState {
    Belief(Belief),
    PhiDelta(PhiDeltaState),
}

/// One trial's decision state.
#[derive(Debug, Clone)]
pub struct PolicyRun<'p> {
    policy: &'p PreparedPolicy,
    state: RunState,
}

impl PolicyRun<'_> {
    /// The declared hypothesis, once the stopping rule fires.
    pub fn decision(&self) -> Option<usize> {
        match &self.state {
            RunState::Belief(b) => chernoff_stop(b, self.policy.config.delta),
            RunState::PhiDelta(s) => s.declared(),
        }
    }

    /// Next action to take. Randomised policies draw from `stream`.
    pub fn next_action(&self, stream: &mut RandomStream) -> usize {
        match &self.state {
            RunState::PhiDelta(s) => s.stage_action(),
            RunState::Belief(b) => {
                let (believed, top) = b.argmax();
                match &self.policy.exploration {
                    Some((_, explore)) if top <= self.policy.config.rho_tilde => explore.sample(stream),
                    _ => self.policy.chernoff_samplers[believed].sample(stream),
                }
            }
        }
    }

    pub fn observe(&mut self, model: &ObservationModel, action: usize, obs: Observation) -> Result<(), PolicyError> {
        match &mut self.state {
            RunState::Belief(b) => b.update(model, action, obs),
            RunState::PhiDelta(s) => {
                phidelta_update_and_prune(s, model, action, obs, &self.policy.config.effective_costs)?;
            }
        }
        Ok(())
    }

    pub fn belief(&self) -> Option<&Belief> {
        match &self.state {
            RunState::Belief(b) => Some(b),
            RunState::PhiDelta(_) => None,
        }
    }

    pub fn phidelta(&self) -> Option<&PhiDeltaState> {
        match &self.state {
            RunState::PhiDelta(s) => Some(s),
            RunState::Belief(_) => None,
        }
    }
}

use super::{Observation, PolicyError};
use crate::observation::ObservationModel;

/// Stage-wise elimination state.
///
/// Each stage plays one fixed action. Evidence is the running log-likelihood
/// of every alive hypothesis, kept across stages, so the pairwise LLR of an
/// alive pair is the difference of two entries. After every sample the
/// leading hypothesis discards all alive rivals trailing it by at least the
/// stage threshold `ln((H−1)/δ)`; it is the stage winner and a new stage
/// begins with the survivors.
///
/// Discarding the true hypothesis requires some rival to lead it by the
/// threshold at some point, which has probability at most `e^{−threshold}`
/// per rival, so the overall error stays below δ.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiDeltaState {
    alive: Vec<usize>,
    log_likelihood: Vec<f64>,
    stage_action: usize,
    stage_threshold: f64,
    stages: usize,
}

impl PhiDeltaState {
    /// Fresh state with every hypothesis alive.
    pub fn new(model: &ObservationModel, costs: &[f64], delta: f64) -> Result<Self, PolicyError> {
        let h = model.hypotheses();
        let alive: Vec<usize> = (0..h).collect();
        let stage_action = phidelta_stage_action(model, &alive, costs)?;
        Ok(PhiDeltaState {
            alive,
            log_likelihood: vec![0.0; h],
            stage_action,
            stage_threshold: ((h - 1) as f64 / delta).ln(),
            stages: 1,
        })
    }

    pub fn alive(&self) -> &[usize] {
        &self.alive
    }

    /// Accumulated `Σ log f_i(X)/f_j(X)` over the samples seen so far.
    pub fn pairwise_llr(&self, i: usize, j: usize) -> f64 {
        self.log_likelihood[i] - self.log_likelihood[j]
    }

    pub fn stage_action(&self) -> usize {
        self.stage_action
    }

    pub fn stage_threshold(&self) -> f64 {
        self.stage_threshold
    }

    /// Number of stages started so far.
    pub fn stages(&self) -> usize {
        self.stages
    }

    /// The surviving hypothesis once all others are eliminated.
    pub fn declared(&self) -> Option<usize> {
        (self.alive.len() == 1).then(|| self.alive[0])
    }

    fn leader(&self) -> usize {
        let mut best = self.alive[0];
        for &i in &self.alive[1..] {
            if self.log_likelihood[i] > self.log_likelihood[best] {
                best = i;
            }
        }
        best
    }
}

/// Stage action for the alive set.
///
/// Scores each action by how fast it lets *any* alive hypothesis, if true,
/// pull away from its most distinguishable rival, in the worst case over
/// hypotheses and per unit cost: `min_i max_j D(i‖j; a) / κ_a`. If no action
/// scores above zero, the action with the largest pairwise divergence per
/// cost is used instead. Ties go to the lowest index.
pub fn phidelta_stage_action(model: &ObservationModel, alive: &[usize], costs: &[f64]) -> Result<usize, PolicyError> {
    let argmax = |score: &dyn Fn(usize) -> f64| {
        let mut best: Option<(usize, f64)> = None;
        for a in 0..model.actions() {
            let s = score(a) / costs[a];
            if s > 0.0 && best.is_none_or(|(_, v)| s > v) {
                best = Some((a, s));
            }
        }
        best.map(|(a, _)| a)
    };
    let best_rival = |i: usize, a: usize| {
        alive.iter().filter(|&&j| j != i).map(|&j| model.kld_unchecked(i, j, a)).fold(0.0, f64::max)
    };
    let worst_case = |a: usize| alive.iter().map(|&i| best_rival(i, a)).fold(f64::INFINITY, f64::min);
    let any_pair = |a: usize| alive.iter().map(|&i| best_rival(i, a)).fold(0.0, f64::max);
    argmax(&worst_case).or_else(|| argmax(&any_pair)).ok_or(PolicyError::NoSeparatingAction)
}

/// Fold one observation into the state and run the stage transition it
/// triggers. Returns the hypotheses discarded, in index order.
pub fn phidelta_update_and_prune(
    state: &mut PhiDeltaState,
    model: &ObservationModel,
    action: usize,
    obs: Observation,
    costs: &[f64],
) -> Result<Vec<usize>, PolicyError> {
    let Observation::Sample(x) = obs else { return Ok(Vec::new()) };
    for &i in &state.alive {
        let d = x - model.mean(i, action);
        state.log_likelihood[i] -= 0.5 * d * d;
    }
    if state.alive.len() < 2 {
        return Ok(Vec::new());
    }
    let leader = state.leader();
    let (threshold, ll) = (state.stage_threshold, &state.log_likelihood);
    let lead = ll[leader];
    let pruned: Vec<usize> = state.alive.iter().copied().filter(|&j| lead - ll[j] >= threshold).collect();
    if !pruned.is_empty() {
        state.alive.retain(|j| !pruned.contains(j));
        if state.alive.len() > 1 {
            state.stage_action = phidelta_stage_action(model, &state.alive, costs)?;
            state.stages += 1;
        }
    }
    Ok(pruned)
}

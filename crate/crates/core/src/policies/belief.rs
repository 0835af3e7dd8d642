use crate::observation::ObservationModel;

/// What a single action delivers: a sample, or nothing if it was aborted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Sample(f64),
    Abstain,
}

/// Posterior over hypotheses, kept as normalised log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    log_post: Vec<f64>,
}

impl Belief {
    pub fn uniform(hypotheses: usize) -> Self {
        Belief { log_post: vec![-(hypotheses as f64).ln(); hypotheses] }
    }

    /// From explicit probabilities (zeros become `−∞` log-mass).
    pub fn from_posterior(probs: &[f64]) -> Self {
        let total: f64 = probs.iter().sum();
        Belief { log_post: probs.iter().map(|p| (p / total).ln()).collect() }
    }

    pub fn hypotheses(&self) -> usize {
        self.log_post.len()
    }

    pub fn log_posterior(&self) -> &[f64] {
        &self.log_post
    }

    pub fn posterior(&self) -> Vec<f64> {
        self.log_post.iter().map(|l| l.exp()).collect()
    }

    /// Most likely hypothesis (lowest index on ties) and its probability.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = 0;
        for (i, &l) in self.log_post.iter().enumerate() {
            if l > self.log_post[best] {
                best = i;
            }
        }
        (best, self.log_post[best].exp())
    }

    /// Bayes update in place. An abstention carries no evidence about the
    /// hypothesis (costs do not depend on it), so it leaves the belief as is.
    pub fn update(&mut self, model: &ObservationModel, action: usize, obs: Observation) {
        let Observation::Sample(x) = obs else { return };
        for (i, l) in self.log_post.iter_mut().enumerate() {
            let d = x - model.mean(i, action);
            *l -= 0.5 * d * d;
        }
        let top = self.log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let norm = top + self.log_post.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        for l in &mut self.log_post {
            *l -= norm;
        }
    }
}

/// Functional form of [`Belief::update`].
pub fn update_belief(belief: &Belief, model: &ObservationModel, action: usize, obs: Observation) -> Belief {
    let mut next = belief.clone();
    next.update(model, action, obs);
    next
}

/// Declare the most likely hypothesis once its posterior strictly exceeds `1 − delta`.
pub fn chernoff_stop(belief: &Belief, delta: f64) -> Option<usize> {
    let (i, _) = belief.argmax();
    // compared in log space so a posterior of exactly 1 − δ never declares
    (belief.log_post[i] > (1.0 - delta).ln()).then_some(i)
}

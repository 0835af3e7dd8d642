//! Unit-variance Gaussian observation models.
//!
//! Hypothesis `i` and action `a` produce samples `X ~ N(μ[i][a], 1)`. Besides
//! densities, log-likelihood ratios and divergences, this module checks the
//! identifiability conditions the policies rely on and generates the
//! benchmark instance used by the experiments.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;
use thiserror::Error;

use crate::numerics::RandomStream;

#[derive(Debug, Error)]
pub enum ObservationError {
    #[error("observation model needs at least 2 hypotheses and 1 action, got {hypotheses}×{actions}")]
    Shape { hypotheses: usize, actions: usize },
    #[error("row {row} has {got} entries, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("mean for hypothesis {hypothesis}, action {action} is not finite")]
    NonFinite { hypothesis: usize, action: usize },
    #[error("index out of range: hypothesis {hypothesis} / action {action} for a {hypotheses}×{actions} model")]
    Index { hypothesis: usize, action: usize, hypotheses: usize, actions: usize },
    #[error("instance CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("instance CSV line {line}: cannot parse {field:?} as a number")]
    Parse { line: usize, field: String },
}

/// Means `μ[i][a]` of unit-variance Gaussian samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    means: Vec<f64>,
    hypotheses: usize,
    actions: usize,
}

/// Identifiability diagnostics for an [`ObservationModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// Every divergence is either exactly zero or bounded away from it.
    pub separation_ok: bool,
    /// Every hypothesis pair is separated by some action, and every action
    /// separates some pair.
    pub validity_ok: bool,
    /// Largest `E_i[LLR(i, j, a)²]` over all pairs and actions.
    pub llr_second_moment_bound: f64,
    /// `(i, j, a)` with `i < j` and `μ[i][a] = μ[j][a]`.
    pub zero_kld_pairs: Vec<(usize, usize, usize)>,
}

/// Build a model from one row of means per hypothesis.
pub fn make_gaussian_model(means: &[Vec<f64>]) -> Result<ObservationModel, ObservationError> {
    let hypotheses = means.len();
    let actions = means.first().map_or(0, Vec::len);
    if hypotheses < 2 || actions == 0 {
        return Err(ObservationError::Shape { hypotheses, actions });
    }
    let mut flat = Vec::with_capacity(hypotheses * actions);
    for (i, row) in means.iter().enumerate() {
        if row.len() != actions {
            return Err(ObservationError::Ragged { row: i, got: row.len(), expected: actions });
        }
        for (a, &m) in row.iter().enumerate() {
            if !m.is_finite() {
                return Err(ObservationError::NonFinite { hypothesis: i, action: a });
            }
            flat.push(m);
        }
    }
    Ok(ObservationModel { means: flat, hypotheses, actions })
}

impl ObservationModel {
    pub fn hypotheses(&self) -> usize {
        self.hypotheses
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    /// Unchecked mean lookup, for hot loops with indices already validated.
    #[inline]
    pub fn mean(&self, i: usize, a: usize) -> f64 {
        self.means[i * self.actions + a]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.means.chunks(self.actions).map(<[f64]>::to_vec).collect()
    }

    fn check(&self, i: usize, a: usize) -> Result<(), ObservationError> {
        if i < self.hypotheses && a < self.actions {
            Ok(())
        } else {
            Err(ObservationError::Index {
                hypothesis: i,
                action: a,
                hypotheses: self.hypotheses,
                actions: self.actions,
            })
        }
    }

    pub fn log_density(&self, i: usize, a: usize, x: f64) -> Result<f64, ObservationError> {
        self.check(i, a)?;
        let d = x - self.mean(i, a);
        Ok(-0.5 * d * d - 0.5 * (2.0 * PI).ln())
    }

    /// `log f_i(x) − log f_j(x)` for action `a`.
    pub fn llr(&self, i: usize, j: usize, a: usize, x: f64) -> Result<f64, ObservationError> {
        self.check(i, a)?;
        self.check(j, a)?;
        Ok(self.llr_unchecked(i, j, a, x))
    }

    #[inline]
    pub fn llr_unchecked(&self, i: usize, j: usize, a: usize, x: f64) -> f64 {
        let (mi, mj) = (self.mean(i, a), self.mean(j, a));
        (mi - mj) * x - (mi * mi - mj * mj) / 2.0
    }

    /// `D(f_i ‖ f_j)` under action `a`.
    pub fn kld(&self, i: usize, j: usize, a: usize) -> Result<f64, ObservationError> {
        self.check(i, a)?;
        self.check(j, a)?;
        Ok(self.kld_unchecked(i, j, a))
    }

    #[inline]
    pub fn kld_unchecked(&self, i: usize, j: usize, a: usize) -> f64 {
        let d = self.mean(i, a) - self.mean(j, a);
        d * d / 2.0
    }

    /// Draw one sample for hypothesis `i` under action `a`.
    pub fn sample(&self, i: usize, a: usize, stream: &mut RandomStream) -> f64 {
        let z: f64 = stream.sample(rand_distr::StandardNormal);
        self.mean(i, a) + z
    }

    /// Write the means as headerless CSV, one hypothesis per row. Values use
    /// the shortest representation that parses back to the same double.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ObservationError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.means.chunks(self.actions) {
            w.write_record(row.iter().map(|m| m.to_string()))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, ObservationError> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
        let mut rows = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| {
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| ObservationError::Parse { line: line + 1, field: field.to_string() })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
        make_gaussian_model(&rows)
    }
}

/// Check separation, validity and the LLR second-moment bound.
///
/// For unit-variance Gaussians with `Δ = μ_i − μ_j`, the LLR under `f_i` is
/// `N(Δ²/2, Δ²)`, so its second moment is `Δ²(1 + Δ²/4)`.
pub fn validate_assumptions(model: &ObservationModel) -> AssumptionReport {
    let (h, n_actions) = (model.hypotheses, model.actions);
    let mut zero_kld_pairs = Vec::new();
    let mut bound: f64 = 0.0;
    let mut pair_separated = vec![false; h * h];
    let mut action_useful = vec![false; n_actions];
    for i in 0..h {
        for j in (i + 1)..h {
            for a in 0..n_actions {
                let delta = model.mean(i, a) - model.mean(j, a);
                if delta == 0.0 {
                    zero_kld_pairs.push((i, j, a));
                } else {
                    pair_separated[i * h + j] = true;
                    action_useful[a] = true;
                }
                let d2 = delta * delta;
                bound = bound.max(d2 * (1.0 + d2 / 4.0));
            }
        }
    }
    let pairs_ok = (0..h).all(|i| ((i + 1)..h).all(|j| pair_separated[i * h + j]));
    AssumptionReport {
        // a Gaussian divergence is zero only for identical means
        separation_ok: true,
        validity_ok: pairs_ok && action_useful.iter().all(|&u| u),
        llr_second_moment_bound: bound,
        zero_kld_pairs,
    }
}

/// The benchmark environment: base means drawn from {2, 8} per cell, each
/// perturbed once by `Unif[−0.1, 0.1]`; hypothesis 0 then copies hypothesis
/// `H−1` on every action except the last, where `μ[0] = 10 − μ[H−1]`.
pub fn generate_benchmark_instance(
    hypotheses: usize,
    actions: usize,
    stream: &mut RandomStream,
) -> Result<ObservationModel, ObservationError> {
    if hypotheses < 2 || actions == 0 {
        return Err(ObservationError::Shape { hypotheses, actions });
    }
    let mut rows: Vec<Vec<f64>> = (0..hypotheses)
        .map(|_| {
            (0..actions)
                .map(|_| {
                    let base = if stream.random_bool(0.5) { 2.0 } else { 8.0 };
                    base + stream.random_range(-0.1..=0.1)
                })
                .collect()
        })
        .collect();
    let last = rows[hypotheses - 1].clone();
    rows[0][..actions - 1].copy_from_slice(&last[..actions - 1]);
    rows[0][actions - 1] = 10.0 - last[actions - 1];
    make_gaussian_model(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng_stream;

    fn two_by_one(mi: f64, mj: f64) -> ObservationModel {
        make_gaussian_model(&[vec![mi], vec![mj]]).unwrap()
    }

    #[test]
    fn construction() {
        assert!(make_gaussian_model(&[vec![0.0], vec![1.0]]).is_ok());
        assert!(make_gaussian_model(&[vec![0.0, f64::NAN], vec![1.0, 2.0]]).is_err());
        assert!(make_gaussian_model(&[vec![0.0]]).is_err());
        assert!(make_gaussian_model(&[vec![], vec![]]).is_err());
        assert!(matches!(
            make_gaussian_model(&[vec![0.0, 1.0], vec![1.0]]),
            Err(ObservationError::Ragged { row: 1, .. })
        ));
        let inst = generate_benchmark_instance(32, 16, &mut rng_stream(1, 0)).unwrap();
        assert_eq!((inst.hypotheses(), inst.actions()), (32, 16));
    }

    #[test]
    fn density_llr_kld_examples() {
        let m = make_gaussian_model(&[vec![0.0], vec![2.0], vec![8.0]]).unwrap();
        let c = -0.918_938_533_204_672_7;
        assert!((m.log_density(0, 0, 0.0).unwrap() - c).abs() < 1e-15);
        assert!((m.log_density(1, 0, 2.0).unwrap() - c).abs() < 1e-15);
        assert!((m.log_density(1, 0, 0.0).unwrap() - (c - 2.0)).abs() < 1e-15);
        assert_eq!(m.llr(1, 2, 0, 5.0).unwrap(), 0.0);
        assert_eq!(m.llr(2, 2, 0, 3.7).unwrap(), 0.0);
        assert_eq!(m.llr(1, 2, 0, 2.0).unwrap(), 18.0);
        assert_eq!(m.kld(1, 2, 0).unwrap(), 18.0);
        assert_eq!(m.kld(1, 1, 0).unwrap(), 0.0);
        assert!((two_by_one(2.05, 7.95).kld(0, 1, 0).unwrap() - 17.405).abs() < 1e-12);
        assert!(matches!(m.kld(3, 0, 0), Err(ObservationError::Index { .. })));
        assert!(m.llr(0, 1, 1, 0.0).is_err());
        assert!(m.log_density(0, 5, 0.0).is_err());
    }

    #[test]
    fn llr_is_log_density_difference() {
        let m = generate_benchmark_instance(6, 4, &mut rng_stream(2, 0)).unwrap();
        let mut s = rng_stream(2, 1);
        for _ in 0..1000 {
            let i = s.random_range(0..6);
            let j = s.random_range(0..6);
            let a = s.random_range(0..4);
            let x = s.random_range(-5.0..15.0);
            let direct = m.log_density(i, a, x).unwrap() - m.log_density(j, a, x).unwrap();
            assert!((m.llr(i, j, a, x).unwrap() - direct).abs() < 1e-12);
            assert_eq!(m.kld(i, j, a).unwrap(), m.kld(j, i, a).unwrap());
        }
    }

    #[test]
    fn mean_llr_is_kld() {
        let m = two_by_one(2.05, 7.95);
        let mut s = rng_stream(3, 0);
        let n = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let l = m.llr_unchecked(0, 1, 0, m.sample(0, 0, &mut s));
            sum += l;
            sq += l * l;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 17.405).abs() < 4.0 * se, "{mean} ± {se}");
        // second moment against the closed-form bound Δ²(1+Δ²/4)
        let d2: f64 = 5.9 * 5.9;
        let second = sq / n as f64;
        assert!((second - d2 * (1.0 + d2 / 4.0)).abs() < 0.01 * second);
    }

    #[test]
    fn assumption_reports() {
        let r = validate_assumptions(&two_by_one(0.0, 1.0));
        assert!(r.separation_ok && r.validity_ok);
        assert_eq!(r.llr_second_moment_bound, 1.25);
        assert!(r.zero_kld_pairs.is_empty());

        let nominal = make_gaussian_model(&[vec![2.0, 8.0], vec![8.0, 2.0], vec![2.0, 2.0]]).unwrap();
        let r = validate_assumptions(&nominal);
        assert!(r.validity_ok);
        // d = 6: E[(d²/2 + dZ)²] = d⁴/4 + d²
        assert!((r.llr_second_moment_bound - 360.0).abs() < 1e-9);

        let useless = make_gaussian_model(&[vec![2.0, 5.0], vec![8.0, 5.0]]).unwrap();
        let r = validate_assumptions(&useless);
        assert!(!r.validity_ok);
        assert_eq!(r.zero_kld_pairs, vec![(0, 1, 1)]);

        let unseparated = make_gaussian_model(&[vec![2.0, 5.0], vec![2.0, 5.0], vec![8.0, 1.0]]).unwrap();
        assert!(!validate_assumptions(&unseparated).validity_ok);
    }

    #[test]
    fn benchmark_instance_structure() {
        let a = generate_benchmark_instance(32, 16, &mut rng_stream(9, 4)).unwrap();
        let b = generate_benchmark_instance(32, 16, &mut rng_stream(9, 4)).unwrap();
        assert_eq!(a, b);
        for act in 0..15 {
            assert_eq!(a.mean(0, act), a.mean(31, act));
        }
        assert_eq!(a.mean(0, 15), 10.0 - a.mean(31, 15));
        for i in 1..32 {
            for act in 0..16 {
                let m = a.mean(i, act);
                assert!((1.9..=2.1).contains(&m) || (7.9..=8.1).contains(&m));
            }
        }
        assert!(validate_assumptions(&a).validity_ok);
    }

    #[test]
    fn benchmark_bound_over_seeds() {
        let worst = 6.2f64 * 6.2 * (1.0 + 6.2 * 6.2 / 4.0);
        for seed in 0..50 {
            let m = generate_benchmark_instance(8, 4, &mut rng_stream(seed, 0)).unwrap();
            assert!(validate_assumptions(&m).llr_second_moment_bound <= worst);
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = generate_benchmark_instance(5, 3, &mut rng_stream(4, 0)).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert_eq!(ObservationModel::read_csv(&buf[..]).unwrap(), m);
        assert!(ObservationModel::read_csv("1,2\nx,3\n".as_bytes()).is_err());
    }
}

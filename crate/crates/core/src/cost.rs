//! Positive random action costs.
//!
//! Five parametric families with exact CDF, sampling, mean, truncated mean
//! `E[min{C, T}]`, overshoot (mean residual cost) `E[C − T | C > T]` and the
//! effective per-sample cost under a deadline,
//!
//! ```text
//! κ(T) = E[min{C, T}] / F(T),
//! ```
//!
//! the expected spend per *delivered* sample when every action is aborted at
//! `T`. A deadline lowers κ below the mean exactly when the overshoot at `T`
//! exceeds the mean.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::numerics::{find_root_bracketed, incomplete_beta, integrate_adaptive, ln_gamma, RandomStream, RootProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostModelError {
    #[error("invalid cost parameters: {0}")]
    InvalidParameter(String),
    #[error("cost distribution has no mass below T = {t}")]
    ZeroMass { t: f64 },
    #[error("cost distribution has no mass above T = {t}")]
    DegenerateTail { t: f64 },
    #[error("all {samples} draws exceeded T = {t}")]
    AllCensored { t: f64, samples: usize },
    #[error("Monte Carlo oracle needs at least 1000 draws, got {0}")]
    TooFewSamples(usize),
    #[error("cannot parse cost model {0:?}")]
    Parse(String),
}

/// Parameterisation of one of the supported cost families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostFamily {
    Exponential {
        rate: f64,
    },
    Erlang {
        shape: u32,
        rate: f64,
    },
    /// `Exp(rate1)` with probability `p`, otherwise `Exp(rate2)`.
    Hyperexponential {
        p: f64,
        rate1: f64,
        rate2: f64,
    },
    /// Support `[x_min, ∞)`, survival `(x_min/t)^alpha`.
    Pareto {
        x_min: f64,
        alpha: f64,
    },
    /// `scale` is the median, `shape` the tail index.
    LogLogistic {
        scale: f64,
        shape: f64,
    },
}

/// A validated cost distribution. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel(CostFamily);

/// Monte Carlo estimate of κ(T) with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn positive(name: &str, v: f64) -> Result<(), CostModelError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CostModelError::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Validate a family parameterisation.
pub fn make_cost_model(family: CostFamily) -> Result<CostModel, CostModelError> {
    match family {
        CostFamily::Exponential { rate } => positive("rate", rate)?,
        CostFamily::Erlang { shape, rate } => {
            if shape == 0 {
                return Err(CostModelError::InvalidParameter("Erlang shape must be at least 1".into()));
            }
            positive("rate", rate)?;
        }
        CostFamily::Hyperexponential { p, rate1, rate2 } => {
            if !(p > 0.0 && p < 1.0) {
                return Err(CostModelError::InvalidParameter(format!("mixing probability {p} not in (0, 1)")));
            }
            positive("rate1", rate1)?;
            positive("rate2", rate2)?;
            if rate1 == rate2 {
                return Err(CostModelError::InvalidParameter("hyperexponential rates must differ".into()));
            }
        }
        CostFamily::Pareto { x_min, alpha } => {
            positive("x_min", x_min)?;
            positive("alpha", alpha)?;
        }
        CostFamily::LogLogistic { scale, shape } => {
            positive("scale", scale)?;
            positive("shape", shape)?;
        }
    }
    Ok(CostModel(family))
}

impl CostModel {
    pub fn exponential(rate: f64) -> Result<Self, CostModelError> {
        make_cost_model(CostFamily::Exponential { rate })
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self, CostModelError> {
        make_cost_model(CostFamily::Erlang { shape, rate })
    }

    pub fn hyperexponential(p: f64, rate1: f64, rate2: f64) -> Result<Self, CostModelError> {
        make_cost_model(CostFamily::Hyperexponential { p, rate1, rate2 })
    }

    pub fn pareto(x_min: f64, alpha: f64) -> Result<Self, CostModelError> {
        make_cost_model(CostFamily::Pareto { x_min, alpha })
    }

    pub fn log_logistic(scale: f64, shape: f64) -> Result<Self, CostModelError> {
        make_cost_model(CostFamily::LogLogistic { scale, shape })
    }

    pub fn family(&self) -> CostFamily {
        self.0
    }

    pub fn family_name(&self) -> &'static str {
        match self.0 {
            CostFamily::Exponential { .. } => "exponential",
            CostFamily::Erlang { .. } => "erlang",
            CostFamily::Hyperexponential { .. } => "hyperexponential",
            CostFamily::Pareto { .. } => "pareto",
            CostFamily::LogLogistic { .. } => "loglogistic",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self.0 {
            CostFamily::Exponential { rate } => vec![rate],
            CostFamily::Erlang { shape, rate } => vec![shape as f64, rate],
            CostFamily::Hyperexponential { p, rate1, rate2 } => vec![p, rate1, rate2],
            CostFamily::Pareto { x_min, alpha } => vec![x_min, alpha],
            CostFamily::LogLogistic { scale, shape } => vec![scale, shape],
        }
    }

    /// A representative magnitude of the distribution (its median).
    pub fn scale(&self) -> f64 {
        self.median()
    }

    /// κ is convex in T for this family (used to pick the optimiser).
    pub fn kappa_is_convex(&self) -> bool {
        matches!(self.0, CostFamily::Pareto { .. })
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t.is_nan() || t <= 0.0 {
            return 0.0;
        }
        if t == f64::INFINITY {
            return 1.0;
        }
        match self.0 {
            CostFamily::Exponential { rate } => -(-rate * t).exp_m1(),
            CostFamily::Erlang { shape, rate } => erlang_lower(shape, rate * t),
            CostFamily::Hyperexponential { p, rate1, rate2 } => {
                p * -(-rate1 * t).exp_m1() + (1.0 - p) * -(-rate2 * t).exp_m1()
            }
            CostFamily::Pareto { x_min, alpha } => {
                if t <= x_min {
                    0.0
                } else {
                    -(alpha * (x_min / t).ln()).exp_m1()
                }
            }
            CostFamily::LogLogistic { scale, shape } => 1.0 / (1.0 + (t / scale).powf(-shape)),
        }
    }

    /// `P(C > t)`, computed directly rather than as `1 − cdf`.
    pub fn survival(&self, t: f64) -> f64 {
        if t.is_nan() || t <= 0.0 {
            return 1.0;
        }
        if t == f64::INFINITY {
            return 0.0;
        }
        match self.0 {
            CostFamily::Exponential { rate } => (-rate * t).exp(),
            CostFamily::Erlang { shape, rate } => erlang_upper(shape, rate * t),
            CostFamily::Hyperexponential { p, rate1, rate2 } => p * (-rate1 * t).exp() + (1.0 - p) * (-rate2 * t).exp(),
            CostFamily::Pareto { x_min, alpha } => {
                if t <= x_min {
                    1.0
                } else {
                    (x_min / t).powf(alpha)
                }
            }
            CostFamily::LogLogistic { scale, shape } => 1.0 / (1.0 + (t / scale).powf(shape)),
        }
    }

    /// One draw, by inverse CDF (Erlang: sum of exponentials; hyperexponential:
    /// pick the component, then invert).
    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        match self.0 {
            CostFamily::Exponential { rate } => -stream.uniform_open().ln() / rate,
            CostFamily::Erlang { shape, rate } => (0..shape).map(|_| -stream.uniform_open().ln()).sum::<f64>() / rate,
            CostFamily::Hyperexponential { p, rate1, rate2 } => {
                let rate = if stream.uniform_open() < p { rate1 } else { rate2 };
                -stream.uniform_open().ln() / rate
            }
            CostFamily::Pareto { x_min, alpha } => x_min * stream.uniform_open().powf(-1.0 / alpha),
            CostFamily::LogLogistic { scale, shape } => {
                let u = stream.uniform_open();
                scale * (u / (1.0 - u)).powf(1.0 / shape)
            }
        }
    }

    /// `E[C]`, or `+∞` when it diverges (Pareto α ≤ 1, LogLogistic β ≤ 1).
    pub fn mean(&self) -> f64 {
        match self.0 {
            CostFamily::Exponential { rate } => 1.0 / rate,
            CostFamily::Erlang { shape, rate } => shape as f64 / rate,
            CostFamily::Hyperexponential { p, rate1, rate2 } => p / rate1 + (1.0 - p) / rate2,
            CostFamily::Pareto { x_min, alpha } => {
                if alpha > 1.0 {
                    alpha * x_min / (alpha - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            CostFamily::LogLogistic { scale, shape } => {
                if shape > 1.0 {
                    (scale * PI / shape) / (PI / shape).sin()
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn median(&self) -> f64 {
        match self.0 {
            CostFamily::Exponential { rate } => LN_2 / rate,
            CostFamily::Pareto { x_min, alpha } => x_min * 2f64.powf(1.0 / alpha),
            CostFamily::LogLogistic { scale, .. } => scale,
            CostFamily::Erlang { .. } | CostFamily::Hyperexponential { .. } => {
                let mut hi = self.mean().max(1e-300);
                while self.cdf(hi) < 0.5 {
                    hi *= 2.0;
                }
                let problem = RootProblem::new(|t| self.cdf(t) - 0.5, 0.0, hi, hi * 1e-14);
                find_root_bracketed(&problem).expect("cdf − 1/2 changes sign on [0, hi]")
            }
        }
    }

    /// `E[min{C, T}] = ∫₀ᵀ P(C > t) dt`.
    pub fn truncated_mean(&self, t: f64) -> f64 {
        if t.is_nan() || t <= 0.0 {
            return 0.0;
        }
        if t == f64::INFINITY {
            return self.mean();
        }
        match self.0 {
            CostFamily::Exponential { rate } => -(-rate * t).exp_m1() / rate,
            CostFamily::Erlang { shape, rate } => {
                let x = rate * t;
                shape as f64 / rate * erlang_lower(shape + 1, x) + t * erlang_upper(shape, x)
            }
            CostFamily::Hyperexponential { p, rate1, rate2 } => {
                p * -(-rate1 * t).exp_m1() / rate1 + (1.0 - p) * -(-rate2 * t).exp_m1() / rate2
            }
            CostFamily::Pareto { x_min, alpha } => {
                if t <= x_min {
                    return t;
                }
                let ln_tau = (t / x_min).ln();
                let one_minus = 1.0 - alpha;
                // x_min · (1 + (τ^{1−α} − 1)/(1 − α)), continuous through α = 1
                let growth = if one_minus == 0.0 { ln_tau } else { (one_minus * ln_tau).exp_m1() / one_minus };
                x_min * (1.0 + growth)
            }
            CostFamily::LogLogistic { scale, shape } => {
                if shape > 1.0 {
                    let f = self.cdf(t);
                    if f <= 0.5 {
                        scale / shape
                            * incomplete_beta(f, 1.0 / shape, 1.0 - 1.0 / shape)
                                .expect("valid incomplete beta arguments")
                    } else {
                        self.mean() - self.excess(t)
                    }
                } else {
                    let z = t / scale;
                    scale * integrate_adaptive(|u| 1.0 / (1.0 + u.powf(shape)), 0.0, z, 1e-13 * z.max(1.0))
                }
            }
        }
    }

    /// `E[(C − T)^+] = ∫_T^∞ P(C > t) dt`.
    fn excess(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.mean() - t.max(0.0);
        }
        match self.0 {
            CostFamily::Exponential { rate } => (-rate * t).exp() / rate,
            CostFamily::Erlang { shape, rate } => {
                let x = rate * t;
                shape as f64 / rate * erlang_upper(shape + 1, x) - t * erlang_upper(shape, x)
            }
            CostFamily::Hyperexponential { p, rate1, rate2 } => {
                p * (-rate1 * t).exp() / rate1 + (1.0 - p) * (-rate2 * t).exp() / rate2
            }
            CostFamily::Pareto { x_min, alpha } => {
                if alpha <= 1.0 {
                    f64::INFINITY
                } else if t < x_min {
                    self.mean() - t
                } else {
                    t / (alpha - 1.0) * (x_min / t).powf(alpha)
                }
            }
            CostFamily::LogLogistic { scale, shape } => {
                if shape <= 1.0 {
                    return f64::INFINITY;
                }
                scale / shape
                    * incomplete_beta(self.survival(t), 1.0 - 1.0 / shape, 1.0 / shape)
                        .expect("valid incomplete beta arguments")
            }
        }
    }

    /// Mean residual cost `E[C − T | C > T]`.
    pub fn overshoot(&self, t: f64) -> Result<f64, CostModelError> {
        let tail = self.survival(t);
        if !(tail > 0.0) {
            return Err(CostModelError::DegenerateTail { t });
        }
        let t_pos = t.max(0.0);
        Ok(match self.0 {
            CostFamily::Exponential { rate } => 1.0 / rate,
            CostFamily::Erlang { shape, rate } => erlang_overshoot(shape, rate, t_pos),
            CostFamily::Hyperexponential { p, rate1, rate2 } => {
                // posterior weight of the first component given survival to T
                let eta = 1.0 / (1.0 + ((1.0 - p) / p).ln().exp() * ((rate1 - rate2) * t_pos).exp());
                eta / rate1 + (1.0 - eta) / rate2
            }
            CostFamily::Pareto { x_min, alpha } => {
                if alpha <= 1.0 {
                    f64::INFINITY
                } else if t_pos < x_min {
                    self.mean() - t_pos
                } else {
                    t_pos / (alpha - 1.0)
                }
            }
            CostFamily::LogLogistic { .. } => self.excess(t_pos) / tail,
        })
    }

    /// Effective cost per delivered sample with deadline `t`: `E[min{C,t}] / F(t)`.
    /// `t = ∞` gives the mean.
    pub fn kappa(&self, t: f64) -> Result<f64, CostModelError> {
        if t == f64::INFINITY {
            return Ok(self.mean());
        }
        let f = self.cdf(t);
        if !(f > 0.0) {
            return Err(CostModelError::ZeroMass { t });
        }
        if let CostFamily::Pareto { x_min, alpha } = self.0 {
            if (alpha - 1.0).abs() > 1e-3 {
                let tau = t / x_min;
                let tau_alpha_m1 = (alpha * tau.ln()).exp_m1();
                let numer = alpha * (tau_alpha_m1 + 1.0) - tau;
                return Ok(x_min / (alpha - 1.0) * numer / tau_alpha_m1);
            }
        }
        Ok(self.truncated_mean(t) / f)
    }

    /// Ratio estimator `mean(min{Cᵢ,T}) / mean(1{Cᵢ ≤ T})` over `n` fresh draws.
    pub fn kappa_mc_oracle(
        &self,
        t: f64,
        n: usize,
        stream: &mut RandomStream,
    ) -> Result<KappaEstimate, CostModelError> {
        if n < 1000 {
            return Err(CostModelError::TooFewSamples(n));
        }
        if !(self.cdf(t) > 0.0) {
            return Err(CostModelError::ZeroMass { t });
        }
        let (mut sy, mut sz, mut syy, mut szz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let c = self.sample(stream);
            let y = c.min(t);
            let z = if c <= t { 1.0 } else { 0.0 };
            sy += y;
            sz += z;
            syy += y * y;
            szz += z * z;
            syz += y * z;
        }
        if sz == 0.0 {
            return Err(CostModelError::AllCensored { t, samples: n });
        }
        let nf = n as f64;
        let (my, mz) = (sy / nf, sz / nf);
        let r = my / mz;
        let var_y = syy / nf - my * my;
        let var_z = szz / nf - mz * mz;
        let cov = syz / nf - my * mz;
        let var_r = ((var_y - 2.0 * r * cov + r * r * var_z) / (mz * mz * nf)).max(0.0);
        Ok(KappaEstimate { estimate: r, stderr: var_r.sqrt(), samples: n })
    }
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params().iter().map(|p| p.to_string()).collect();
        write!(f, "{}({})", self.family_name(), params.join(", "))
    }
}

impl FromStr for CostModel {
    type Err = CostModelError;

    /// Parses the [`Display`](fmt::Display) form, e.g. `pareto(1, 1.5)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || CostModelError::Parse(s.to_string());
        let s = s.trim();
        let open = s.find('(').ok_or_else(err)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(err)?;
        let name = s[..open].trim().to_ascii_lowercase();
        let args: Vec<f64> =
            inner.split(',').map(|a| a.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| err())?;
        let family = match (name.as_str(), args.as_slice()) {
            ("exponential", &[rate]) => CostFamily::Exponential { rate },
            ("erlang", &[k, rate]) => {
                if k.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&k) {
                    return Err(CostModelError::InvalidParameter(format!(
                        "Erlang shape {k} is not a positive integer"
                    )));
                }
                CostFamily::Erlang { shape: k as u32, rate }
            }
            ("hyperexponential", &[p, rate1, rate2]) => CostFamily::Hyperexponential { p, rate1, rate2 },
            ("pareto", &[x_min, alpha]) => CostFamily::Pareto { x_min, alpha },
            ("loglogistic", &[scale, shape]) => CostFamily::LogLogistic { scale, shape },
            _ => return Err(err()),
        };
        make_cost_model(family)
    }
}

fn poisson_log_term(n: u32, x: f64) -> f64 {
    n as f64 * x.ln() - x - ln_gamma(n as f64 + 1.0)
}

/// `P(Erlang(k, 1) > x) = e^{−x} Σ_{n<k} xⁿ/n!`.
fn erlang_upper(k: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < k as f64 + 1.0 {
        return 1.0 - erlang_lower_series(k, x);
    }
    (0..k).map(|n| poisson_log_term(n, x).exp()).sum::<f64>().min(1.0)
}

/// `P(Erlang(k, 1) ≤ x)`; the series form keeps relative accuracy for small x.
fn erlang_lower(k: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < k as f64 + 1.0 {
        erlang_lower_series(k, x)
    } else {
        1.0 - erlang_upper(k, x)
    }
}

fn erlang_lower_series(k: u32, x: f64) -> f64 {
    let mut n = k;
    let mut sum = 0.0;
    loop {
        let term = poisson_log_term(n, x).exp();
        sum += term;
        if term <= 1e-17 * sum || n > k + 10_000 {
            break;
        }
        n += 1;
    }
    sum.min(1.0)
}

/// `k/λ − x·S_{k−2}(x) / (λ·S_{k−1}(x))` with `S_m(x) = Σ_{n≤m} xⁿ/n!`, `x = λT`.
/// The partial sums are rescaled by their largest term so large `x` cannot
/// overflow.
fn erlang_overshoot(k: u32, rate: f64, t: f64) -> f64 {
    let x = rate * t;
    if x == 0.0 || k == 1 {
        return if k == 1 { 1.0 / rate } else { k as f64 / rate };
    }
    let ln_x = x.ln();
    let logs: Vec<f64> = (0..k).map(|n| n as f64 * ln_x - ln_gamma(n as f64 + 1.0)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let terms: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let s_full: f64 = terms.iter().sum();
    let s_short: f64 = terms[..k as usize - 1].iter().sum();
    (k as f64 - x * s_short / s_full) / rate
}

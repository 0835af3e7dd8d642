use super::figures::median_rule_sides;
use crate::cost::CostModel;
use crate::deadline::pareto_optimal_deadline;
use crate::numerics::integrate_adaptive;

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, failures: Vec<String>, ok_detail: String) -> VerifyCheck {
    let passed = failures.is_empty();
    let detail = if passed {
        ok_detail
    } else {
        let more = failures.len().saturating_sub(3);
        let mut d = failures.into_iter().take(3).collect::<Vec<_>>().join("; ");
        if more > 0 {
            d.push_str(&format!("; and {more} more"));
        }
        d
    };
    VerifyCheck { name, passed, detail }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn model(m: Result<CostModel, crate::cost::CostModelError>) -> CostModel {
    m.expect("fixed valid parameters")
}

/// Run every closed-form property check of the cost and deadline layers.
///
/// Each check is independent; a failing one does not stop the others.
pub fn run_verify_suite() -> Vec<VerifyCheck> {
    vec![
        pareto_optimum(),
        pareto_crossing(),
        pareto_optimum_is_global(),
        erlang_deadlines_hurt(),
        hyperexponential_deadlines_help(),
        exponential_memoryless(),
        criterion_consistency(),
        loglogistic_closed_form(),
        loglogistic_median_rule(),
        erlang_curves_coincide_at_zero(),
    ]
}

fn pareto_optimum() -> VerifyCheck {
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for alpha in [1.05, 1.5, 2.0, 3.0, 4.85] {
        match pareto_optimal_deadline(1.0, alpha) {
            Ok(opt) => {
                let tau = opt.t_star;
                let residual = (alpha - 1.0) * tau.powf(alpha) - alpha * alpha * tau.powf(alpha - 1.0) + 1.0;
                worst = worst.max(residual.abs());
                if residual.abs() > 1e-6 {
                    fails.push(format!("alpha {alpha}: residual {residual:e}"));
                }
            }
            Err(e) => fails.push(format!("alpha {alpha}: {e}")),
        }
    }
    match pareto_optimal_deadline(1.0, 1.5) {
        Ok(opt) if (opt.t_star - 3.41825).abs() <= 1e-3 => {}
        Ok(opt) => fails.push(format!("T*(1, 1.5) = {}", opt.t_star)),
        Err(e) => fails.push(e.to_string()),
    }
    check("pareto_optimum", fails, format!("T*(1, 1.5) ≈ 3.41825, worst residual {worst:.1e}"))
}

fn pareto_crossing() -> VerifyCheck {
    let mut fails = Vec::new();
    for (x_min, alpha) in [(1.0, 1.5), (2.0, 1.2), (0.5, 3.0)] {
        let m = model(CostModel::pareto(x_min, alpha));
        let mean = m.mean();
        let threshold = alpha * x_min;
        let at = m.kappa(threshold).unwrap_or(f64::NAN);
        if (at - mean).abs() > 1e-6 * mean {
            fails.push(format!("{m}: kappa at alpha*x_min is {at}, mean {mean}"));
        }
        for f in [0.9, 0.99, 1.01, 1.5, 4.0] {
            let t = threshold * f;
            if t <= x_min {
                continue;
            }
            let k = m.kappa(t).unwrap_or(f64::NAN);
            let ok = if t < threshold { k > mean } else { k < mean };
            if !ok {
                fails.push(format!("{m}: kappa({t}) = {k} vs mean {mean}"));
            }
        }
    }
    check("pareto_crossing", fails, "kappa crosses the mean at alpha*x_min".into())
}

fn pareto_optimum_is_global() -> VerifyCheck {
    let mut fails = Vec::new();
    for alpha in [1.1, 1.5, 2.0, 3.0] {
        let m = model(CostModel::pareto(1.0, alpha));
        let Ok(opt) = pareto_optimal_deadline(1.0, alpha) else {
            fails.push(format!("alpha {alpha}: no optimum"));
            continue;
        };
        for t in log_grid(1.0 + 1e-6, 100.0, 200) {
            let k = m.kappa(t).unwrap_or(f64::NAN);
            if !(k >= opt.kappa_star * (1.0 - 1e-12)) {
                fails.push(format!("alpha {alpha}: kappa({t}) = {k} below {}", opt.kappa_star));
            }
        }
    }
    check("pareto_optimum_is_global", fails, "no grid point beats T*".into())
}

fn erlang_deadlines_hurt() -> VerifyCheck {
    let mut fails = Vec::new();
    for k in [2u32, 3, 5] {
        for rate in [0.5, 1.0, 3.0] {
            let m = model(CostModel::erlang(k, rate));
            for t in log_grid(0.01 / rate, 20.0 / rate, 40) {
                let over = m.overshoot(t).unwrap_or(f64::NAN);
                let kappa = m.kappa(t).unwrap_or(f64::NAN);
                if !(over < m.mean() && kappa > m.mean()) {
                    fails.push(format!("{m} T={t}: overshoot {over}, kappa {kappa}"));
                }
            }
        }
    }
    check("erlang_deadlines_hurt", fails, "overshoot < mean < kappa on 360 points".into())
}

fn hyperexponential_deadlines_help() -> VerifyCheck {
    let mut fails = Vec::new();
    let mut points = 0;
    for p in [0.1, 0.5, 0.9] {
        for a in [0.2, 1.0, 5.0] {
            for b in [0.3, 2.0, 7.0] {
                let m = model(CostModel::hyperexponential(p, a, b));
                for t in log_grid(0.01 * m.scale(), 100.0 * m.scale(), 40) {
                    let over = m.overshoot(t).unwrap_or(f64::NAN);
                    if !(over > m.mean()) {
                        fails.push(format!("{m} T={t}: overshoot {over}"));
                    }
                    // Below 1e-8 survival, κ equals the mean to machine precision.
                    if m.survival(t) >= 1e-8 {
                        let kappa = m.kappa(t).unwrap_or(f64::NAN);
                        if !(kappa < m.mean()) {
                            fails.push(format!("{m} T={t}: kappa {kappa}"));
                        }
                    }
                    points += 1;
                }
            }
        }
    }
    check("hyperexponential_deadlines_help", fails, format!("overshoot > mean on {points} points"))
}

fn exponential_memoryless() -> VerifyCheck {
    let mut fails = Vec::new();
    for rate in [0.1, 1.0, 10.0] {
        let m = model(CostModel::exponential(rate));
        for t in log_grid(0.01 / rate, 100.0 / rate, 40) {
            let k = m.kappa(t).unwrap_or(f64::NAN);
            if !((k - m.mean()).abs() <= 1e-9 * m.mean()) {
                fails.push(format!("{m} T={t}: kappa {k}"));
            }
        }
    }
    check("exponential_memoryless", fails, "kappa equals the mean to 1e-9".into())
}

fn criterion_consistency() -> VerifyCheck {
    let models = [
        model(CostModel::erlang(3, 1.0)),
        model(CostModel::hyperexponential(0.3, 0.5, 4.0)),
        model(CostModel::pareto(1.0, 1.5)),
        model(CostModel::log_logistic(4.0, 1.5)),
        model(CostModel::log_logistic(4.0, 3.0)),
    ];
    let mut fails = Vec::new();
    for m in &models {
        for t in log_grid(0.05 * m.scale(), 20.0 * m.scale(), 40) {
            let (Ok(k), Ok(over)) = (m.kappa(t), m.overshoot(t)) else { continue };
            let (lhs, rhs) = (k - m.mean(), m.mean() - over);
            if lhs.abs() > 1e-9 * m.mean() && rhs.abs() > 1e-9 * m.mean() && lhs.signum() != rhs.signum() {
                fails.push(format!("{m} T={t}: kappa-mean {lhs:e}, mean-overshoot {rhs:e}"));
            }
        }
    }
    check("criterion_consistency", fails, "kappa < mean exactly when overshoot > mean".into())
}

fn loglogistic_closed_form() -> VerifyCheck {
    let mut fails = Vec::new();
    for shape in [1.1, 1.5, 2.0, 3.0] {
        let m = model(CostModel::log_logistic(4.0, shape));
        for t in [0.5, 2.0, 4.0, 10.0, 40.0] {
            let quad = integrate_adaptive(|x| m.survival(x), 0.0, t, 1e-12);
            let closed = m.truncated_mean(t);
            if (quad - closed).abs() > 1e-8 {
                fails.push(format!("{m} T={t}: closed {closed}, quadrature {quad}"));
            }
        }
    }
    check("loglogistic_closed_form", fails, "incomplete-beta truncated mean matches quadrature to 1e-8".into())
}

fn loglogistic_median_rule() -> VerifyCheck {
    let mut fails = Vec::new();
    for i in 1..=100 {
        let b = 1.0 + f64::from(i) / 100.0;
        let m = model(CostModel::log_logistic(4.0, b));
        let k = m.kappa(4.0).unwrap_or(f64::NAN);
        if !(k <= m.mean() * (1.0 + 1e-12)) {
            fails.push(format!("beta {b}: kappa(alpha) {k} above mean {}", m.mean()));
        }
        let (lhs, rhs) = median_rule_sides(b);
        if !(lhs <= rhs * (1.0 + 1e-12)) {
            fails.push(format!("beta {b}: {lhs} > {rhs}"));
        }
    }
    let m = model(CostModel::log_logistic(4.0, 2.5));
    let k = m.kappa(4.0).unwrap_or(f64::NAN);
    if !(k > m.mean()) {
        fails.push(format!("beta 2.5: kappa(alpha) {k} not above mean {}", m.mean()));
    }
    check("loglogistic_median_rule", fails, "median deadline helps for beta in (1, 2], hurts at 2.5".into())
}

fn erlang_curves_coincide_at_zero() -> VerifyCheck {
    let m = model(CostModel::erlang(2, 1.0));
    let mut fails = Vec::new();
    for i in 0..=200 {
        let t = f64::from(i) / 100.0;
        let gap = m.overshoot(t).unwrap_or(f64::NAN) - m.mean();
        let coincide = gap.abs() <= 1e-12;
        if coincide != (i == 0) {
            fails.push(format!("T={t}: gap {gap:e}"));
        }
    }
    check("erlang_curves_coincide_at_zero", fails, "overshoot equals the mean only at T = 0".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_runs_every_check() {
        let results = run_verify_suite();
        assert_eq!(results.len(), 10);
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}

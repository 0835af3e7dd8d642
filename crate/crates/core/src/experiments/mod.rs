//! Scenario files, simulation runs, figure data and the property checks
//! behind `casht verify`.
//!
//! Every CSV written here has a header line and a fixed column order.
//! Floating-point cells carry 17 significant digits, so parsing them gives
//! back the exact value.

mod config;
mod figures;
mod scenario;
mod verify;

pub use config::{load_config, ConfigError, CostRule, Scenario};
pub use figures::{
    emit_kappa_curve, kappa_table, loglogistic_scenario, median_rule_sides, pareto_scenario, reproduce_figure, Figure,
    FigureError, KappaPoint, Scale, Table, KAPPA_COLUMNS,
};
pub use scenario::{
    draw_cost_models, draw_instance, linear_fit, log_delta_fit, run_scenario, LinearFit, ResultRow, ScenarioError,
    ScenarioReport, RESULT_COLUMNS,
};
pub use verify::{run_verify_suite, VerifyCheck};

/// Format a float with 17 significant digits; infinities as `inf`/`-inf`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_float;

    #[test]
    fn floats_round_trip() {
        for x in [0.0, 1.0 / 3.0, 3.41825, 1e-300, 2.0f64.sqrt() * 1e17, -0.1] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(f64::INFINITY).parse::<f64>().unwrap(), f64::INFINITY);
    }
}

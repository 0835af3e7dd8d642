use thiserror::Error;

use super::config::{CostRule, Scenario};
use super::fmt_float;
use super::scenario::{run_scenario, ScenarioError, ScenarioReport};
use crate::cost::CostModel;
use crate::deadline::{benefit_verdict, pareto_optimal_deadline, DeadlineError, DeadlineMode, Verdict};
use crate::numerics::{beta, incomplete_beta};

#[derive(Debug, Error)]
pub enum FigureError {
    #[error("no figure {0} (available: 2, 3, 4, 5, 6, 7)")]
    UnknownId(u32),
    #[error(transparent)]
    Deadline(#[from] DeadlineError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// A column-labelled table of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory CSV");
        for row in &self.rows {
            w.write_record(row).expect("in-memory CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
    }
}

/// One point of a κ curve. Cells that are undefined at `t` are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaPoint {
    pub t: f64,
    /// Empty where `F(t) = 0`.
    pub kappa: Option<f64>,
    pub mean: f64,
    /// Empty where `F(t) = 1`.
    pub overshoot: Option<f64>,
    pub verdict: Option<Verdict>,
}

/// Column order of κ curves.
pub const KAPPA_COLUMNS: [&str; 7] = ["family", "params", "T", "kappa", "mean", "overshoot", "verdict"];

/// Evaluate κ, the mean, the overshoot and the deadline verdict on `grid`.
pub fn emit_kappa_curve(model: &CostModel, grid: &[f64]) -> Vec<KappaPoint> {
    grid.iter()
        .map(|&t| {
            let kappa = model.kappa(t).ok();
            KappaPoint {
                t,
                kappa,
                mean: model.mean(),
                overshoot: model.overshoot(t).ok(),
                verdict: kappa.and_then(|_| benefit_verdict(model, t).ok()).map(|v| v.verdict),
            }
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// κ-curve rows as a [`Table`]; parameters are joined by `;`.
pub fn kappa_table(model: &CostModel, points: &[KappaPoint]) -> Table {
    let params = model.params().iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";");
    Table {
        columns: KAPPA_COLUMNS.to_vec(),
        rows: points
            .iter()
            .map(|p| {
                vec![
                    model.family_name().to_string(),
                    params.clone(),
                    fmt_float(p.t),
                    opt(p.kappa),
                    fmt_float(p.mean),
                    opt(p.overshoot),
                    p.verdict.map(|v| v.to_string()).unwrap_or_default(),
                ]
            })
            .collect(),
    }
}

fn marked_kappa_table(model: &CostModel, grid: &[f64], marks: &[(f64, &str)]) -> Table {
    let points = emit_kappa_curve(model, grid);
    let mut table = kappa_table(model, &points);
    table.columns.push("marker");
    for (row, p) in table.rows.iter_mut().zip(&points) {
        let mark = marks.iter().find(|(t, _)| *t == p.t).map_or("", |(_, m)| m);
        row.push(mark.to_string());
    }
    table
}

/// Data behind a figure: a series table, or a full scenario run.
#[derive(Debug, Clone)]
pub enum Figure {
    Series(Table),
    Scenario(Box<ScenarioReport>),
}

/// Run size for the simulation figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// 8 hypotheses, 4 actions, 2000 trials.
    Desk,
    /// 32 hypotheses, 16 actions, 50000 trials.
    Full,
}

/// Log-Logistic(α_a, α_a) costs with `α_a ~ Unif[1, 2]` and median deadlines,
/// at desk scale.
pub fn loglogistic_scenario() -> Scenario {
    Scenario {
        name: "figure4_loglogistic".into(),
        cost_rule: CostRule::LogLogisticEqual { alpha: (1.0, 2.0) },
        deadline: DeadlineMode::Median,
        ..Scenario::default()
    }
}

/// Pareto costs with `x_min ~ Unif[2, 3]`, `α ~ Unif[1.1, 2]` and optimal
/// deadlines, at desk scale.
pub fn pareto_scenario() -> Scenario {
    Scenario {
        name: "figure5_pareto".into(),
        cost_rule: CostRule::ParetoUniform { x_min: (2.0, 3.0), alpha: (1.1, 2.0) },
        deadline: DeadlineMode::Optimal,
        ..Scenario::default()
    }
}

/// Regenerate the data series of figure `id`.
///
/// * 2: κ and the mean of Pareto(1, 1.5) for `T ∈ [1, 10]`, with the crossing
///   `T = 1.5` and the optimum `T*` marked.
/// * 3: the same for Log-Logistic(4, 1.5) on `T ∈ [0.1, 20]`, median marked.
/// * 4, 5: the Log-Logistic and Pareto simulation scenarios.
/// * 6: overshoot and mean of Erlang(2, 1) for `T ∈ [0, 2]`.
/// * 7: `(2/β)·B(½; 1/β, 1−1/β)` against `B(1−1/β, 1+1/β)` for `β ∈ (1, 3]`.
///
/// `scale` only affects figures 4 and 5.
pub fn reproduce_figure(id: u32, scale: Scale) -> Result<Figure, FigureError> {
    let sized = |s: Scenario| if scale == Scale::Full { s.full_scale() } else { s };
    Ok(match id {
        2 => Figure::Series(figure2()?),
        3 => Figure::Series(figure3()),
        4 => Figure::Scenario(Box::new(run_scenario(&sized(loglogistic_scenario()))?)),
        5 => Figure::Scenario(Box::new(run_scenario(&sized(pareto_scenario()))?)),
        6 => Figure::Series(figure6()),
        7 => Figure::Series(figure7()),
        other => return Err(FigureError::UnknownId(other)),
    })
}

fn figure2() -> Result<Table, DeadlineError> {
    let model = CostModel::pareto(1.0, 1.5)?;
    let t_star = pareto_optimal_deadline(1.0, 1.5)?.t_star;
    let mut grid: Vec<f64> = (100..=1000).map(|i| f64::from(i) / 100.0).collect();
    let at = grid.partition_point(|&t| t < t_star);
    grid.insert(at, t_star);
    Ok(marked_kappa_table(&model, &grid, &[(1.5, "crossing"), (t_star, "t_star")]))
}

fn figure3() -> Table {
    let model = CostModel::log_logistic(4.0, 1.5).expect("valid parameters");
    let grid: Vec<f64> = (1..=200).map(|i| f64::from(i) / 10.0).collect();
    marked_kappa_table(&model, &grid, &[(4.0, "median")])
}

fn figure6() -> Table {
    let model = CostModel::erlang(2, 1.0).expect("valid parameters");
    let mean = model.mean();
    let rows = (0..=200)
        .map(|i| {
            let t = f64::from(i) / 100.0;
            let conditional = model.overshoot(t).expect("Erlang survival is positive");
            vec![
                fmt_float(t),
                fmt_float(conditional),
                fmt_float(mean),
                fmt_float(conditional - mean),
                ((conditional - mean).abs() <= 1e-12).to_string(),
            ]
        })
        .collect();
    Table { columns: vec!["T", "conditional_mean", "mean", "gap", "coincide"], rows }
}

/// Both sides of the median-deadline comparison for Log-Logistic shape `b`:
/// `κ(α)/α` and `E[C]/α`.
pub fn median_rule_sides(b: f64) -> (f64, f64) {
    let lhs = 2.0 / b * incomplete_beta(0.5, 1.0 / b, 1.0 - 1.0 / b).expect("shape above 1");
    (lhs, beta(1.0 - 1.0 / b, 1.0 + 1.0 / b))
}

/// Relative slack for calling the two sides equal at `β = 2`.
const SIDES_TOL: f64 = 1e-12;

fn figure7() -> Table {
    let rows = (1..=200)
        .map(|i| {
            let b = 1.0 + f64::from(i) / 100.0;
            let (lhs, rhs) = median_rule_sides(b);
            vec![fmt_float(b), fmt_float(lhs), fmt_float(rhs), (lhs <= rhs * (1.0 + SIDES_TOL)).to_string()]
        })
        .collect();
    Table { columns: vec!["beta", "lhs", "rhs", "holds"], rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(id: u32) -> Table {
        match reproduce_figure(id, Scale::Desk).unwrap() {
            Figure::Series(t) => t,
            Figure::Scenario(_) => panic!("figure {id} is a series"),
        }
    }

    fn col(t: &Table, name: &str) -> usize {
        t.columns.iter().position(|c| *c == name).unwrap()
    }

    #[test]
    fn figure2_crossing_and_optimum() {
        let t = series(2);
        let (tc, kc, mc) = (col(&t, "T"), col(&t, "kappa"), col(&t, "marker"));
        assert_eq!(t.rows[0][kc], "", "F(1) = 0 leaves κ empty");
        let crossing = t.rows.iter().find(|r| r[mc] == "crossing").unwrap();
        assert!((crossing[kc].parse::<f64>().unwrap() - 3.0).abs() < 1e-9);
        let star = t.rows.iter().find(|r| r[mc] == "t_star").unwrap();
        assert!((star[tc].parse::<f64>().unwrap() - 3.41825).abs() < 1e-3);
        let k_star: f64 = star[kc].parse().unwrap();
        for r in t.rows.iter().skip(1) {
            assert!(r[kc].parse::<f64>().unwrap() >= k_star);
        }
    }

    #[test]
    fn figure3_median_below_mean() {
        let t = series(3);
        let row = t.rows.iter().find(|r| r[col(&t, "marker")] == "median").unwrap();
        assert!(row[col(&t, "kappa")].parse::<f64>().unwrap() < row[col(&t, "mean")].parse::<f64>().unwrap());
        assert_eq!(row[col(&t, "verdict")], "improves");
    }

    #[test]
    fn figure6_and_7_shapes() {
        let six = series(6);
        assert_eq!(six.rows.len(), 201);
        let seven = series(7);
        assert_eq!(seven.rows.len(), 200);
        assert!(matches!(reproduce_figure(8, Scale::Desk), Err(FigureError::UnknownId(8))));
    }

    #[test]
    fn kappa_curve_marks_empty_cells() {
        let m = CostModel::pareto(2.0, 1.5).unwrap();
        let pts = emit_kappa_curve(&m, &[1.0, 2.5]);
        assert_eq!(pts[0].kappa, None);
        assert_eq!(pts[0].verdict, None);
        assert_eq!(pts[1].verdict, Some(Verdict::Degrades));
    }
}

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use casht::cost::CostModel;
use casht::deadline::{benefit_verdict, plan_deadlines, DeadlineMode};
use casht::experiments::{
    emit_kappa_curve, fmt_float, kappa_table, load_config, reproduce_figure, run_scenario, run_verify_suite, Figure,
    Scale, Table,
};
use clap::{Parser, Subcommand};

/// Cost-aware sequential hypothesis testing with per-action deadlines.
#[derive(Parser)]
#[command(name = "casht", version)]
struct Cli {
    /// Default directory for simulation and figure outputs.
    #[arg(long, env = "CASHT_OUT_DIR", default_value = "casht-out", global = true)]
    out_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effective cost, mean and overshoot of a cost model over deadlines.
    Kappa {
        /// Cost model, e.g. `pareto(1, 1.5)` or `loglogistic(4, 1.5)`.
        #[arg(long)]
        model: String,
        /// Deadlines to evaluate, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "grid")]
        t: Vec<f64>,
        /// Evenly spaced deadlines `lo,hi,count`.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        grid: Option<Vec<f64>>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan one deadline per cost model.
    Deadline {
        /// Cost models, one per action, separated by `;`.
        #[arg(long, value_delimiter = ';', required = true)]
        models: Vec<String>,
        #[arg(long, default_value = "optimal")]
        mode: DeadlineMode,
        /// Deadlines for `--mode fixed`, comma separated.
        #[arg(long, value_delimiter = ',')]
        fixed: Option<Vec<f64>>,
    },
    /// Check the closed-form properties of the cost and deadline layers.
    Verify,
    /// Run a scenario file and write results.csv, manifest.txt and instance.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the trial seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the scenario's `output_dir`, then
        /// `<out-root>/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use 32 hypotheses, 16 actions and 50000 trials.
        #[arg(long)]
        full_scale: bool,
        /// Override the worker thread count.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Regenerate the data behind a figure (2, 3, 4, 5, 6 or 7).
    Figure {
        #[arg(long)]
        id: u32,
        /// CSV file for series figures, directory for simulation figures.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run simulation figures at desk scale instead of full scale.
        #[arg(long)]
        desk: bool,
    },
}

fn emit(csv: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(path, csv).with_context(|| format!("writing {}", path.display()))
        }
        None => io::stdout().write_all(csv.as_bytes()).context("writing to stdout"),
    }
}

fn kappa(model: &str, t: Vec<f64>, grid: Option<Vec<f64>>, out: Option<&Path>) -> Result<()> {
    let model: CostModel = model.parse().with_context(|| format!("parsing --model {model:?}"))?;
    let points = match grid.as_deref() {
        Some(&[lo, hi, n]) if n >= 2.0 && n.fract() == 0.0 && lo < hi => {
            let n = n as usize;
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
        Some(_) => bail!("--grid expects lo,hi,count with lo < hi and an integer count of at least 2"),
        None if t.is_empty() => bail!("give deadlines with --t or --grid"),
        None => t,
    };
    emit(&kappa_table(&model, &emit_kappa_curve(&model, &points)).to_csv(), out)
}

fn deadline(models: &[String], mode: DeadlineMode, fixed: Option<&[f64]>) -> Result<()> {
    let models: Vec<CostModel> = models
        .iter()
        .map(|m| m.trim().parse().with_context(|| format!("parsing model {m:?}")))
        .collect::<Result<_>>()?;
    let plan = plan_deadlines(&models, mode, fixed)?;
    let mut table =
        Table { columns: vec!["action", "model", "deadline", "kappa", "mean", "verdict"], rows: Vec::new() };
    for (a, m) in models.iter().enumerate() {
        let t = plan.deadlines[a];
        let verdict = if t.is_finite() { benefit_verdict(m, t)?.verdict.to_string() } else { "none".into() };
        table.rows.push(vec![
            a.to_string(),
            m.to_string(),
            fmt_float(t),
            fmt_float(plan.effective_costs[a]),
            fmt_float(m.mean()),
            verdict,
        ]);
    }
    emit(&table.to_csv(), None)
}

fn verify() -> Result<bool> {
    let checks = run_verify_suite();
    let mut stdout = io::stdout().lock();
    for c in &checks {
        writeln!(stdout, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(stdout, "{} of {} checks passed", checks.len() - failed, checks.len())?;
    Ok(failed == 0)
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Kappa { model, t, grid, out } => kappa(&model, t, grid, out.as_deref())?,
        Command::Deadline { models, mode, fixed } => deadline(&models, mode, fixed.as_deref())?,
        Command::Verify => return verify(),
        Command::Simulate { config, seed, out, full_scale, parallelism } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut scenario = load_config(&text).with_context(|| format!("in {}", config.display()))?;
            if full_scale {
                scenario = scenario.full_scale();
            }
            if let Some(seed) = seed {
                scenario.seed = seed;
            }
            if let Some(p) = parallelism {
                scenario.parallelism = p;
            }
            let dir = out.or_else(|| scenario.output_dir.clone()).unwrap_or_else(|| cli.out_root.join(&scenario.name));
            let report = run_scenario(&scenario).with_context(|| format!("scenario {:?}", scenario.name))?;
            report.write_to(&dir)?;
            println!("wrote {}", dir.display());
        }
        Command::Figure { id, out, desk } => {
            let scale = if desk { Scale::Desk } else { Scale::Full };
            match reproduce_figure(id, scale)? {
                Figure::Series(table) => emit(&table.to_csv(), out.as_deref())?,
                Figure::Scenario(report) => {
                    let dir = out.unwrap_or_else(|| cli.out_root.join(format!("figure{id}")));
                    report.write_to(&dir)?;
                    println!("wrote {}", dir.display());
                }
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

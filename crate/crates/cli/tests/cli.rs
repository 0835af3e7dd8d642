use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn casht(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casht")).args(args).env("CASHT_OUT_DIR", out_root).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn kappa_prints_a_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = casht(&["kappa", "--model", "pareto(1, 1.5)", "--t", "1.5,3.41825"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("family,params,T,kappa,mean,overshoot,verdict"));
    let at_crossing: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!((at_crossing[3].parse::<f64>().unwrap() - 3.0).abs() < 1e-9);
    assert_eq!(at_crossing[6], "neutral");

    let o = casht(&["kappa", "--model", "weibull(1, 2)", "--t", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn deadline_plans_each_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = casht(&["deadline", "--models", "pareto(1, 1.5); loglogistic(4, 1.5)"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<String>> = csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    assert!((rows[0][2].parse::<f64>().unwrap() - 3.41825).abs() < 1e-3);
    assert_eq!(rows[1][2].parse::<f64>().unwrap(), 4.0);
}

#[test]
fn verify_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = casht(&["verify"], dir.path());
    let text = stdout(&o);
    let checks = text.lines().filter(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")).count();
    assert_eq!(checks, 10);
    assert_eq!(o.status.success(), !text.contains("FAIL "));
    assert!(o.status.success(), "{text}");
}

#[test]
fn figure_series_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig7.csv");
    let o = casht(&["figure", "--id", "7", "--out", path.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("beta,lhs,rhs,holds\n"));
    assert_eq!(text.lines().count(), 201);

    let o = casht(&["figure", "--id", "9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no figure 9"));
}

#[test]
fn simulate_writes_replayable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.conf");
    fs::write(
        &config,
        "name = tiny\nhypotheses = 4\nactions = 3\ntrials = 50\ndeltas = 0.1, 0.01\n\
         policies = ca_chernoff\ncost.rule = pareto_uniform\n",
    )
    .unwrap();
    let o = casht(&["simulate", "--config", config.to_str().unwrap(), "--seed", "9"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = dir.path().join("tiny");
    let results = fs::read_to_string(first.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 2 * 2);
    let manifest = first.join("manifest.txt");
    assert!(fs::read_to_string(&manifest).unwrap().contains("seed = 9"));

    let replay = dir.path().join("replay");
    let o = casht(
        &["simulate", "--config", manifest.to_str().unwrap(), "--out", replay.to_str().unwrap(), "--parallelism", "3"],
        dir.path(),
    );
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(replay.join("results.csv")).unwrap(), results);
    assert_eq!(
        fs::read_to_string(replay.join("instance.csv")).unwrap(),
        fs::read_to_string(first.join("instance.csv")).unwrap()
    );
}

#[test]
fn bad_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.conf");
    fs::write(&config, "cost.rule = pareto_uniform\ndelta = 0.1\n").unwrap();
    let o = casht(&["simulate", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2: unknown key \"delta\""));
}

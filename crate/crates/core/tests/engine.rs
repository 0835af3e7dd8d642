use casht::cost::CostModel;
use casht::deadline::{plan_deadlines, DeadlineMode, DeadlinePlan};
use casht::engine::{
    run_batch, run_batch_records, run_trial, run_trial_traced, summarize, trial_substreams, wald_consistency,
    BatchConfig, EngineError, Timing, TrialSetup, TruthRule, DEFAULT_MAX_STEPS,
};
use casht::numerics::rng_stream;
use casht::observation::{generate_benchmark_instance, make_gaussian_model, ObservationModel};
use casht::policies::{prepare_policy, PolicyConfig, PolicyKind, PreparedPolicy};

struct Desk {
    model: ObservationModel,
    costs: Vec<CostModel>,
    plan: DeadlinePlan,
}

fn desk(seed: u64, mode: DeadlineMode) -> Desk {
    let mut s = rng_stream(seed, 0);
    let model = generate_benchmark_instance(8, 4, &mut s).unwrap();
    let costs: Vec<CostModel> = (0..4)
        .map(|_| {
            let x_min = 2.0 + s.uniform_open();
            let alpha = 1.1 + 0.9 * s.uniform_open();
            CostModel::pareto(x_min, alpha).unwrap()
        })
        .collect();
    let plan = plan_deadlines(&costs, mode, None).unwrap();
    Desk { model, costs, plan }
}

fn prepared(d: &Desk, kind: PolicyKind, delta: f64) -> PreparedPolicy {
    prepare_policy(&d.model, &PolicyConfig::new(kind, delta, d.plan.effective_costs.clone())).unwrap()
}

fn setup<'a>(d: &'a Desk, p: &'a PreparedPolicy, plan: &'a DeadlinePlan, timing: Timing) -> TrialSetup<'a> {
    TrialSetup { policy: p, model: &d.model, costs: &d.costs, plan, timing, max_steps: DEFAULT_MAX_STEPS }
}

#[test]
fn deadline_below_support_is_rejected() {
    let model = make_gaussian_model(&[vec![0.0], vec![4.0]]).unwrap();
    let costs = [CostModel::pareto(1.0, 1.5).unwrap()];
    let plan = DeadlinePlan { deadlines: vec![0.5], mode: DeadlineMode::Fixed, effective_costs: vec![1.0] };
    let p = prepare_policy(&model, &PolicyConfig::new(PolicyKind::CaChernoff, 0.01, vec![1.0])).unwrap();
    let s =
        TrialSetup { policy: &p, model: &model, costs: &costs, plan: &plan, timing: Timing::ExAnte, max_steps: 100 };
    assert!(matches!(run_trial(&s, 0, &mut rng_stream(1, 0)), Err(EngineError::InvalidPlan { action: 0, .. })));
}

#[test]
fn single_action_policy_is_accurate() {
    let model = make_gaussian_model(&[vec![0.0], vec![3.0]]).unwrap();
    let costs = [CostModel::exponential(1.0).unwrap()];
    let plan = plan_deadlines(&costs, DeadlineMode::None, None).unwrap();
    let p =
        prepare_policy(&model, &PolicyConfig::new(PolicyKind::CaChernoff, 1e-3, plan.effective_costs.clone())).unwrap();
    let s =
        TrialSetup { policy: &p, model: &model, costs: &costs, plan: &plan, timing: Timing::ExAnte, max_steps: 10_000 };
    let correct =
        (0..1000u64).filter(|&t| run_trial(&s, (t % 2) as usize, &mut rng_stream(2, t)).unwrap().correct).count();
    assert!(correct >= 999, "{correct}");
}

#[test]
fn ex_post_ignores_deadlines() {
    let d = desk(3, DeadlineMode::Optimal);
    let p = prepared(&d, PolicyKind::CaChernoff, 0.01);
    let no_deadline = plan_deadlines(&d.costs, DeadlineMode::None, None).unwrap();
    assert!(d.plan.deadlines.iter().all(|t| t.is_finite()));
    for t in 0..100u64 {
        let a = run_trial(&setup(&d, &p, &d.plan, Timing::ExPost), (t % 8) as usize, &mut rng_stream(4, t)).unwrap();
        let b =
            run_trial(&setup(&d, &p, &no_deadline, Timing::ExPost), (t % 8) as usize, &mut rng_stream(4, t)).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert!(a.n_cancel.iter().all(|&c| c == 0));
    }
}

#[test]
fn counters_and_cost_replay() {
    let d = desk(5, DeadlineMode::Optimal);
    let p = prepared(&d, PolicyKind::CaNj1, 0.01);
    let s = setup(&d, &p, &d.plan, Timing::ExAnte);
    for t in 0..100u64 {
        let (rec, trace) = run_trial_traced(&s, (t % 8) as usize, &mut rng_stream(6, t)).unwrap();
        for a in 0..4 {
            assert_eq!(rec.n[a], rec.n_eff[a] + rec.n_cancel[a]);
        }
        assert_eq!(trace.len() as u64, rec.steps);
        // replay the cost substream with the recorded actions
        let [_, mut cost_rng, _] = trial_substreams(&mut rng_stream(6, t));
        let replayed: f64 = trace
            .iter()
            .map(|step| d.costs[step.action].sample(&mut cost_rng).min(d.plan.deadlines[step.action]))
            .sum();
        assert_eq!(replayed, rec.total_cost);
        assert!(rec.total_cost >= 0.0);
    }
}

#[test]
fn single_trial_batch_matches_record() {
    let d = desk(7, DeadlineMode::Optimal);
    let p = prepared(&d, PolicyKind::CaPhiDelta, 0.05);
    let s = setup(&d, &p, &d.plan, Timing::ExAnte);
    let cfg = BatchConfig { trials: 1, seed: 8, parallelism: 1, truth: TruthRule::Uniform };
    let records = run_batch_records(&s, &cfg).unwrap();
    let summary = run_batch(&s, &cfg).unwrap();
    let r = &records[0];
    assert_eq!(summary.trials, 1);
    assert_eq!(summary.avg_total_cost, r.total_cost);
    assert_eq!(summary.empirical_error, if r.correct { 0.0 } else { 1.0 });
    let as_f64 = |v: &[u64]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    assert_eq!(summary.mean_n, as_f64(&r.n));
    assert_eq!(summary.mean_n_eff, as_f64(&r.n_eff));
    assert_eq!(summary.mean_n_cancel, as_f64(&r.n_cancel));
    assert!(matches!(run_batch(&s, &BatchConfig { trials: 0, ..cfg }), Err(EngineError::NoTrials)));
}

#[test]
fn batches_do_not_depend_on_parallelism() {
    let d = desk(9, DeadlineMode::Optimal);
    for kind in PolicyKind::ALL {
        let p = prepared(&d, kind, 0.01);
        let s = setup(&d, &p, &d.plan, Timing::ExAnte);
        let cfg = BatchConfig { trials: 400, seed: 10, parallelism: 1, truth: TruthRule::Uniform };
        let serial = run_batch(&s, &cfg).unwrap();
        let parallel = run_batch(&s, &BatchConfig { parallelism: 8, ..cfg }).unwrap();
        assert_eq!(format!("{serial:?}"), format!("{parallel:?}"));
    }
}

#[test]
fn chernoff_error_within_target() {
    let d = desk(11, DeadlineMode::Optimal);
    let p = prepared(&d, PolicyKind::CaChernoff, 1e-2);
    let s = setup(&d, &p, &d.plan, Timing::ExAnte);
    let cfg = BatchConfig { trials: 2000, seed: 12, parallelism: 4, truth: TruthRule::Uniform };
    let summary = run_batch(&s, &cfg).unwrap();
    assert_eq!(summary.censored_count, 0);
    assert!(summary.empirical_error <= 0.02, "{}", summary.empirical_error);
}

#[test]
fn error_constraint_all_policies() {
    let d = desk(13, DeadlineMode::Optimal);
    let trials = 2000u64;
    for kind in PolicyKind::ALL {
        for delta in [1e-1, 1e-2, 1e-3] {
            let p = prepared(&d, kind, delta);
            let s = setup(&d, &p, &d.plan, Timing::ExAnte);
            let cfg = BatchConfig { trials, seed: 14, parallelism: 4, truth: TruthRule::Uniform };
            let summary = run_batch(&s, &cfg).unwrap();
            let bound = delta + 3.0 * (delta / trials as f64).sqrt();
            assert!(summary.empirical_error <= bound, "{kind} δ={delta}: {}", summary.empirical_error);
        }
    }
}

#[test]
fn wald_arithmetic() {
    let costs = [CostModel::exponential(1.0).unwrap(), CostModel::exponential(1.0).unwrap()];
    let plan = DeadlinePlan {
        deadlines: vec![std::f64::consts::LN_2, f64::INFINITY],
        mode: DeadlineMode::Fixed,
        effective_costs: vec![1.0, 1.0],
    };
    let model = make_gaussian_model(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
    let p = prepare_policy(&model, &PolicyConfig::new(PolicyKind::CaChernoff, 0.1, vec![1.0, 1.0])).unwrap();
    let s = TrialSetup { policy: &p, model: &model, costs: &costs, plan: &plan, timing: Timing::ExAnte, max_steps: 10 };
    let mut summary = summarize(&[], &s);
    summary.mean_n_eff = vec![10.0, 10.0];
    summary.mean_n = vec![20.0, 10.0];
    summary.mean_n_cancel = vec![10.0, 0.0];
    let checks = wald_consistency(&summary, &plan, &costs);
    assert!((checks[0].success_probability - 0.5).abs() < 1e-15);
    assert!((checks[0].predicted_n - 20.0).abs() < 1e-12);
    assert!((checks[0].predicted_n_cancel - 10.0).abs() < 1e-12);
    assert_eq!(checks[1].predicted_n_cancel, 0.0);
    assert_eq!(checks[1].rel_dev_cancel, 0.0);
}

#[test]
fn wald_identity_on_pareto_batch() {
    // single Pareto(1, 1.5) cost on every action, deadline at the optimum
    let mut s = rng_stream(15, 0);
    let model = generate_benchmark_instance(8, 4, &mut s).unwrap();
    let costs = vec![CostModel::pareto(1.0, 1.5).unwrap(); 4];
    let plan = plan_deadlines(&costs, DeadlineMode::Optimal, None).unwrap();
    assert!((costs[0].cdf(plan.deadlines[0]) - 0.8418).abs() < 1e-3);
    let p =
        prepare_policy(&model, &PolicyConfig::new(PolicyKind::CaChernoff, 0.01, plan.effective_costs.clone())).unwrap();
    let setup = TrialSetup {
        policy: &p,
        model: &model,
        costs: &costs,
        plan: &plan,
        timing: Timing::ExAnte,
        max_steps: DEFAULT_MAX_STEPS,
    };
    let summary =
        run_batch(&setup, &BatchConfig { trials: 5000, seed: 16, parallelism: 4, truth: TruthRule::Uniform }).unwrap();
    for check in wald_consistency(&summary, &plan, &costs) {
        if check.mean_n_eff * 5000.0 >= 500.0 {
            assert!(check.rel_dev_n <= 0.03, "{check:?}");
            let ratio = summary.wald_ratio[check.action].unwrap();
            assert!((ratio - 1.0).abs() <= 0.03);
        }
    }
}

//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfn::check::{gradient_check_suite, random_model, RandomTreeSpec};
use sfn::data::{block_average, partition, synth_series, Dataset, Samples, Split, SplitConfig, SynthConfig};
use sfn::fixtures::recovery_fixture;
use sfn::harness::{emit_report, run_experiment, ExperimentConfig, MethodSpec, RunReport};
use sfn::mlp::mlp_weight_count;
use sfn::search::build;
use sfn::train::init_weights;
use sfn::{
    mse, Algorithm, FunctionKind, Parent, SearchConfig, SearchData, SearchTrace, SfnModel, TrainConfig,
};

type Outcome = Result<String, String>;
type RecoveryRun = (Algorithm, SfnModel, SearchTrace, Duration);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let r = gradient_check_suite(200, 0, 1e-6).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let detail = format!(
        "200 cases ({} redrawn), max relative error {:.3e}, {:.1?}",
        r.redrawn, r.max_rel_error, took
    );
    ensure(
        r.max_rel_error < 1e-5,
        format!("{detail}; worst case {}", r.worst_case),
    )?;
    ensure(took < Duration::from_secs(30), format!("{detail}; over 30 s"))?;
    Ok(detail)
}

fn smooth_transition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for case in 0..100 {
        let arity = rng.random_range(1..=4);
        let depth = rng.random_range(1..=3);
        let spec = RandomTreeSpec {
            arity,
            max_depth: depth,
            max_links: 8,
            weight_range: 2.0,
        };
        let model = random_model(&mut rng, &spec).map_err(|e| e.to_string())?;
        let parents: Vec<Parent> = std::iter::once(Parent::Root)
            .chain(
                model
                    .links()
                    .iter()
                    .filter(|v| v.depth < depth)
                    .map(|v| Parent::Link(v.link.id())),
            )
            .collect();
        let parent = parents[rng.random_range(0..parents.len())];
        let kind = FunctionKind::ALL[rng.random_range(0..3)];
        let mut weights = init_weights(kind, &mut rng);
        weights.multiplier = 0.0;
        let mut grown = model.clone();
        grown
            .add_link(parent, kind, rng.random_range(0..arity), weights)
            .map_err(|e| format!("case {case}: {e}"))?;
        for _ in 0..20 {
            let x: Vec<f64> = (0..arity).map(|_| rng.random_range(-2.0..=2.0)).collect();
            let (Ok(a), Ok(b)) = (model.eval(&x), grown.eval(&x)) else {
                continue;
            };
            let dev = (a - b).abs() / (1.0 + a.abs());
            worst = worst.max(dev);
            points += 1;
        }
    }
    let detail = format!("100 cases, {points} finite points, max |dy|/(1+|y|) = {worst:e}");
    ensure(worst <= 1e-15 && points >= 1000, detail.clone())?;
    Ok(detail)
}

fn recovery_split() -> (Samples, Samples) {
    let cfg = SplitConfig {
        test_fraction: 0.0,
        ..SplitConfig::default()
    };
    let d = Dataset::from_samples(recovery_fixture(200, 42), &cfg).unwrap();
    (d.train(), d.validation())
}

fn recovery_target_range(tr: &Samples) -> f64 {
    let lo = tr.targets.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = tr.targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Models and traces of criterion 3, shared with criterion 4.
fn recovery_runs() -> Result<Vec<RecoveryRun>, String> {
    let (tr, va) = recovery_split();
    let data = SearchData {
        train: &tr,
        validation: &va,
    };
    let mut out = Vec::new();
    for algorithm in [
        Algorithm::ForwardLinkByLink,
        Algorithm::Backward,
        Algorithm::ForwardBackward,
    ] {
        let cfg = SearchConfig {
            algorithm,
            ..SearchConfig::default()
        };
        let start = Instant::now();
        let (m, t) = build(data, &TrainConfig::default(), &cfg).map_err(|e| format!("{algorithm}: {e}"))?;
        out.push((algorithm, m, t, start.elapsed()));
    }
    Ok(out)
}

fn in_class_recovery(runs: &[RecoveryRun]) -> Outcome {
    let (tr, _) = recovery_split();
    // MSE in the fixture's own units; dividing by the squared target range
    // gives the min-max scaled value, which is smaller since the range is > 1.
    let range = recovery_target_range(&tr);
    let mut parts = Vec::new();
    let mut failed = Vec::new();
    for (algorithm, m, _, took) in runs {
        let e = mse(m, &tr.inputs, &tr.targets).map_err(|e| e.to_string())?;
        let has = |k| m.roots().iter().any(|r| r.kind() == k);
        let ok = e < 1e-3
            && has(FunctionKind::Logarithm)
            && has(FunctionKind::Exponential)
            && *took < Duration::from_secs(120);
        parts.push(format!(
            "{algorithm} mse {e:.2e} (scaled {:.2e}) {} weights {:.1?}",
            e / (range * range),
            m.count_weights(),
            took
        ));
        if !ok {
            failed.push(format!("{algorithm}: {m}"));
        }
    }
    let detail = parts.join("; ");
    ensure(
        failed.is_empty(),
        format!("{detail}; failing: {}", failed.join(" | ")),
    )?;
    Ok(detail)
}

fn admission_soundness(runs: &[RecoveryRun]) -> Outcome {
    let a = SearchConfig::default().admission_threshold;
    let mut parts = Vec::new();
    for (algorithm, m, trace, _) in runs {
        trace.verify(a).map_err(|e| format!("{algorithm}: {e}"))?;
        let last = trace.steps.last().ok_or(format!("{algorithm}: empty trace"))?;
        ensure(
            last.hash_after == m.fingerprint(),
            format!("{algorithm}: trace does not end at the returned model"),
        )?;
        let accepted = trace.accepted().count();
        parts.push(format!(
            "{algorithm} {} steps / {accepted} accepted",
            trace.steps.len()
        ));
    }
    Ok(parts.join("; "))
}

fn sparsity_ordering() -> Outcome {
    let (tr, va) = recovery_split();
    let data = SearchData {
        train: &tr,
        validation: &va,
    };
    let weights = |algorithm, seed| -> Result<usize, String> {
        let cfg = SearchConfig {
            algorithm,
            seed,
            ..SearchConfig::default()
        };
        Ok(build(data, &TrainConfig::default(), &cfg)
            .map_err(|e| e.to_string())?
            .0
            .count_weights())
    };
    let mut b_fly = 0;
    let mut fb_flk = 0;
    let mut pairs = Vec::new();
    for seed in 0..5 {
        let (b, fly) = (
            weights(Algorithm::Backward, seed)?,
            weights(Algorithm::ForwardLayerByLayer, seed)?,
        );
        let (fb, flk) = (
            weights(Algorithm::ForwardBackward, seed)?,
            weights(Algorithm::ForwardLinkByLink, seed)?,
        );
        b_fly += usize::from(b <= fly);
        fb_flk += usize::from(fb <= flk);
        pairs.push(format!("s{seed}: B {b}/FLY {fly}, FB {fb}/FLK {flk}"));
    }
    let detail = format!("B<=FLY {b_fly}/5, FB<=FLK {fb_flk}/5 [{}]", pairs.join("; "));
    ensure(b_fly == 5 && fb_flk >= 4, detail.clone())?;
    Ok(detail)
}

fn mlp_weight_counts() -> Outcome {
    let want = [(3, 16), (6, 31), (9, 46), (12, 61), (15, 76)];
    let got: Vec<usize> = want
        .iter()
        .map(|(h, _)| mlp_weight_count(4, *h).unwrap())
        .collect();
    let detail = format!("p=4, h=3,6,9,12,15 -> {got:?}");
    ensure(got.iter().zip(&want).all(|(g, (_, w))| g == w), detail.clone())?;
    Ok(detail)
}

fn pipeline_counts() -> Outcome {
    let daily = synth_series(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let ten = block_average(&daily, 10).map_err(|e| e.to_string())?;
    let monthly = block_average(&daily, 30).map_err(|e| e.to_string())?;
    let outer = partition(
        ten.len(),
        &SplitConfig {
            validation_fraction: 0.0,
            ..SplitConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let first = outer.iter().filter(|s| **s == Split::Train).count();
    let second = outer.iter().filter(|s| **s == Split::Test).count();
    let detail = format!(
        "{} daily -> {} ten-day ({first}/{second}) and {} monthly",
        daily.len(),
        ten.len(),
        monthly.len()
    );
    ensure(
        daily.len() == 3600 && ten.len() == 360 && first == 180 && second == 180 && monthly.len() == 120,
        detail.clone(),
    )?;
    Ok(detail)
}

fn forecast_config() -> ExperimentConfig {
    ExperimentConfig {
        algorithms: ["B-BP(9)", "ES-BP(9)", "FLK", "FLY", "B", "FB(K=5)", "FRS(RF=0.5)"]
            .map(String::from)
            .to_vec(),
        ..ExperimentConfig::default()
    }
}

fn forecast_harness() -> Outcome {
    let start = Instant::now();
    let cfg = forecast_config();
    let dirs = [
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    ];
    let mut reports: Vec<RunReport> = Vec::new();
    let mut written = Vec::new();
    for d in &dirs {
        let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
        written = emit_report(&report, d.path()).map_err(|e| e.to_string())?;
        reports.push(report);
    }
    let took = start.elapsed();
    for f in &written {
        let name = f.file_name().unwrap();
        let other = dirs[1].path().join(name);
        let same = fs::read(dirs[0].path().join(name)).ok() == fs::read(&other).ok();
        ensure(same, format!("{name:?} differs between reruns"))?;
    }
    let report = &reports[0];
    let md = fs::read_to_string(dirs[0].path().join("report.md")).map_err(|e| e.to_string())?;
    for m in &report.methods {
        ensure(
            m.failures.is_empty(),
            format!("{} failed: {:?}", m.method, m.failures),
        )?;
        ensure(
            m.runs.len() == cfg.runs,
            format!("{}: {} runs", m.method, m.runs.len()),
        )?;
        ensure(
            md.contains(&format!("| {} |", m.method)),
            format!("{} missing from report.md", m.method),
        )?;
    }
    let mlp9 = report
        .methods
        .iter()
        .find(|m| {
            m.method
                == MethodSpec::Mlp {
                    early_stopping: false,
                    hidden: 9,
                }
        })
        .and_then(|m| m.average_weights())
        .ok_or("no B-BP(9) row")?;
    let sfn: Vec<(String, f64)> = report
        .methods
        .iter()
        .filter(|m| matches!(m.method, MethodSpec::Sfn { .. }))
        .map(|m| (m.method.to_string(), m.average_weights().unwrap_or(f64::INFINITY)))
        .collect();
    let detail = format!(
        "{} methods x {} runs, {} files identical on rerun, {:.1?}; avg weights MLP(9) {mlp9}, {}",
        report.methods.len(),
        cfg.runs,
        written.len(),
        took,
        sfn.iter()
            .map(|(n, w)| format!("{n} {w:.1}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    ensure(mlp9 == 46.0 && sfn.iter().all(|(_, w)| *w < mlp9), detail.clone())?;
    ensure(took < Duration::from_secs(600), format!("{detail}; over 10 min"))?;
    Ok(detail)
}

fn multi_step_degradation() -> Outcome {
    let mut avg = Vec::new();
    for k in 1..=3 {
        let cfg = ExperimentConfig {
            algorithms: vec!["B".into()],
            horizon: k,
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
        let t = report.methods[0]
            .test()
            .ok_or(format!("k={k}: no successful runs"))?;
        avg.push(t.average);
    }
    let detail = format!(
        "B-SFN average test MSE k=1 {:.4e}, k=2 {:.4e}, k=3 {:.4e}",
        avg[0], avg[1], avg[2]
    );
    ensure(avg[0] <= avg[1] && avg[1] <= avg[2], detail.clone())?;
    Ok(detail)
}

fn symbolic_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for case in 0..100 {
        let arity = rng.random_range(1..=4);
        let spec = RandomTreeSpec {
            arity,
            max_depth: rng.random_range(1..=3),
            max_links: 8,
            weight_range: 2.0,
        };
        let model = random_model(&mut rng, &spec).map_err(|e| e.to_string())?;
        let text = model.render_symbolic();
        for _ in 0..10 {
            let x: Vec<f64> = (0..arity).map(|_| rng.random_range(-2.0..=2.0)).collect();
            let Ok(y) = model.eval(&x) else { continue };
            let z = common::eval_expression(&text, &x).map_err(|e| format!("case {case}: {e} in {text}"))?;
            worst = worst.max((y - z).abs() / (1.0 + y.abs()));
            points += 1;
        }
    }
    let detail = format!("100 models, {points} points, max |dy|/(1+|y|) = {worst:e}");
    ensure(worst <= 1e-12, detail.clone())?;
    Ok(detail)
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match &outcome {
        Ok(d) => println!("PASS  {name}: {d}"),
        Err(d) => println!("FAIL  {name}: {d}"),
    }
    outcome.is_ok()
}

fn main() -> ExitCode {
    let recovery = catch_unwind(recovery_runs).unwrap_or_else(|_| Err("recovery runs panicked".into()));
    let with_runs = |f: fn(&[RecoveryRun]) -> Outcome| {
        let r = &recovery;
        move || r.as_ref().map_err(Clone::clone).and_then(|runs| f(runs))
    };
    let results = [
        run("1 gradient correctness", gradient_correctness),
        run("2 smooth transition", smooth_transition),
        run("3 in-class recovery", with_runs(in_class_recovery)),
        run("4 admission soundness", with_runs(admission_soundness)),
        run("5 sparsity ordering", sparsity_ordering),
        run("6 MLP weight counts", mlp_weight_counts),
        run("7 pipeline counts", pipeline_counts),
        run("8 forecast harness", forecast_harness),
        run("9 multi-step degradation", multi_step_degradation),
        run("10 symbolic export round-trip", symbolic_round_trip),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

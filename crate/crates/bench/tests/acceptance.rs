//! Acceptance suite. Each test prints one `acceptance N ...: PASS|FAIL`
//! line with the measured numbers, then asserts.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use zoq_bench::config::{ComboSpec, ExperimentConfig, ObjectiveKind, ObjectiveSpec, ScheduleKind, StartKind};
use zoq_bench::output::{summarize, write_run, SummaryRow};
use zoq_bench::presets::{preset, PRESETS};
use zoq_bench::runner::{run, RunOutput};
use zoq_bench::verify::{run_battery, test_problem, VerifyOptions};
use zoq_core::analysis::stats::{mean_and_stderr, z_score};
use zoq_core::analysis::{fit_log_linear, fit_log_linear_rate, rounding_floor, RateWindow, Theorem};
use zoq_core::estimators::{estimate, projection_residual, EstimatorConfig, EstimatorKind};
use zoq_core::objectives::QuadraticObjective;
use zoq_core::optimizer::{run_deterministic, AllocationKind, AllocationSchedule, StepPolicy, Trajectory};
use zoq_core::{Objective, SeededRng};

/// Written to the raw stderr handle so the line shows up even when the
/// test harness captures output.
fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("acceptance {n} {name}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn objective(kind: ObjectiveKind, dim: usize) -> ObjectiveSpec {
    ObjectiveSpec {
        kind,
        dim,
        seed: 1,
        eps: None,
        samples: None,
        batch_size: None,
        rho: None,
        reference_iterations: None,
    }
}

fn experiment(name: &str, obj: ObjectiveSpec, budgets: Vec<usize>, reps: usize, combos: Vec<ComboSpec>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        seed: 20_240_601,
        replications: reps,
        budgets,
        output_dir: None,
        start: None,
        objective: obj,
        combos,
    }
}

fn constant(kind: EstimatorKind, q: usize) -> ComboSpec {
    ComboSpec::new(kind, ScheduleKind::Constant, Some(q))
}

fn execute(cfg: &ExperimentConfig) -> RunOutput {
    let obj = cfg.validate(None, &cfg.name).expect("acceptance configs validate");
    let out = run(cfg, &obj);
    for c in &out.combos {
        assert_eq!(c.failures().count(), 0, "{} K={} had failed replications", c.label, c.budget);
    }
    out
}

/// Summary rows keyed by (label, budget).
fn summaries(out: &RunOutput) -> HashMap<(String, usize), Vec<SummaryRow>> {
    out.combos.iter().map(|c| ((c.label.clone(), c.budget), summarize(c))).collect()
}

fn final_gap(s: &HashMap<(String, usize), Vec<SummaryRow>>, label: &str, k: usize) -> (f64, f64) {
    let last = s[&(label.to_string(), k)].last().unwrap();
    (last.gap_mean.unwrap(), last.gap_stderr.unwrap())
}

#[test]
fn acceptance_1_mse_matches_closed_forms() {
    let start = Instant::now();
    let r = run_battery(&VerifyOptions::full()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mse: Vec<_> = r.checks.iter().filter(|c| c.name.starts_with("mse ")).collect();
    assert_eq!(mse.len(), 8);
    let worst = mse.iter().map(|c| c.statistic.abs()).fold(0.0, f64::max);
    let pass = worst <= 4.0 && secs < 30.0;
    let rel = r
        .moments
        .iter()
        .filter(|m| m.mse_closed_form > 0.0)
        .map(|m| (m.mse_empirical / m.mse_closed_form - 1.0).abs())
        .fold(0.0, f64::max);
    report(1, "mse closed forms", pass, &format!("max |z| {worst:.2} over 8 cases, max rel err {rel:.4}, {secs:.1}s"));
    assert!(pass);
}

#[test]
fn acceptance_2_estimator_means_per_coordinate() {
    let start = Instant::now();
    let opts = VerifyOptions::full();
    let r = run_battery(&opts).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (obj, x) = test_problem(opts.seed).unwrap();
    let g = obj.gradient(&x).unwrap();
    let mut worst = (0.0, String::new());
    let mut over = 0;
    let mut coords = 0;
    for m in &r.moments {
        for (i, z) in m.mean_z_scores(&g).iter().enumerate() {
            coords += 1;
            if z.abs() > 3.0 {
                over += 1;
            }
            if z.abs() > worst.0 {
                worst = (z.abs(), format!("{:?} q={} coord {i}", m.kind, m.q));
            }
        }
    }
    let pass = over == 0 && secs < 30.0;
    report(
        2,
        "estimator means",
        pass,
        &format!("{over} of {coords} coordinates beyond 3 stderr, worst {:.2} at {}, {secs:.1}s", worst.0, worst.1),
    );
    assert!(pass);
}

#[test]
fn acceptance_3_strongly_convex_dichotomy() {
    let start = Instant::now();
    let cfg = preset("fig1", false).unwrap();
    let s = summaries(&execute(&cfg));
    let secs = start.elapsed().as_secs_f64();
    let k = cfg.budgets[0];
    let g = |l: &str| final_gap(&s, l, k).0;
    let (al1, al10, al100) = (g("align-q1"), g("align-q10"), g("align-q100"));
    let (av1, av10, av100) = (g("avg-q1"), g("avg-q10"), g("avg-q100"));
    let align_order = al100 < al10 && al10 < al1;
    let avg_order = av1 < av10 && av10 < av100;
    let separation = av1 / al100;
    let pass = align_order && avg_order && separation >= 10.0 && secs < 120.0;
    report(
        3,
        "strongly convex dichotomy",
        pass,
        &format!(
            "align q=1/10/100 {al1:.3}/{al10:.3}/{al100:.3}, avg q=1/10/100 {av1:.3}/{av10:.3}/{av100:.3}, \
             orderings {align_order}/{avg_order}, separation {separation:.2}x, {secs:.1}s"
        ),
    );
    assert!(pass);
}

fn quadratic_runs(
    obj: &QuadraticObjective,
    kind: EstimatorKind,
    alloc: AllocationKind,
    budget: usize,
    reps: usize,
) -> Vec<Trajectory> {
    use rayon::prelude::*;
    let d = obj.dim();
    let sched = AllocationSchedule::new(alloc, budget);
    let q = sched.nominal_q(d);
    let cfg = EstimatorConfig::idealized(kind, q);
    let policy = if kind == EstimatorKind::Align { StepPolicy::AlignOptimal } else { StepPolicy::AvgOptimal };
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut s = SeededRng::new(41, 1).derive(r as u64);
            let x0 = DVector::from_iterator(d, (0..d).map(|_| s.normal()));
            let mut rng = SeededRng::new(41, 2).derive(r as u64);
            run_deterministic(obj, &cfg, &sched, &policy, &x0, &mut rng).unwrap()
        })
        .collect()
}

#[test]
fn acceptance_4_rate_constants() {
    let start = Instant::now();
    let d = 20;
    let obj = QuadraticObjective::random(d, 1.0, &mut SeededRng::new(40, 0)).unwrap();
    let (l, mu) = (obj.smoothness(), obj.strong_convexity().unwrap());
    let per_iter = RateWindow::per_iteration();

    let align = quadratic_runs(&obj, EstimatorKind::Align, AllocationKind::FullSubspace, 2000 * d, 1);
    let align_slope = fit_log_linear_rate(&align, per_iter).unwrap();
    let align_target = (1.0 - mu / l).ln();
    let align_ratio = align_slope / align_target;

    let avg = quadratic_runs(&obj, EstimatorKind::Avg, AllocationKind::SingleQuery, 20_000, 200);
    let avg_slope = fit_log_linear_rate(&avg, per_iter).unwrap();
    let avg_target = (1.0 - mu / (l * (d as f64 + 2.0))).ln();
    let avg_ratio = avg_slope / avg_target;
    let secs = start.elapsed().as_secs_f64();

    let pass = (align_ratio - 1.0).abs() <= 0.10 && (avg_ratio - 1.0).abs() <= 0.25 && secs < 120.0;
    report(
        4,
        "rate constants",
        pass,
        &format!(
            "kappa {:.1}; align slope {align_slope:.4e} vs {align_target:.4e} (ratio {align_ratio:.3}); \
             avg slope {avg_slope:.4e} vs {avg_target:.4e} (ratio {avg_ratio:.3}); {secs:.1}s",
            l / mu
        ),
    );
    assert!(pass);
}

/// Largest `(mean gap - bound) / stderr` over every combo, iteration and
/// bound among T1..T4.
fn worst_bound_excess(out: &RunOutput) -> (f64, String) {
    let mut worst = (f64::NEG_INFINITY, String::new());
    for c in &out.combos {
        let rows = summarize(c);
        for b in c.bounds.iter().filter(|b| matches!(b.theorem, Theorem::T1 | Theorem::T2 | Theorem::T3 | Theorem::T4)) {
            for (t, v) in b.iter() {
                let row = &rows[t];
                let z = z_score(row.gap_mean.unwrap(), v, row.gap_stderr.unwrap(), rounding_floor(v.abs()));
                if t > 0 && z > worst.0 {
                    worst = (z, format!("{} {} t={t}", c.label, b.theorem.label()));
                }
            }
        }
    }
    worst
}

#[test]
fn acceptance_5_bounds_hold() {
    let start = Instant::now();
    let combos = || {
        vec![
            constant(EstimatorKind::Avg, 1),
            constant(EstimatorKind::Avg, 5),
            constant(EstimatorKind::Align, 1),
            constant(EstimatorKind::Align, 5),
            constant(EstimatorKind::Align, 20),
        ]
    };
    let quad = execute(&experiment("bounds-quadratic", objective(ObjectiveKind::Quadratic, 20), vec![400], 200, combos()));
    let logit = execute(&experiment("bounds-logistic", objective(ObjectiveKind::Logistic, 20), vec![400], 200, combos()));
    let secs = start.elapsed().as_secs_f64();
    let checked: usize = [&quad, &logit]
        .iter()
        .flat_map(|o| o.combos.iter())
        .map(|c| c.bounds.iter().filter(|b| !matches!(b.theorem, Theorem::T5 | Theorem::T6)).count())
        .sum();
    let (wq, where_q) = worst_bound_excess(&quad);
    let (wl, where_l) = worst_bound_excess(&logit);
    let pass = wq <= 3.0 && wl <= 3.0 && checked == 5 * 2 + 5 && secs < 180.0;
    report(
        5,
        "bound validity",
        pass,
        &format!(
            "{checked} curves; worst excess {wq:.2} stderr ({where_q}) quadratic, {wl:.2} stderr ({where_l}) logistic; {secs:.1}s"
        ),
    );
    assert!(pass);
}

#[test]
fn acceptance_6_allocation_flatness() {
    let start = Instant::now();
    let qs = [1, 10, 50];
    let cfg = experiment(
        "flat-logistic",
        objective(ObjectiveKind::Logistic, 50),
        vec![2000],
        20,
        qs.iter().map(|&q| constant(EstimatorKind::Align, q)).collect(),
    );
    let s = summaries(&execute(&cfg));
    let gaps: Vec<(f64, f64)> = qs.iter().map(|q| final_gap(&s, &format!("align-q{q}"), 2000)).collect();
    let mut worst_pair = 0.0_f64;
    for i in 0..gaps.len() {
        for j in i + 1..gaps.len() {
            let se = (gaps[i].1.powi(2) + gaps[j].1.powi(2)).sqrt();
            worst_pair = worst_pair.max((gaps[i].0 - gaps[j].0).abs() / se);
        }
    }
    let logistic_ok = worst_pair <= 3.0;

    let budgets = vec![500, 1000, 2000, 4000, 8000, 16_000];
    let rq = [1, 10, 100];
    let mut rcfg = experiment(
        "flat-rosenbrock",
        objective(ObjectiveKind::Rosenbrock, 100),
        budgets.clone(),
        10,
        rq.iter().map(|&q| constant(EstimatorKind::Align, q)).collect(),
    );
    rcfg.start = Some(StartKind::Box);
    let rout = execute(&rcfg);
    let mut exponents = Vec::new();
    for &q in &rq {
        let label = format!("align-q{q}");
        let (xs, ys): (Vec<f64>, Vec<f64>) = budgets
            .iter()
            .map(|&k| {
                let c = rout.combos.iter().find(|c| c.label == label && c.budget == k).unwrap();
                let mins: Vec<f64> = c
                    .successes()
                    .map(|(_, tr)| tr.rows.iter().map(|r| r.grad_norm2.unwrap()).fold(f64::INFINITY, f64::min))
                    .collect();
                ((k as f64).ln(), mean_and_stderr(&mins).0)
            })
            .unzip();
        let slope = fit_log_linear(&xs, &ys).unwrap();
        exponents.push(slope);
    }
    let rosen_ok = exponents.iter().all(|e| (-1.3..=-0.7).contains(e));
    let secs = start.elapsed().as_secs_f64();
    let pass = logistic_ok && rosen_ok;
    report(
        6,
        "allocation flatness",
        pass,
        &format!(
            "logistic gaps q=1/10/50 {:.4}/{:.4}/{:.4} (stderr {:.1e}), worst pair {worst_pair:.2} stderr [{}]; \
             rosenbrock exponents q=1/10/100 {:.2}/{:.2}/{:.2} [{}]; {secs:.1}s",
            gaps[0].0,
            gaps[1].0,
            gaps[2].0,
            gaps[0].1,
            if logistic_ok { "ok" } else { "out" },
            exponents[0],
            exponents[1],
            exponents[2],
            if rosen_ok { "ok" } else { "out" },
        ),
    );
    assert!(pass);
}

#[test]
fn acceptance_7_stochastic_dichotomy() {
    let start = Instant::now();
    let cfg = preset("fig4", false).unwrap();
    let out = execute(&cfg);
    let k = cfg.budgets[0];
    let finals = |label: &str| -> (Vec<f64>, Vec<f64>) {
        let c = out.combos.iter().find(|c| c.label == label && c.budget == k).unwrap();
        c.successes()
            .map(|(_, tr)| (tr.last().f_value, tr.averaged.as_ref().expect("averaged iterate logged").f_value))
            .unzip()
    };
    let (align50, _) = finals("align-q50");
    let (avg1, _) = finals("avg-q1");
    let (avg50, _) = finals("avg-q50");
    let m = |v: &[f64]| mean_and_stderr(v).0;
    let order = m(&align50) < m(&avg1) && m(&avg1) < m(&avg50);

    let mut avg_ok = true;
    let mut avg_detail = Vec::new();
    for c in &out.combos {
        let (last, bar) = finals(&c.label);
        let (ml, sl) = mean_and_stderr(&last);
        let (mb, _) = mean_and_stderr(&bar);
        let ok = mb <= ml + 3.0 * sl;
        avg_ok &= ok;
        avg_detail.push(format!("{} {mb:.3}/{ml:.3}{}", c.label, if ok { "" } else { "!" }));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = order && avg_ok;
    report(
        7,
        "stochastic dichotomy",
        pass,
        &format!(
            "align q=50 {:.4}, avg q=1 {:.4}, avg q=50 {:.4}, ordering {order}; x_bar/last {}; {secs:.1}s",
            m(&align50),
            m(&avg1),
            m(&avg50),
            avg_detail.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn acceptance_8_projection_consistency() {
    let d = 30;
    let mut rng = SeededRng::new(80, 0);
    let mut worst = 0.0_f64;
    let mut worst_full = 0.0_f64;
    for i in 0..1000 {
        let obj = QuadraticObjective::random(d, 1.0, &mut rng.derive(i)).unwrap();
        let x = DVector::from_iterator(d, (0..d).map(|_| 3.0 * rng.normal()));
        let g = obj.gradient(&x).unwrap();
        let q = 1 + rng.index(d);
        let est = estimate(&obj, &x, &EstimatorConfig::idealized(EstimatorKind::Align, q), &mut rng).unwrap();
        let u = &est.block.directions;
        // against the oracle directional derivatives, not the stored ones
        let res = (u.tr_mul(&est.g_hat) - u.tr_mul(&g)).amax();
        assert!(projection_residual(&est, &est.block).unwrap() <= res + 1e-12 * (1.0 + g.norm()));
        worst = worst.max(res / (1.0 + g.norm()));
        let full = estimate(&obj, &x, &EstimatorConfig::idealized(EstimatorKind::Align, d), &mut rng).unwrap();
        worst_full = worst_full.max((&full.g_hat - &g).norm() / g.norm());
    }
    let pass = worst < 1e-8 && worst_full < 1e-9;
    report(
        8,
        "projection consistency",
        pass,
        &format!("max scaled residual {worst:.2e} (< 1e-8), max q=d relative error {worst_full:.2e} (< 1e-9)"),
    );
    assert!(pass);
}

#[test]
fn acceptance_9_determinism_and_schema() {
    let start = Instant::now();
    let golden = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let gold = |n: &str| std::fs::read_to_string(golden.join(n)).unwrap().trim_end().to_string();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut identical = true;
    let mut headers = true;
    let mut files = 0;
    for p in PRESETS {
        let cfg = preset(p.name, false).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let obj = cfg.validate(None, p.name).unwrap();
        write_run(a.path(), &run(&cfg, &obj)).unwrap();
        let obj = cfg.validate(None, p.name).unwrap();
        single.install(|| write_run(b.path(), &run(&cfg, &obj))).unwrap();
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for n in names {
            let x = std::fs::read(a.path().join(&n)).unwrap();
            let y = std::fs::read(b.path().join(&n)).unwrap_or_default();
            identical &= x == y;
            files += 1;
            let head = String::from_utf8_lossy(&x).lines().next().unwrap_or("").to_string();
            let n = n.to_string_lossy();
            let expected = match n.as_ref() {
                "summary.csv" => gold("summary_header.csv"),
                "bounds.csv" => gold("bounds_header.csv"),
                "averaged.csv" => gold("averaged_header.csv"),
                _ => gold("trajectory_header.csv"),
            };
            headers &= head == expected;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = identical && headers;
    report(
        9,
        "determinism and schema",
        pass,
        &format!("{files} files over {} presets, identical across 1 and many threads: {identical}, headers: {headers}; {secs:.1}s", PRESETS.len()),
    );
    assert!(pass);
}

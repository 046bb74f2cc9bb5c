//! CSV output of a run.

use std::fs;
use std::path::{Path, PathBuf};

use zoq_core::analysis::stats::Moments;
use zoq_core::optimizer::Trajectory;

use crate::error::BenchError;
use crate::runner::{ComboResult, RunOutput};

pub const TRAJECTORY_HEADER: [&str; 8] = [
    "replication",
    "t",
    "q_t",
    "cum_queries",
    "eta_t",
    "f_value",
    "gap",
    "grad_norm2",
];

pub const SUMMARY_HEADER: [&str; 13] = [
    "combo",
    "budget",
    "t",
    "q_t",
    "cum_queries",
    "raw_evals",
    "eta_t",
    "replications",
    "f_mean",
    "f_stderr",
    "gap_mean",
    "gap_stderr",
    "grad_norm2_mean",
];

pub const AVERAGED_HEADER: [&str; 7] = [
    "combo",
    "budget",
    "replication",
    "f_last",
    "f_avg_iterate",
    "gap_last",
    "gap_avg_iterate",
];

pub const FAILURES_HEADER: [&str; 4] = ["combo", "budget", "replication", "error"];

pub const BOUNDS_HEADER: [&str; 6] = ["combo", "budget", "bound", "t", "cum_queries", "value"];

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn trajectory_file_name(label: &str, budget: usize, replication: usize) -> String {
    format!("{label}_K{budget}_r{replication}.csv")
}

pub fn write_trajectory(path: &Path, replication: usize, tr: &Trajectory) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for r in &tr.rows {
        w.write_record([
            replication.to_string(),
            r.t.to_string(),
            r.q_t.to_string(),
            r.cumulative_queries.to_string(),
            fmt_f64(r.eta_t),
            fmt_f64(r.f_value),
            fmt_opt(r.gap),
            fmt_opt(r.grad_norm2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub combo: String,
    pub budget: usize,
    pub t: usize,
    pub q_t: usize,
    pub cum_queries: usize,
    pub raw_evals: usize,
    pub eta_t: f64,
    pub replications: usize,
    pub f_mean: f64,
    pub f_stderr: f64,
    pub gap_mean: Option<f64>,
    pub gap_stderr: Option<f64>,
    pub grad_norm2_mean: Option<f64>,
}

/// Pointwise means over the successful replications of a combo, aligned
/// on cumulative queries.
pub fn summarize(c: &ComboResult) -> Vec<SummaryRow> {
    let trajs: Vec<&Trajectory> = c.successes().map(|(_, t)| t).collect();
    let Some(first) = trajs.first() else {
        return Vec::new();
    };
    first
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let (mut f, mut g, mut n2) = (Moments::default(), Moments::default(), Moments::default());
            let (mut has_gap, mut has_g2) = (true, true);
            for tr in &trajs {
                let r = &tr.rows[i];
                debug_assert_eq!(r.cumulative_queries, row.cumulative_queries);
                f.push(r.f_value);
                match r.gap {
                    Some(v) => g.push(v),
                    None => has_gap = false,
                }
                match r.grad_norm2 {
                    Some(v) => n2.push(v),
                    None => has_g2 = false,
                }
            }
            SummaryRow {
                combo: c.label.clone(),
                budget: c.budget,
                t: row.t,
                q_t: row.q_t,
                cum_queries: row.cumulative_queries,
                raw_evals: row.raw_evaluations,
                eta_t: row.eta_t,
                replications: trajs.len(),
                f_mean: f.mean(),
                f_stderr: f.stderr(),
                gap_mean: has_gap.then(|| g.mean()),
                gap_stderr: has_gap.then(|| g.stderr()),
                grad_norm2_mean: has_g2.then(|| n2.mean()),
            }
        })
        .collect()
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.combo.clone(),
            r.budget.to_string(),
            r.t.to_string(),
            r.q_t.to_string(),
            r.cum_queries.to_string(),
            r.raw_evals.to_string(),
            fmt_f64(r.eta_t),
            r.replications.to_string(),
            fmt_f64(r.f_mean),
            fmt_f64(r.f_stderr),
            fmt_opt(r.gap_mean),
            fmt_opt(r.gap_stderr),
            fmt_opt(r.grad_norm2_mean),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every output file of a run into `dir` and returns the paths.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut summary = Vec::new();
    for c in &out.combos {
        for (rep, tr) in c.successes() {
            let p = dir.join(trajectory_file_name(&c.label, c.budget, rep));
            write_trajectory(&p, rep, tr)?;
            written.push(p);
        }
        summary.extend(summarize(c));
    }
    let p = dir.join("summary.csv");
    write_summary(&p, &summary)?;
    written.push(p);

    let p = dir.join("bounds.csv");
    let mut w = csv::Writer::from_path(&p)?;
    w.write_record(BOUNDS_HEADER)?;
    for c in &out.combos {
        for b in &c.bounds {
            for (t, v) in b.iter() {
                w.write_record([
                    c.label.clone(),
                    c.budget.to_string(),
                    b.theorem.label().to_string(),
                    t.to_string(),
                    c.query_axis[t].to_string(),
                    fmt_f64(v),
                ])?;
            }
        }
    }
    w.flush()?;
    written.push(p);

    // only written when some replication failed
    if out.combos.iter().any(|c| c.failures().next().is_some()) {
        let p = dir.join("failures.csv");
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(FAILURES_HEADER)?;
        for c in &out.combos {
            for (rep, msg) in c.failures() {
                w.write_record([c.label.clone(), c.budget.to_string(), rep.to_string(), msg.to_string()])?;
            }
        }
        w.flush()?;
        written.push(p);
    }

    if out.stochastic {
        let p = dir.join("averaged.csv");
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(AVERAGED_HEADER)?;
        for c in &out.combos {
            for (rep, tr) in c.successes() {
                let avg = tr.averaged.as_ref();
                w.write_record([
                    c.label.clone(),
                    c.budget.to_string(),
                    rep.to_string(),
                    fmt_f64(tr.last().f_value),
                    fmt_opt(avg.map(|a| a.f_value)),
                    fmt_opt(tr.last().gap),
                    fmt_opt(avg.and_then(|a| a.gap)),
                ])?;
            }
        }
        w.flush()?;
        written.push(p);
    }
    Ok(written)
}

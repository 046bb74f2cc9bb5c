//! Static SVG line plots of summary files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::BenchError;

const W: f64 = 820.0;
const H: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Deserialize)]
struct Record {
    combo: String,
    budget: usize,
    cum_queries: usize,
    f_mean: f64,
    gap_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Objective,
    Gap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub title: String,
    pub quantity: Quantity,
    pub log_y: bool,
    pub series: Vec<Series>,
}

struct Loaded {
    objective: Vec<Series>,
    gap: Option<Vec<Series>>,
    max_x: usize,
}

fn load(path: &Path) -> Result<Loaded, BenchError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| BenchError::Usage(format!("{}: {e}", path.display())))?;
    let mut objective: Vec<Series> = Vec::new();
    let mut gap: Vec<Series> = Vec::new();
    let mut has_gap = true;
    let mut max_x = 0;
    for rec in rdr.deserialize::<Record>() {
        let r = rec.map_err(|e| BenchError::Failed(format!("{}: {e}", path.display())))?;
        let label = format!("{}_K{}", r.combo, r.budget);
        if objective.last().is_none_or(|s| s.label != label) {
            objective.push(Series { label: label.clone(), points: Vec::new() });
            gap.push(Series { label, points: Vec::new() });
        }
        let x = r.cum_queries as f64;
        max_x = max_x.max(r.cum_queries);
        objective.last_mut().unwrap().points.push((x, r.f_mean));
        match r.gap_mean {
            Some(g) => gap.last_mut().unwrap().points.push((x, g)),
            None => has_gap = false,
        }
    }
    if objective.is_empty() {
        return Err(BenchError::Failed(format!("{}: no data rows", path.display())));
    }
    // Budget suffixes are dropped when the file holds a single budget.
    let budgets: std::collections::BTreeSet<&str> = objective
        .iter()
        .filter_map(|s| s.label.rsplit_once("_K").map(|(_, k)| k))
        .collect();
    if budgets.len() == 1 {
        for s in objective.iter_mut().chain(gap.iter_mut()) {
            if let Some((base, _)) = s.label.rsplit_once("_K") {
                s.label = base.to_string();
            }
        }
    }
    Ok(Loaded { objective, gap: has_gap.then_some(gap), max_x })
}

fn all_positive(series: &[Series]) -> bool {
    series.iter().all(|s| s.points.iter().all(|&(_, y)| y > 0.0 && y.is_finite()))
}

/// Objective on a log axis when every mean is positive, else the gap on a
/// log axis when it is known and positive, else the objective on a linear
/// axis.
pub fn choose_figure(title: &str, objective: Vec<Series>, gap: Option<Vec<Series>>) -> Figure {
    if all_positive(&objective) {
        return Figure { title: title.into(), quantity: Quantity::Objective, log_y: true, series: objective };
    }
    if let Some(g) = gap {
        if all_positive(&g) {
            return Figure { title: title.into(), quantity: Quantity::Gap, log_y: true, series: g };
        }
    }
    Figure { title: title.into(), quantity: Quantity::Objective, log_y: false, series: objective }
}

fn figure_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("figure");
    if stem == "summary" {
        if let Some(dir) = path.parent().and_then(|p| p.file_name()).and_then(|s| s.to_str()) {
            return dir.to_string();
        }
    }
    stem.to_string()
}

/// One SVG per summary file. All files must end on the same budget.
pub fn plot_files(inputs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    if inputs.is_empty() {
        return Err(BenchError::Usage("plot needs at least one summary CSV".into()));
    }
    let mut loaded = Vec::new();
    for p in inputs {
        loaded.push((p, load(p)?));
    }
    let x0 = loaded[0].1.max_x;
    if let Some((p, l)) = loaded.iter().find(|(_, l)| l.max_x != x0) {
        return Err(BenchError::Failed(format!(
            "query axes differ: {} ends at {} queries but {} ends at {}",
            loaded[0].0.display(),
            x0,
            p.display(),
            l.max_x
        )));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (p, l) in loaded {
        let name = figure_name(p);
        let fig = choose_figure(&name, l.objective, l.gap);
        let out = out_dir.join(format!("{name}.svg"));
        std::fs::write(&out, render_svg(&fig))?;
        written.push(out);
    }
    Ok(written)
}

fn nice_linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi + 1e-9 * step {
        out.push(v);
        v += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e5 || v.abs() < 1e-3 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(fig: &Figure) -> String {
    let pts = fig.series.iter().flat_map(|s| s.points.iter());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        if !y.is_finite() {
            continue;
        }
        let y = if fig.log_y { y.log10() } else { y };
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if !xmin.is_finite() {
        (xmin, xmax, ymin, ymax) = (0.0, 1.0, 0.0, 1.0);
    }
    if xmax <= xmin {
        xmax = xmin + 1.0;
    }
    if fig.log_y {
        ymin = ymin.floor();
        ymax = ymax.ceil();
    }
    if ymax <= ymin {
        ymax = ymin + 1.0;
    }
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - ymin) / (ymax - ymin)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, escape(&fig.title));

    // axes and ticks
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for x in nice_linear_ticks(xmin, xmax) {
        let px = sx(x);
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, fmt_tick(x));
    }
    let yticks: Vec<f64> = if fig.log_y {
        let step = ((ymax - ymin) / 8.0).ceil().max(1.0);
        let mut v = ymin;
        let mut out = Vec::new();
        while v <= ymax + 1e-9 {
            out.push(v);
            v += step;
        }
        out
    } else {
        nice_linear_ticks(ymin, ymax)
    };
    for y in yticks {
        let py = sy(y);
        let label = if fig.log_y { format!("1e{}", y as i64) } else { fmt_tick(y) };
        let _ = writeln!(s, r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#dddddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, py + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">queries</text>"#, LEFT + pw / 2.0, H - 15.0);
    let ylabel = match (fig.quantity, fig.log_y) {
        (Quantity::Objective, true) => "mean objective (log)",
        (Quantity::Objective, false) => "mean objective",
        (Quantity::Gap, _) => "mean gap f - f* (log)",
    };
    let _ = writeln!(s, r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{ylabel}</text>"#, TOP + ph / 2.0, TOP + ph / 2.0);

    for (i, ser) in fig.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for &(x, y) in &ser.points {
            if !y.is_finite() || (fig.log_y && y <= 0.0) {
                continue;
            }
            let y = if fig.log_y { y.log10() } else { y };
            let _ = write!(path, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.trim_end());
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 25.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 32.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

use zoq_bench::output::{summarize, write_run};
use zoq_bench::plot::plot_files;
use zoq_bench::presets::preset;
use zoq_bench::runner::{run, RunOutput};

fn run_preset(name: &str) -> RunOutput {
    let cfg = preset(name, false).unwrap();
    let obj = cfg.validate(None, name).unwrap();
    run(&cfg, &obj)
}

fn final_gaps(out: &RunOutput) -> Vec<(String, f64)> {
    out.combos
        .iter()
        .map(|c| (c.label.clone(), summarize(c).last().unwrap().gap_mean.unwrap()))
        .collect()
}

fn gap(g: &[(String, f64)], label: &str) -> f64 {
    g.iter().find(|(l, _)| l == label).unwrap().1
}

#[test]
fn figure_one_ordering() {
    let g = final_gaps(&run_preset("fig1"));
    let best = g.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert_eq!(best.0, "align-q100", "{g:?}");
    let worst_avg = g
        .iter()
        .filter(|(l, _)| l.starts_with("avg"))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert_eq!(worst_avg.0, "avg-q100", "{g:?}");
}

#[test]
fn constrained_budget_still_favours_largest_alignment_block() {
    let g = final_gaps(&run_preset("fig1-constrained"));
    let best = g.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert_eq!(best.0, "align-q500", "{g:?}");
    assert!(gap(&g, "align-q500") < gap(&g, "avg-q1"));
}

#[test]
fn figure_one_plot_has_six_aligned_polylines() {
    let out = run_preset("fig1");
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("fig1");
    write_run(&run_dir, &out).unwrap();
    for c in &out.combos {
        assert_eq!(summarize(c).last().unwrap().cum_queries, 2000, "{}", c.label);
    }
    let svgs = plot_files(&[run_dir.join("summary.csv")], &dir.path().join("plots")).unwrap();
    assert_eq!(svgs.len(), 1);
    let svg = std::fs::read_to_string(&svgs[0]).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 6);
    for label in ["avg-q1", "avg-q10", "avg-q100", "align-q1", "align-q10", "align-q100"] {
        assert!(svg.contains(&format!(">{label}<")), "legend lacks {label}");
    }
    // every polyline ends on the same right-hand x coordinate
    let ends: Vec<String> = svg
        .split("<polyline")
        .skip(1)
        .map(|p| {
            let pts = p.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
            pts.split_whitespace().last().unwrap().split(',').next().unwrap().to_string()
        })
        .collect();
    assert!(ends.windows(2).all(|w| w[0] == w[1]), "{ends:?}");
}

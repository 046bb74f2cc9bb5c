use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zoq_bench::presets::{preset, PRESETS};
use zoq_bench::runner::run_and_write;
use zoq_bench::verify::{run_battery, VerifyOptions};
use zoq_bench::{plot, BenchError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "zoq", version, about = "Zeroth-order estimator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config or a named preset.
    Run {
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Use the larger preset sizes.
        #[arg(long, requires = "preset")]
        paper_scale: bool,
        /// Output directory (default: the config's output_dir, else out/<name>).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo checks of the estimator moments and bounds.
    Verify {
        #[arg(long)]
        quick: bool,
        /// Negative control: use d + 2 in the averaging MSE.
        #[arg(long)]
        inject_wrong_constant: bool,
        /// Also write the moment reports as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Plot summary CSVs as SVG.
    Plot {
        inputs: Vec<PathBuf>,
        #[arg(short, long, default_value = ".")]
        output: PathBuf,
    },
    /// List or show presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show {
        name: String,
        #[arg(long)]
        paper_scale: bool,
    },
}

fn seed_override() -> Result<Option<u64>, BenchError> {
    match std::env::var("ZOQ_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| BenchError::Usage(format!("ZOQ_SEED must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(None),
    }
}

fn cmd_run(
    config: Option<PathBuf>,
    preset_name: Option<String>,
    paper_scale: bool,
    output: Option<PathBuf>,
) -> Result<(), BenchError> {
    let (mut cfg, text, origin) = match (config, preset_name) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| BenchError::Usage(format!("{}: {e}", p.display())))?;
            let origin = p.display().to_string();
            (ExperimentConfig::parse(&text, &origin)?, Some(text), origin)
        }
        (None, Some(n)) => {
            let cfg = preset(&n, paper_scale)
                .ok_or_else(|| BenchError::Usage(format!("unknown preset `{n}`; try `zoq presets list`")))?;
            (cfg, None, format!("preset {n}"))
        }
        (None, None) => return Err(BenchError::Usage("run needs a config path or --preset".into())),
    };
    if let Some(s) = seed_override()? {
        cfg.seed = s;
    }
    let dir = output
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let out = run_and_write(&cfg, text.as_deref(), &origin, &dir)?;
    for c in &out.combos {
        let s = zoq_bench::output::summarize(c);
        if let Some(last) = s.last() {
            let gap = last.gap_mean.map(|g| format!("  gap {g:.4e}")).unwrap_or_default();
            println!("{:<16} K={:<6} f {:.6e}{gap}", c.label, c.budget, last.f_mean);
        }
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_verify(quick: bool, inject: bool, csv: Option<PathBuf>) -> Result<(), BenchError> {
    let mut opts = if quick { VerifyOptions::quick() } else { VerifyOptions::full() };
    opts.inject_wrong_constant = inject;
    if let Some(s) = seed_override()? {
        opts.seed = s;
    }
    let report = run_battery(&opts).map_err(|e| BenchError::Failed(e.to_string()))?;
    print!("{}", report.table());
    if let Some(p) = csv {
        report.write_moments_csv(&p)?;
    }
    if report.passed() {
        println!("all {} checks passed", report.checks.len());
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(BenchError::Failed(format!("{} check(s) failed: {}", names.len(), names.join(", "))))
    }
}

fn dispatch(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run { config, preset, paper_scale, output } => cmd_run(config, preset, paper_scale, output),
        Command::Verify { quick, inject_wrong_constant, csv } => cmd_verify(quick, inject_wrong_constant, csv),
        Command::Plot { inputs, output } => {
            for p in plot::plot_files(&inputs, &output)? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Presets { action: PresetAction::List } => {
            for p in PRESETS {
                println!("{:<18} {}", p.name, p.description);
            }
            Ok(())
        }
        Command::Presets { action: PresetAction::Show { name, paper_scale } } => {
            let cfg = preset(&name, paper_scale)
                .ok_or_else(|| BenchError::Usage(format!("unknown preset `{name}`")))?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

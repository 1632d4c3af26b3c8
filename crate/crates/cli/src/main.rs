//! Command line front end: run experiment batches, reproduce the canned
//! benchmark scenarios, and exhaustively check the epoch-level abstraction.
//!
//! Exit code is nonzero on any validation or conformance failure.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mpmab_core::harness::{
    emit_csv_file, emit_svg_file, run_experiment, run_figure, AttackerKind, DefenderAlgo,
    ExperimentConfig, Figure, SeriesData,
};
use mpmab_core::metagame::verify_bound;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "mpmab", version, about = "Multi-player bandit simulator with adversarial collisions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment batch and write trace outputs.
    Simulate(Box<SimulateArgs>),
    /// Exhaustively check the epoch-level machine's non-exploitation bound.
    VerifyMetagame {
        /// Sequence length to enumerate (3 * 3^H sequences).
        #[arg(long, default_value_t = 12)]
        horizon: usize,
        /// Only check sequences with at most this many attack actions.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Reproduce a canned benchmark scenario (fig3|fig4|fig5|fig6).
    Repro {
        /// Scenario name.
        scenario: String,
        /// Output directory for CSV and SVG files.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Line-oriented `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Defender algorithm: resync|resync2|mc|sicmmab.
    #[arg(long)]
    algo: Option<String>,
    /// Attacker policy: silent|burst|uniform|mc-attack|sicmmab-attack|desync-attack|lower-bound.
    #[arg(long)]
    attacker: Option<String>,
    /// Number of arms.
    #[arg(long = "K")]
    arms: Option<usize>,
    /// Number of defenders.
    #[arg(long = "N")]
    defenders: Option<usize>,
    /// Number of attackers.
    #[arg(long = "M")]
    attackers: Option<usize>,
    /// Horizon in rounds.
    #[arg(long = "T")]
    horizon: Option<u64>,
    /// Minimum top-gap enforced when sampling instances.
    #[arg(long)]
    delta_floor: Option<f64>,
    /// Exploration-length override.
    #[arg(long)]
    t0: Option<u64>,
    /// Master seed for the batch.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Trace logging stride in rounds.
    #[arg(long)]
    stride: Option<u64>,
    /// CSV output path.
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// SVG output path.
    #[arg(long)]
    out_svg: Option<PathBuf>,
    /// Collision sensing model: nd|d.
    #[arg(long)]
    sensing: Option<String>,
}

impl SimulateArgs {
    /// File values first, then flag overrides.
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)
                .with_context(|| format!("loading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.algo {
            config.algo = DefenderAlgo::parse(&v)?;
        }
        if let Some(v) = self.attacker {
            config.attacker = AttackerKind::parse(&v)?;
        }
        if let Some(v) = self.arms {
            config.arms = v;
        }
        if let Some(v) = self.defenders {
            config.defenders = v;
        }
        if let Some(v) = self.attackers {
            config.attackers = v;
        }
        if let Some(v) = self.horizon {
            config.horizon = v;
        }
        if let Some(v) = self.delta_floor {
            config.delta_floor = v;
        }
        if let Some(v) = self.t0 {
            config.t0_override = Some(v);
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.runs {
            config.runs = v;
        }
        if let Some(v) = self.stride {
            config.stride = v;
        }
        if let Some(v) = self.out_csv {
            config.out_csv = Some(v);
        }
        if let Some(v) = self.out_svg {
            config.out_svg = Some(v);
        }
        if let Some(v) = self.sensing {
            config.set("sensing", &v)?;
        }
        Ok(config)
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let config = args.into_config()?;
    config.validate()?;
    let result = run_experiment(&config)?;

    let n = result.runs.len() as f64;
    let mean_final: f64 =
        result.runs.iter().map(|r| r.trace.final_regret()).sum::<f64>() / n;
    let mean_cost: f64 =
        result.runs.iter().map(|r| r.trace.final_attack_cost() as f64).sum::<f64>() / n;
    println!(
        "{} vs {}: K={} N={} M={} T={} runs={} seed={}",
        config.algo.name(),
        config.attacker.name(),
        config.arms,
        config.defenders,
        config.attackers,
        config.horizon,
        config.runs,
        config.seed
    );
    println!("mean final regret {mean_final:.1}, mean attack cost {mean_cost:.1}");

    let mut fault_lines = 0usize;
    for run in &result.runs {
        for fault in &run.faults {
            println!("run {}: defender fault: {fault}", run.run_idx);
            fault_lines += 1;
        }
    }
    if fault_lines == 0 {
        println!("no defender faults recorded");
    }

    if let Some(path) = &config.out_csv {
        emit_csv_file(&result.runs, config.stride, config.horizon, path)?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &config.out_svg {
        let series = [SeriesData {
            label: config.algo.name().to_string(),
            aggregate: &result.aggregate,
        }];
        let title = format!("cumulative regret — {} vs {}", config.algo.name(), config.attacker.name());
        emit_svg_file(&series, &title, &[], path)?;
        println!("wrote {}", path.display());
    }

    let mismatches: Vec<String> = result
        .runs
        .iter()
        .filter_map(|r| {
            r.conformance_error.as_ref().map(|e| format!("run {}: {e}", r.run_idx))
        })
        .collect();
    if !mismatches.is_empty() {
        for m in &mismatches {
            eprintln!("conformance mismatch: {m}");
        }
        bail!("{} epoch-level conformance mismatches", mismatches.len());
    }
    let transitions: usize = result.runs.iter().map(|r| r.transitions_checked).sum();
    if transitions > 0 {
        println!("epoch-level abstraction conformed over {transitions} transitions");
    }
    Ok(())
}

fn verify_metagame(horizon: usize, budget: Option<u64>) -> Result<()> {
    let started = std::time::Instant::now();
    let report = verify_bound(horizon, budget);
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "horizon {}: {} sequences checked in {elapsed:.2}s",
        report.horizon, report.sequences
    );
    if report.passed() {
        println!("PASS: non-exploitation epochs <= 1 + 3 * attacks on every sequence");
        Ok(())
    } else {
        for v in &report.violations {
            println!(
                "violation: start={} actions={:?} non_exploit={} attacks={}",
                v.start, v.actions, v.non_exploit, v.attacks
            );
        }
        bail!("{} violating sequences", report.violations.len());
    }
}

fn repro(scenario: &str, out_dir: &Path) -> Result<()> {
    let fig = Figure::parse(scenario)
        .with_context(|| format!("unknown scenario '{scenario}' (expected fig3|fig4|fig5|fig6)"))?;
    let report = run_figure(fig, out_dir)?;
    for note in &report.notes {
        println!("note: {note}");
    }
    for (label, result) in &report.results {
        let n = result.runs.len() as f64;
        let mean_final: f64 =
            result.runs.iter().map(|r| r.trace.final_regret()).sum::<f64>() / n;
        let mean_cost: f64 =
            result.runs.iter().map(|r| r.trace.final_attack_cost() as f64).sum::<f64>() / n;
        println!("{label}: mean final regret {mean_final:.1}, mean attack cost {mean_cost:.1}");
    }
    for path in &report.csv_paths {
        println!("wrote {}", path.display());
    }
    println!("wrote {}", report.svg_path.display());
    let errors = report.conformance_errors();
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("conformance mismatch: {e}");
        }
        bail!("{} epoch-level conformance mismatches", errors.len());
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(args) => simulate(*args),
        Command::VerifyMetagame { horizon, budget } => verify_metagame(horizon, budget),
        Command::Repro { scenario, out_dir } => repro(&scenario, &out_dir),
    }
}

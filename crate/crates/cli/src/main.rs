//! `cogbam` — validate scenarios, run them and compare controllers over seed sweeps.
//!
//! Exit codes: 0 on success, 1 when the scenario cannot be read, parsed or validated, 2 when
//! a run fails or an output file cannot be written.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cogbam_core::cognitive::{ControllerMemory, ControllerMode};
use cogbam_core::scenario::{OutputFormat, ScenarioConfig};
use cogbam_core::sim::{run, run_with_memory, RunReport};
use serde_json::json;

#[derive(Parser)]
#[command(name = "cogbam", version, about = "Cognitive BAM switching simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and list every problem found.
    Validate { scenario: PathBuf },
    /// Run one scenario with one seed and write the report.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Report destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the scenario's output format.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Also write the per-epoch series as CSV.
        #[arg(long)]
        epochs_csv: Option<PathBuf>,
        /// Warm-start the controller from a saved memory.
        #[arg(long)]
        memory_in: Option<PathBuf>,
        /// Save the controller memory at the end of the run.
        #[arg(long)]
        memory_out: Option<PathBuf>,
    },
    /// Run several controllers over the same seeds and tabulate the results.
    Compare {
        scenario: PathBuf,
        /// Comma-separated controller modes, e.g. `static:MAM,rules,cbr`.
        #[arg(long, value_delimiter = ',', required = true)]
        controllers: Vec<String>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// First seed of the sweep.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Give every controller its own seeds instead of sharing one list.
        #[arg(long)]
        unpaired: bool,
        /// Also write per-run rows and summaries as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// A failure with its exit code.
enum Failure {
    Input(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors are input errors; help and version output are not errors at all.
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Validate { scenario } => validate_cmd(&scenario),
        Command::Run { scenario, seed, out, format, epochs_csv, memory_in, memory_out } => run_cmd(RunArgs {
            scenario,
            seed,
            out,
            format,
            epochs_csv,
            memory_in,
            memory_out,
        }),
        Command::Compare { scenario, controllers, seeds, seed, unpaired, out } => {
            compare_cmd(&scenario, &controllers, seeds, seed, unpaired, out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}

/// Loads and validates a scenario; every problem becomes one line of the error.
fn load_valid(path: &Path) -> Result<ScenarioConfig, Failure> {
    let scenario = ScenarioConfig::load(path).map_err(|e| Failure::Input(e.to_string()))?;
    let problems = scenario.validate();
    if problems.is_empty() {
        return Ok(scenario);
    }
    let lines: Vec<String> = problems.iter().map(|p| format!("  {p}")).collect();
    Err(Failure::Input(format!("{} is invalid:\n{}", path.display(), lines.join("\n"))))
}

fn validate_cmd(path: &Path) -> Result<(), Failure> {
    load_valid(path)?;
    println!("{}: ok", path.display());
    Ok(())
}

struct RunArgs {
    scenario: PathBuf,
    seed: u64,
    out: Option<PathBuf>,
    format: Option<Format>,
    epochs_csv: Option<PathBuf>,
    memory_in: Option<PathBuf>,
    memory_out: Option<PathBuf>,
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn run_cmd(args: RunArgs) -> Result<(), Failure> {
    let scenario = load_valid(&args.scenario)?;
    let memory = match &args.memory_in {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
            Some(ControllerMemory::from_json(&text).map_err(|e| Failure::Input(e.to_string()))?)
        }
        None => None,
    };
    let (report, memory) =
        run_with_memory(&scenario, args.seed, memory).map_err(|e| Failure::Runtime(e.to_string()))?;

    let format = match args.format {
        Some(Format::Json) => OutputFormat::Json,
        Some(Format::Csv) => OutputFormat::Csv,
        None => scenario.output,
    };
    let text = match format {
        OutputFormat::Json => report.to_canonical_json(),
        OutputFormat::Csv => report.to_csv(),
    };
    match &args.out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = &args.epochs_csv {
        write(path, &report.to_csv())?;
    }
    if let Some(path) = &args.memory_out {
        write(path, &memory.to_json())?;
    }
    if args.out.is_some() {
        summarize(&report);
    }
    Ok(())
}

fn summarize(report: &RunReport) {
    let t = &report.totals;
    let reward = t.mean_reward.map_or("-".to_string(), |r| format!("{r:.4}"));
    eprintln!(
        "{} seed {}: utilization {:.4}, blocking {:.4}, switches {}, mean reward {reward}",
        report.controller,
        report.seed,
        t.utilization,
        aggregate_blocking(report),
        t.switches
    );
}

/// Rejected over offered requests, all classes together, over the measured epochs.
fn aggregate_blocking(report: &RunReport) -> f64 {
    let offered: u64 = report.totals.offered.iter().sum();
    let rejected: u64 = report.totals.rejected.iter().sum();
    if offered == 0 {
        0.0
    } else {
        rejected as f64 / offered as f64
    }
}

struct Row {
    seed: u64,
    digest: String,
    utilization: f64,
    blocking: f64,
    switches: f64,
    reward: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

fn compare_cmd(
    path: &Path,
    controllers: &[String],
    seeds: u64,
    first_seed: u64,
    unpaired: bool,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let scenario = load_valid(path)?;
    if controllers.len() < 2 {
        return Err(Failure::Input("compare needs at least two controllers".into()));
    }
    if seeds == 0 {
        return Err(Failure::Input("--seeds must be at least 1".into()));
    }
    let modes: Vec<ControllerMode> = controllers
        .iter()
        .map(|c| c.trim().parse().map_err(|e| Failure::Input(format!("--controllers: {e}"))))
        .collect::<Result<_, _>>()?;

    let mut table: Vec<(ControllerMode, Vec<Row>)> = Vec::new();
    for (i, &mode) in modes.iter().enumerate() {
        let mut config = scenario.clone();
        config.controller.mode = mode;
        let offset = if unpaired { i as u64 * seeds } else { 0 };
        let seed_list: Vec<u64> = (0..seeds).map(|k| first_seed + offset + k).collect();
        let results: Vec<Result<RunReport, String>> = std::thread::scope(|scope| {
            let handles: Vec<_> = seed_list
                .iter()
                .map(|&seed| {
                    let config = &config;
                    scope.spawn(move || run(config, seed).map_err(|e| e.to_string()))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
        });
        let mut rows = Vec::new();
        for result in results {
            let report = result.map_err(Failure::Runtime)?;
            rows.push(Row {
                seed: report.seed,
                utilization: report.totals.utilization,
                blocking: aggregate_blocking(&report),
                switches: report.totals.switches as f64,
                reward: report.totals.mean_reward.unwrap_or(0.0),
                digest: report.workload_digest,
            });
        }
        table.push((mode, rows));
    }

    let paired = !unpaired
        && table.iter().all(|(_, rows)| {
            rows.iter().zip(&table[0].1).all(|(a, b)| a.seed == b.seed && a.digest == b.digest)
        });
    println!(
        "{} seeds from {first_seed}, {}",
        seeds,
        if unpaired {
            "unpaired"
        } else if paired {
            "paired (workload digests identical across controllers)"
        } else {
            "paired seeds but workload digests differ"
        }
    );
    println!(
        "{:<14} {:>19} {:>19} {:>17} {:>19}",
        "controller", "utilization", "blocking", "switches", "mean reward"
    );
    let mut summaries = Vec::new();
    for (mode, rows) in &table {
        let stat = |f: fn(&Row) -> f64| mean_std(&rows.iter().map(f).collect::<Vec<_>>());
        let (u, b, s, r) = (stat(|r| r.utilization), stat(|r| r.blocking), stat(|r| r.switches), stat(|r| r.reward));
        println!(
            "{:<14} {:>8.4} ± {:<8.4} {:>8.4} ± {:<8.4} {:>7.2} ± {:<7.2} {:>8.4} ± {:<8.4}",
            mode.to_string(),
            u.0,
            u.1,
            b.0,
            b.1,
            s.0,
            s.1,
            r.0,
            r.1
        );
        summaries.push(json!({
            "controller": mode.to_string(),
            "utilization": { "mean": u.0, "std": u.1 },
            "blocking": { "mean": b.0, "std": b.1 },
            "switches": { "mean": s.0, "std": s.1 },
            "mean_reward": { "mean": r.0, "std": r.1 },
            "runs": rows.iter().map(|r| json!({
                "seed": r.seed,
                "workload_digest": r.digest,
                "utilization": r.utilization,
                "blocking": r.blocking,
                "switches": r.switches,
                "mean_reward": r.reward,
            })).collect::<Vec<_>>(),
        }));
    }
    if let Some(path) = out {
        let doc = json!({ "paired": paired, "seeds": seeds, "first_seed": first_seed, "controllers": summaries });
        let mut text = serde_json::to_string_pretty(&doc).expect("value is serializable");
        text.push('\n');
        write(path, &text)?;
    }
    Ok(())
}

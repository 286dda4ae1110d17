//! `socialcue`: run scenarios through the cue pipeline, diff logs and score
//! event logs.
//!
//! Exit status is 0 on success (or equal logs), 1 when `compare` finds a
//! difference and 2 on any error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use socialcue::arbiter::Variant;
use socialcue::config::Config;
use socialcue::eventlog::{compare_logs, parse_log, LogRecord};
use socialcue::headpose::FaceModel3D;
use socialcue::metrics::score_event_logs;
use socialcue::pipeline::{run, write_outputs, RunOptions};
use socialcue::simulator::{ground_truth_events, Scenario};

#[derive(Parser)]
#[command(name = "socialcue", version, about = "Social cue pipeline runner")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write event, command and report files.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// audio or haptics
        #[arg(long, default_value = "haptics")]
        variant: Variant,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Single-threaded, in-order execution.
        #[arg(long)]
        deterministic: bool,
        /// Quiet mode: drop speech and spearcons.
        #[arg(long)]
        mute: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// key = value constants file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Identify rendered faces instead of using scripted names.
        #[arg(long)]
        identify: bool,
        /// Render shaken frames and stabilize them.
        #[arg(long)]
        stabilize: bool,
    },
    /// Field-aware diff of two logs.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Allowed timestamp difference.
        #[arg(long, default_value_t = 0)]
        tol_ms: u64,
    },
    /// Gaze precision, recall and latency of an event log.
    Metrics {
        log: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Scenario the logs came from; enables latency.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_log(path: &Path) -> Result<Vec<LogRecord>, String> {
    parse_log(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_scenario(path: &Path) -> Result<Scenario, String> {
    Scenario::parse(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<Config, String> {
    match path {
        Some(p) => Config::parse(&read(p)?).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(Config::default()),
    }
}

fn execute(cmd: Cmd) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Run {
            scenario,
            variant,
            seed,
            deterministic,
            mute,
            out,
            config,
            identify,
            stabilize,
        } => {
            let s = load_scenario(&scenario)?;
            let cfg = load_config(config.as_deref())?;
            let opts = RunOptions {
                variant,
                seed,
                deterministic,
                mute,
                identify,
                stabilize,
            };
            let result = run(&s, &cfg, &opts).map_err(|e| format!("{}: {e}", scenario.display()))?;
            write_outputs(&result, &out).map_err(|e| format!("{}: {e}", out.display()))?;
            print!("{}", result.report.to_table());
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Compare { a, b, tol_ms } => {
            let diffs = compare_logs(&load_log(&a)?, &load_log(&b)?, tol_ms);
            for d in &diffs {
                println!("{d}");
            }
            Ok(if diffs.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Metrics {
            log,
            truth,
            scenario,
            config,
        } => {
            let predicted = load_log(&log)?;
            let reference = load_log(&truth)?;
            let (end, contacts) = match scenario {
                Some(path) => {
                    let s = load_scenario(&path)?;
                    let cfg = load_config(config.as_deref())?;
                    let gt = ground_truth_events(&s, &FaceModel3D::canonical(), &cfg.attention, &cfg.arbiter, Variant::Audio);
                    (Some(s.duration), gt.contacts)
                }
                None => (None, Vec::new()),
            };
            let report = score_event_logs(&predicted, &reference, end, &contacts).map_err(|e| e.to_string())?;
            print!("{}", report.to_table());
            println!();
            print!("{}", report.to_key_values());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use lieflow_cli::output::Sink;
use lieflow_cli::presets;
use lieflow_cli::run::{execute, write_manifest, RunReport};
use lieflow_cli::verify::{run_suite, Suite};
use lieflow_cli::{parse_scenario, CliError};

const OUT_ENV: &str = "LIEFLOW_OUT";
const DEFAULT_OUT: &str = "lieflow-out";
const IO_FAILURE: u8 = 1;

#[derive(Parser)]
#[command(
    name = "lieflow",
    version,
    about = "Geodesic flows on rotation and diffeomorphism groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file, or a list of them with --sweep.
    Simulate {
        #[arg(required_unless_present = "sweep", conflicts_with = "sweep")]
        scenario: Option<PathBuf>,
        /// Output directory (default: $LIEFLOW_OUT, then ./lieflow-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sample every N-th step, overriding the scenario.
        #[arg(long)]
        stride: Option<usize>,
        /// JSON array of scenario paths, run concurrently.
        #[arg(long)]
        sweep: Option<PathBuf>,
    },
    /// Run a built-in invariant suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Print the preset tables.
    Presets,
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Runs one scenario file into `dir`; returns the process exit code.
fn simulate_one(path: &Path, dir: &Path, stride: Option<usize>) -> u8 {
    let sink = match Sink::new(dir) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return IO_FAILURE;
        }
    };
    let parsed = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(path, e))
        .and_then(|text| parse_scenario(&text));
    let mut scenario = match parsed {
        Ok(s) => s,
        Err(CliError::Io { path, source }) => {
            eprintln!("error: {}: {source}", path.display());
            return IO_FAILURE;
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            let report = RunReport::config_error(e.to_string());
            if let Err(e) = write_manifest(&sink, None, &report) {
                eprintln!("error: {e}");
                return IO_FAILURE;
            }
            return report.status.exit_code() as u8;
        }
    };
    if let Some(s) = stride {
        if s == 0 {
            eprintln!("--stride must be at least 1");
            let report = RunReport::config_error("--stride must be at least 1");
            let _ = write_manifest(&sink, None, &report);
            return report.status.exit_code() as u8;
        }
        match &mut scenario {
            lieflow_cli::Scenario::RigidBody(r) => r.stride = s,
            lieflow_cli::Scenario::Circle(c) => c.stride = s,
            _ => {}
        }
    }
    match execute(&scenario, &sink) {
        Ok(report) => {
            let status = serde_json::to_string(&report.status).unwrap_or_default();
            let t = report.final_time.map_or(String::from("-"), |t| format!("{t}"));
            println!("{}: {} (t = {t})", path.display(), status.trim_matches('"'));
            if let Some(m) = &report.message {
                println!("  {m}");
            }
            report.status.exit_code() as u8
        }
        Err(e) => {
            eprintln!("error: {e}");
            IO_FAILURE
        }
    }
}

fn sweep(list: &Path, out: &Path, stride: Option<usize>) -> u8 {
    let entries: Vec<PathBuf> = match std::fs::read_to_string(list)
        .map_err(|e| CliError::io(list, e))
        .and_then(|t| serde_json::from_str::<Vec<PathBuf>>(&t).map_err(CliError::from))
    {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{}: {e}", list.display());
            return 3;
        }
    };
    let base = list.parent().unwrap_or(Path::new("."));
    let jobs: Vec<(PathBuf, PathBuf)> = entries
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let stem = p
                .file_stem()
                .map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
            (base.join(p), out.join(format!("{i:03}-{stem}")))
        })
        .collect();
    let next = AtomicUsize::new(0);
    let codes = Mutex::new(vec![0u8; jobs.len()]);
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((path, dir)) = jobs.get(i) else { break };
                let code = simulate_one(path, dir, stride);
                codes.lock().expect("no panics while holding the lock")[i] = code;
            });
        }
    });
    let codes = codes.into_inner().expect("workers finished");
    // an I/O failure outranks every run status
    if codes.contains(&IO_FAILURE) {
        IO_FAILURE
    } else {
        codes.into_iter().max().unwrap_or(0)
    }
}

fn print_presets() {
    println!("presets version {}", presets::PRESETS_VERSION);
    println!("\nu0:");
    for (name, formula) in presets::FIELD_PRESETS {
        println!("  {name:<10} {formula}");
    }
    println!("\nJ_diag:");
    for (name, d) in presets::J_PRESETS {
        println!("  {name:<10} {d:?}");
    }
    println!("\nomega0:");
    for (name, desc) in presets::OMEGA_PRESETS {
        println!("  {name:<12} {desc}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate {
            scenario,
            out,
            stride,
            sweep: list,
        } => {
            let out = out_dir(out);
            match (scenario, list) {
                (_, Some(list)) => sweep(&list, &out, stride),
                (Some(path), None) => simulate_one(&path, &out, stride),
                (None, None) => unreachable!("clap requires one of them"),
            }
        }
        Command::Verify { suite } => match run_suite(suite) {
            Ok(checks) => {
                for c in &checks {
                    println!("{}", c.line());
                }
                u8::from(!checks.iter().all(|c| c.passed()))
            }
            Err(e) => {
                eprintln!("suite aborted: {e}");
                IO_FAILURE
            }
        },
        Command::Presets => {
            print_presets();
            0
        }
    };
    ExitCode::from(code)
}

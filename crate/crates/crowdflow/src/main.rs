//! Batch CLI for the crowd-dynamics engine: `run` executes a scenario
//! (preset name or TOML file) into an output directory, `compare` reports
//! differences between two finished runs.

use clap::{Parser, Subcommand};
use crowdflow::compare::{compare, Metric};
use crowdflow::diagnostics::EmptyingTime;
use crowdflow::error::Error;
use crowdflow::runner::{load_scenario, run_scenario, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "crowdflow", version, about = "Non-local macroscopic crowd dynamics, batch runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario: a preset name (perception-test-1d, perception-test-2d,
    /// footbridge, station) or a path to a scenario TOML file.
    Run {
        scenario: String,
        /// Perception strategy override: s1|s2|s3|s4|local.
        #[arg(long)]
        strategy: Option<String>,
        /// Simulated end time override (nondimensional).
        #[arg(long)]
        t_end: Option<f64>,
        /// CFL target override.
        #[arg(long)]
        cfl: Option<f64>,
        /// Snapshot cadence override (simulated time units).
        #[arg(long)]
        dump_every: Option<f64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Also write the potential and desired-direction field.
        #[arg(long)]
        dump_potential: bool,
        /// Reserved; recorded in the manifest, runs are deterministic.
        #[arg(long)]
        seed: Option<u64>,
        /// Additional dotted-path overrides, e.g. perception.theta=0.5.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Compare two finished run directories.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// emptying-time | flux-peaks | density-diff | speed-crossing.
        #[arg(long, default_value = "emptying-time")]
        metric: String,
        /// Emptying threshold as a fraction of peak mass.
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run {
            scenario,
            strategy,
            t_end,
            cfl,
            dump_every,
            out_dir,
            dump_potential,
            seed,
            mut overrides,
        } => {
            if let Some(s) = strategy {
                overrides.push(format!("perception.strategy={s}"));
            }
            if let Some(t) = t_end {
                overrides.push(format!("run.t_end={t}"));
            }
            if let Some(c) = cfl {
                overrides.push(format!("run.cfl={c}"));
            }
            if let Some(d) = dump_every {
                overrides.push(format!("run.dump_every={d}"));
            }
            let scn = match load_scenario(&scenario).and_then(|s| s.apply_overrides(&overrides)) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let opts = RunOptions { out_dir, dump_potential, seed };
            match run_scenario(&scn, &opts) {
                Ok(summary) => {
                    println!("run complete: {}", opts_dir(&opts));
                    println!("  injected mass  {:.6e}", summary.injected);
                    println!("  exited mass    {:.6e}", summary.exited);
                    println!("  final mass     {:.6e}", summary.final_mass);
                    println!("  audit residual {:.3e}", summary.audit_residual);
                    match summary.emptying {
                        Some(EmptyingTime::At(t)) => println!("  emptying time  {t:.4}"),
                        Some(EmptyingTime::Unbounded { final_fraction }) => {
                            println!("  emptying time  unbounded (final fraction {final_fraction:.3e})")
                        }
                        None => {}
                    }
                    ExitCode::SUCCESS
                }
                Err(Error::InvalidScenario(problems)) => {
                    for p in &problems {
                        eprintln!("error: {p}");
                    }
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Cmd::Compare { dir_a, dir_b, metric, threshold } => {
            let metric = match metric.parse::<Metric>() {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match compare(&dir_a, &dir_b, metric, threshold) {
                Ok(report) => {
                    for line in &report.lines {
                        println!("{line}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

fn opts_dir(opts: &RunOptions) -> String {
    opts.out_dir.display().to_string()
}

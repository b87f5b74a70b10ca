//! Scenario runner and connectivity analytics front door.
//!
//! - `convoy run <cfg>` executes a scenario and writes trace.csv,
//!   metrics.csv, and decisions.csv;
//! - `convoy table1` prints the speed vs. max-time-in-range table with the
//!   field-measured reference column;
//! - `convoy table2` prints configured vs. empirical discovery means;
//! - `convoy validate` checks message URIs from stdin line by line.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};

use convoy_core::mfs::{format_message, parse_message};
use convoy_core::mobility::{in_range_table, CLASS1_TABLE_SPEEDS_KMH};
use convoy_core::radio::{sample_discovery, RadioProfile};
use convoy_core::scenario::{Scenario, ScenarioError};
use convoy_core::sim::{decisions_to_csv, metrics_to_csv, run_scenario, trace_to_csv};

#[derive(Parser)]
#[command(
    name = "convoy",
    about = "Deterministic inter-vehicle communication simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write CSV outputs.
    Run {
        /// Scenario TOML file.
        config: PathBuf,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run an inclusive seed range A..B in parallel (per-seed subdirs).
        #[arg(long, conflicts_with = "seed")]
        seeds: Option<String>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Speed vs. max time in range for one moving and one stationary node.
    Table1 {
        /// Radio range in meters.
        #[arg(long, default_value_t = 100.0)]
        range: f64,
        /// Speeds in km/h (comma separated).
        #[arg(long, value_delimiter = ',')]
        speeds: Option<Vec<f64>>,
    },
    /// Configured vs. empirical mean discovery time per device.
    Table2 {
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Uniform jitter half-width around each mean.
        #[arg(long, default_value_t = 0.5)]
        jitter: f64,
        /// Device means in seconds (comma separated).
        #[arg(long, value_delimiter = ',')]
        means: Option<Vec<f64>>,
    },
    /// Read message URIs from stdin; print one OK/ERR verdict per line.
    Validate,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            seed,
            seeds,
            out,
        } => cmd_run(&config, seed, seeds.as_deref(), &out),
        Command::Table1 { range, speeds } => cmd_table1(range, speeds),
        Command::Table2 {
            samples,
            seed,
            jitter,
            means,
        } => cmd_table2(samples, seed, jitter, means),
        Command::Validate => cmd_validate(),
    };
    std::process::exit(code);
}

fn cmd_run(config: &Path, seed: Option<u64>, seeds: Option<&str>, out: &Path) -> i32 {
    let scenario = match Scenario::load(config) {
        Ok(s) => s,
        Err(e @ ScenarioError::Io { .. }) => {
            eprintln!("error: {e}");
            return 2;
        }
        Err(e) => {
            eprintln!("error: {} does not validate:\n{e}", config.display());
            return 2;
        }
    };

    let seed_list: Vec<u64> = match seeds {
        Some(range) => match parse_seed_range(range) {
            Ok(list) => list,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        },
        None => vec![seed.unwrap_or(scenario.seed)],
    };

    let multi = seed_list.len() > 1;
    let result: anyhow::Result<()> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for &s in &seed_list {
            let scenario = &scenario;
            let dir = if multi {
                out.join(format!("seed-{s}"))
            } else {
                out.to_path_buf()
            };
            handles.push(scope.spawn(move || run_one(scenario, s, &dir)));
        }
        for h in handles {
            h.join().expect("seed worker panicked")?;
        }
        Ok(())
    });
    match result {
        Ok(()) => {
            for s in &seed_list {
                let dir = if multi {
                    out.join(format!("seed-{s}"))
                } else {
                    out.to_path_buf()
                };
                println!("seed {s}: wrote {}", dir.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn run_one(scenario: &Scenario, seed: u64, dir: &Path) -> anyhow::Result<()> {
    let output = run_scenario(scenario, seed).context("simulation failed")?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("trace.csv"), trace_to_csv(&output.trace))?;
    std::fs::write(dir.join("metrics.csv"), metrics_to_csv(&output.metrics))?;
    std::fs::write(
        dir.join("decisions.csv"),
        decisions_to_csv(&output.decisions),
    )?;
    Ok(())
}

fn parse_seed_range(text: &str) -> anyhow::Result<Vec<u64>> {
    let (a, b) = text
        .split_once("..")
        .with_context(|| format!("seed range must look like A..B, got {text:?}"))?;
    let a: u64 = a.trim().parse().context("bad range start")?;
    let b: u64 = b.trim().parse().context("bad range end")?;
    anyhow::ensure!(a <= b, "seed range start {a} exceeds end {b}");
    Ok((a..=b).collect())
}

fn cmd_table1(range: f64, speeds: Option<Vec<f64>>) -> i32 {
    let speeds = speeds.unwrap_or_else(|| CLASS1_TABLE_SPEEDS_KMH.to_vec());
    let rows = match in_range_table(range, &speeds) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "speed_kmh,speed_ms,duration_exact_s,duration_floor_s,published_s,verdict"
    )
    .unwrap();
    for row in rows {
        let published = row.reference_s.map(|v| v.to_string()).unwrap_or_default();
        let verdict = match row.matches_reference() {
            Some(true) => "match",
            Some(false) => "mismatch",
            None => "",
        };
        writeln!(
            out,
            "{},{:.1},{:.3},{},{published},{verdict}",
            row.speed_kmh, row.speed_ms, row.duration_exact_s, row.duration_floor_s
        )
        .unwrap();
    }
    0
}

const DEFAULT_DEVICE_MEANS: [f64; 4] = [2.25, 2.11, 2.33, 2.60];

fn cmd_table2(samples: u64, seed: u64, jitter: f64, means: Option<Vec<f64>>) -> i32 {
    if samples == 0 {
        eprintln!("error: --samples must be at least 1");
        return 2;
    }
    let means = means.unwrap_or_else(|| DEFAULT_DEVICE_MEANS.to_vec());
    let mut rng = {
        use rand::SeedableRng;
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    };
    let mut out = std::io::stdout().lock();
    writeln!(out, "device,configured_mean_s,empirical_mean_s,n_samples").unwrap();
    for (i, &mean) in means.iter().enumerate() {
        let profile = RadioProfile {
            discovery_mean: mean,
            discovery_jitter: jitter.min(mean),
            ..Default::default()
        };
        if let Err(e) = profile.validate() {
            eprintln!("error: device {}: {e}", i + 1);
            return 2;
        }
        let total: f64 = (0..samples)
            .map(|_| sample_discovery(&profile, &mut rng))
            .sum();
        let empirical = total / samples as f64;
        writeln!(
            out,
            "vehicle_device_{},{mean},{empirical:.6},{samples}",
            i + 1
        )
        .unwrap();
    }
    0
}

fn cmd_validate() -> i32 {
    let stdin = std::io::stdin().lock();
    let mut all_ok = true;
    for line in stdin.lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error reading stdin: {e}");
                return 2;
            }
        };
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            println!("ERR empty line");
            all_ok = false;
            continue;
        }
        match parse_message(line) {
            Ok(msg) => println!(
                "OK {}",
                format_message(&msg).expect("parsed message formats")
            ),
            Err(e) => {
                println!("ERR {e}");
                all_ok = false;
            }
        }
    }
    if all_ok {
        0
    } else {
        1
    }
}

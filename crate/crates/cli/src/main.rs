//! `nullgeo run <scenario>`: runs a registered scenario and prints its report.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nullgeo::config::{read_pairs, COMMON_KEYS};
use nullgeo::scenario::{self, RunOptions, SCENARIOS};

#[derive(Parser)]
#[command(name = "nullgeo", version, about = "Scenario runner for null geodesic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and emit its JSON report.
    Run {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for CSV plot data.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        max_param: Option<f64>,
        #[arg(long)]
        boundary_margin: Option<f64>,
        /// Grid oracle cache (scenarios that build a grid).
        #[arg(long)]
        grid_cache: Option<PathBuf>,
        /// Flat `key = value` file; command-line flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Extra `key=value` override, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List scenarios and their configuration keys.
    List,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("nullgeo: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for name in SCENARIOS {
                println!("{name}");
                for k in COMMON_KEYS.iter().chain(scenario::schema(name).expect("registered")) {
                    println!("    {:<18} {:<8} {}", k.name, k.default, k.help);
                }
            }
            ExitCode::SUCCESS
        }
        Command::Run { scenario: name, seed, out, plot_dir, rel_tol, max_param, boundary_margin, grid_cache, config, set } => {
            let mut overrides = BTreeMap::new();
            if let Some(path) = config {
                match read_pairs(&path) {
                    Ok(p) => overrides.extend(p),
                    Err(e) => return usage(e),
                }
            }
            for kv in set {
                match kv.split_once('=') {
                    Some((k, v)) => {
                        overrides.insert(k.trim().to_string(), v.trim().to_string());
                    }
                    None => return usage(format!("--set expects KEY=VALUE, got `{kv}`")),
                }
            }
            if let Some(s) = seed {
                overrides.insert("seed".into(), s.to_string());
            }
            for (k, v) in [("rel_tol", rel_tol), ("max_param", max_param), ("boundary_margin", boundary_margin)] {
                if let Some(v) = v {
                    overrides.insert(k.into(), v.to_string());
                }
            }
            if let Some(g) = grid_cache {
                overrides.insert("grid_cache".into(), g.display().to_string());
            }
            let report = match scenario::run(&name, &RunOptions { overrides, plot_dir }) {
                Ok(r) => r,
                Err(e) => return usage(e),
            };
            let text = report.to_json();
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text + "\n") {
                        return usage(format!("{}: {e}", path.display()));
                    }
                }
                None => println!("{text}"),
            }
            for a in &report.assertions {
                eprintln!("[{}] {}: expected {}, got {}", if a.pass { "pass" } else { "FAIL" }, a.name, a.expected, a.actual);
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

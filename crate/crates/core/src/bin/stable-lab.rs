use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use stable_lab::catalog;
use stable_lab::cli::{self, ExperimentConfig, ExperimentKind, ExperimentReport};

#[derive(Parser)]
#[command(name = "stable-lab", version, about = "Experiments on stable solutions of -Δu = f(u) on balls")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more experiment configs.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Override a config entry, e.g. `--set domain.spacing=0.01`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Worker threads; configs run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        emit_plot_data: bool,
        /// Binary iterates kept in an approximation trace.
        #[arg(long, value_parser = ["none", "last", "all"])]
        keep_iterates: Option<String>,
        /// Output directory (single config only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the catalog of radial solutions.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Random sweep of the matrix inequality.
    SweepMatrix {
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `2..6` (inclusive) or a comma list.
        #[arg(long, default_value = "2..6")]
        dims: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one series of a report as plot data.
    Plot {
        report: PathBuf,
        series: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    /// Summary of one entry as JSON.
    Show { entry: String },
}

fn parse_dims(s: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("cannot read dimensions `{s}`");
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn print_summary(path: &str, r: &ExperimentReport, out: &std::path::Path) {
    let failed: Vec<&str> = r.checks.iter().filter(|c| c.mandatory && !c.passed).map(|c| c.name.as_str()).collect();
    let status = match (&r.error, failed.is_empty()) {
        (Some(e), _) => format!("error [{}]: {}", e.code, e.message),
        (None, true) => "pass".to_string(),
        (None, false) => format!("fail: {}", failed.join(", ")),
    };
    println!("{path}: {} {} ({} checks) -> {}", r.experiment, status, r.checks.len(), out.display());
}

fn run_configs(configs: &[PathBuf], overrides: &[String], jobs: usize, plot: bool, out: Option<PathBuf>) -> u8 {
    if out.is_some() && configs.len() > 1 {
        eprintln!("error: --out needs exactly one config");
        return 2;
    }
    let one = |path: &PathBuf| -> u8 {
        let mut cfg = match ExperimentConfig::load(path, overrides) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return 2;
            }
        };
        cfg.emit_plot_data |= plot;
        let dir = cli::resolve_output(&cfg, Some(path), out.as_deref());
        match cli::run_to_dir(&cfg, &dir) {
            Ok(r) => {
                print_summary(&path.display().to_string(), &r, &dir);
                r.exit_code() as u8
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                2
            }
        }
    };
    let codes: Vec<u8> = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(|| configs.par_iter().map(one).collect()),
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    codes.into_iter().max().unwrap_or(0)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match args.command {
        Command::Run {
            configs,
            mut overrides,
            jobs,
            emit_plot_data,
            keep_iterates,
            out,
        } => {
            if let Some(k) = keep_iterates {
                overrides.push(format!("approximation.keep_iterates=\"{k}\""));
            }
            run_configs(&configs, &overrides, jobs, emit_plot_data, out)
        }
        Command::Catalog { action: CatalogAction::List } => {
            for (name, about) in catalog::list() {
                println!("{name:<28} {about}");
            }
            0
        }
        Command::Catalog {
            action: CatalogAction::Show { entry },
        } => match catalog::RadialSolution::parse(&entry) {
            Ok(rs) => {
                println!("{}", serde_json::to_string_pretty(&rs.summary()).expect("summary serializes"));
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::SweepMatrix { trials, seed, dims, out } => {
            let dims = match parse_dims(&dims) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let mut cfg = ExperimentConfig::new(ExperimentKind::MatrixSweep);
            cfg.seed = seed;
            cfg.matrix.trials = trials;
            cfg.matrix.dims = dims;
            let r = match &out {
                Some(dir) => match cli::run_to_dir(&cfg, dir) {
                    Ok(r) => r,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                },
                None => cli::run(&cfg),
            };
            if let Some(e) = &r.error {
                eprintln!("error [{}]: {}", e.code, e.message);
            }
            println!("n  trials  min_margin  min_scaled_margin  violations");
            if let Some(sweeps) = r.data.get("sweeps").and_then(|s| s.as_array()) {
                for s in sweeps {
                    println!(
                        "{}  {}  {:e}  {:e}  {}",
                        s["n"], s["trials"], s["min_margin"].as_f64().unwrap_or(f64::NAN),
                        s["min_scaled_margin"].as_f64().unwrap_or(f64::NAN), s["violations"]
                    );
                }
            }
            r.exit_code() as u8
        }
        Command::Plot { report, series, out } => match cli::plot_from_file(&report, &series, out.as_deref()) {
            Ok(p) => {
                println!("{}", p.display());
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
    };
    ExitCode::from(code)
}

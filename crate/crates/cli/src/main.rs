use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cavitation_cli::config::AnalysisRequest;
use cavitation_cli::{exit, run, ExperimentConfig, Resolved};
use cavitation_core::grid::Domain;
use cavitation_core::scenario::{presets, SCENARIOS};
use cavitation_core::weights::{a2_constant, BallFamily};
use cavitation_core::WeightSpec;

#[derive(Parser)]
#[command(name = "cavitation", version, about = "Weighted cavitation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Directory for dumps, CSVs and summary.json (overrides the config).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Seed for multi-start perturbations (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and run the analyses requested in a config file.
    Run { config: PathBuf },
    /// List boundary scenarios and experiment presets.
    ListScenarios,
    /// Estimate the A2 constant of a weight spec on [-1, 1]^d.
    A2 { spec: PathBuf },
    /// Solve a config and run only the growth analysis.
    Growth { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::USAGE);
        }
    }
    let code = match cli.command.as_ref().unwrap_or(&Command::ListScenarios) {
        Command::ListScenarios => {
            print!("{}", listing());
            exit::OK
        }
        Command::Run { config } => run_config(config, &cli, None),
        Command::Growth { config } => run_config(config, &cli, Some(AnalysisRequest::Growth { near: None })),
        Command::A2 { spec } => a2(spec, &cli),
    };
    ExitCode::from(code)
}

fn listing() -> String {
    let mut out = String::from("boundary scenarios:\n");
    for (name, description) in SCENARIOS {
        out += &format!("  {name:<16} {description}\n");
    }
    out += "presets:\n";
    for p in presets() {
        out += &format!("  {:<16} {}\n", p.name, p.description);
    }
    out
}

fn load(path: &Path, cli: &Cli, only: Option<AnalysisRequest>) -> Result<Resolved, String> {
    let mut cfg = ExperimentConfig::from_path(path).map_err(|e| e.to_string())?;
    if let Some(request) = only {
        cfg.analyses = vec![request];
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = Some(dir.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.resolve().map_err(|e| e.to_string())
}

fn run_config(path: &Path, cli: &Cli, only: Option<AnalysisRequest>) -> u8 {
    let cfg = match load(path, cli, only) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for c in &outcome.summary.checks {
                println!("{:<8} {}", c.name, if c.pass { "pass" } else { "FAIL" });
            }
            if !outcome.converged {
                eprintln!("error: the solver did not converge");
                exit::NOT_CONVERGED
            } else if outcome.summary.all_passed {
                exit::OK
            } else {
                exit::CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit::USAGE
        }
    }
}

fn a2(path: &Path, cli: &Cli) -> u8 {
    let spec = match std::fs::read_to_string(path)
        .map_err(|e| e.to_string())
        .and_then(|text| WeightSpec::from_json(&text).map_err(|e| e.to_string()))
    {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return exit::USAGE;
        }
    };
    let report = match a2_constant(&spec, &Domain::cube(spec.dim, -1.0, 1.0), &BallFamily::default()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
    };
    let min = report.per_ball_products.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("c1_estimate {:.12}", report.c1_estimate);
    println!("min_product {min:.12} over {} balls", report.per_ball_products.len());
    if let Some(dir) = &cli.output_dir {
        let written = std::fs::create_dir_all(dir)
            .map_err(anyhow::Error::from)
            .and_then(|_| Ok(serde_json::to_string_pretty(&report)?))
            .and_then(|text| Ok(std::fs::write(dir.join("a2.json"), text + "\n")?));
        if let Err(e) = written {
            eprintln!("error: {e:#}");
            return exit::USAGE;
        }
    }
    if min >= 1.0 - 1e-12 {
        exit::OK
    } else {
        exit::CHECK_FAILED
    }
}

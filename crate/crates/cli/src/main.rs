use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scalelab_core::harness::{emit, run, Experiment, ExperimentConfig, RunOutput, Status};

#[derive(Parser, Debug)]
#[command(name = "scalelab", version, about = "Scaling-limit, nuclearity and sector experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// JSON configuration file; omitted fields take their defaults.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Covariance, massless invariance, convergence and factorization of Gaussian states.
    ScalingLimit(Common),
    /// Damping-operator spectra for the free and the box-damped factor.
    Nuclearity(Common),
    /// Energy indicator and preservation distances.
    ChargeEnergy(Common),
    /// Preserved / non-preserved sector tables.
    Sectors(Common),
    /// Finite-rank map property suite.
    Appendix(Common),
    /// Every experiment in sequence.
    All(Common),
    /// Print the default configuration as JSON.
    DefaultConfig,
}

fn summarize(output: &RunOutput) {
    let report = &output.report;
    for t in &output.timings {
        eprintln!("{:>9.3}s  {}/{} ({})", t.elapsed.as_secs_f64(), t.experiment, t.cell, t.params);
    }
    for v in &report.verdicts {
        let status = match v.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
            Status::Reported => "INFO",
        };
        let measured = v.measured.map(|m| format!("{m:.4e}")).unwrap_or_else(|| "-".into());
        eprintln!("{status:5} {:28} measured={measured:12} {}", v.id, v.detail);
    }
    for e in &report.cell_errors {
        eprintln!("cell error in {}/{} ({}): {}", e.experiment, e.cell, e.params, e.message);
    }
}

fn execute(exp: Experiment, args: Common) -> Result<i32, (i32, String)> {
    let config_err = |e: scalelab_core::Error| (2, e.to_string());
    let mut config = ExperimentConfig::load(&args.config).map_err(config_err)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args
        .out
        .or_else(|| config.output_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("scalelab-out"));
    let threads = args.threads.unwrap_or(0);
    if args.threads == Some(0) {
        return Err((2, "--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| (1, e.to_string()))?;
    let output = pool.install(|| run(exp, &config)).map_err(config_err)?;
    emit(&output, &out).map_err(|e| (1, e.to_string()))?;
    summarize(&output);
    eprintln!("wrote {} tables and report.json to {}", output.tables.len(), out.display());
    Ok(output.report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (exp, args) = match cli.command {
        Command::ScalingLimit(a) => (Experiment::ScalingLimit, a),
        Command::Nuclearity(a) => (Experiment::Nuclearity, a),
        Command::ChargeEnergy(a) => (Experiment::ChargeEnergy, a),
        Command::Sectors(a) => (Experiment::Sectors, a),
        Command::Appendix(a) => (Experiment::Appendix, a),
        Command::All(a) => (Experiment::All, a),
        Command::DefaultConfig => {
            let text = serde_json::to_string_pretty(&ExperimentConfig::default()).expect("default config serializes");
            println!("{text}");
            return ExitCode::SUCCESS;
        }
    };
    match execute(exp, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}

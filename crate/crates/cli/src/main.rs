mod config;
mod experiment;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use crsum_core::verify::{run_suite, Fault, Suite, VerifyOptions};

use crate::config::{apply, parse_config};
use crate::experiment::{preset, run_experiment, Experiment, PRESETS};

/// Ergodic sum capacity of fading cognitive MAC and BC channels.
#[derive(Parser)]
#[command(name = "crsum", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or configured experiment and write one CSV per curve.
    Run(RunArgs),
    /// Run the invariant and oracle suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// One of fig3, fig4, fig5, fig6, fig7, fig8.
    #[arg(long)]
    preset: Option<String>,
    /// Configuration file with one `[section]` per experiment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Constraint cases, comma-separated (I, II, III, IV).
    #[arg(long)]
    case: Option<String>,
    /// full, tdma or fra (comma-separated for several).
    #[arg(long)]
    mode: Option<String>,
    /// mac or bc.
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "K")]
    k: Option<String>,
    #[arg(long = "M")]
    m: Option<String>,
    /// Transmit-power grid in dB: a list `0,5,10` or `start:step:stop`.
    #[arg(long = "P-dB", allow_hyphen_values = true)]
    p_db: Option<String>,
    #[arg(long = "Q-dB", allow_hyphen_values = true)]
    q_db: Option<String>,
    /// Interference limit of every primary receiver (linear).
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// lemmas, kkt, oracle, tdma, bc, dual or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Smaller instance counts for a fast smoke run.
    #[arg(long)]
    quick: bool,
    /// Corrupt the Case I water level to confirm the suites catch it.
    #[arg(long)]
    inject_fault: bool,
}

fn experiments(args: &RunArgs) -> Result<Vec<Experiment>> {
    let mut exps = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?
        }
        (None, Some(name)) => vec![preset(name)
            .ok_or_else(|| anyhow!("unknown preset {name:?}; available: {}", PRESETS.join(", ")))?],
        (None, None) => vec![Experiment::empty("custom")],
    };
    let overrides = [
        ("preset", if args.config.is_some() { args.preset.as_ref() } else { None }),
        ("channel", args.channel.as_ref()),
        ("case", args.case.as_ref()),
        ("mode", args.mode.as_ref()),
        ("samples", args.samples.as_ref()),
        ("seed", args.seed.as_ref()),
        ("K", args.k.as_ref()),
        ("M", args.m.as_ref()),
        ("P_dB", args.p_db.as_ref()),
        ("Q_dB", args.q_db.as_ref()),
        ("gamma", args.gamma.as_ref()),
    ];
    for exp in &mut exps {
        for (key, value) in overrides {
            if let Some(v) = value {
                apply(exp, key, v).map_err(|e| anyhow!("--{key}: {e}"))?;
            }
        }
    }
    Ok(exps)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let exps = experiments(&args)?;
    let mut stdout = std::io::stdout().lock();
    let mut failed = false;
    for exp in &exps {
        let outcome = run_experiment(exp, &args.out, &mut stdout)?;
        for f in &outcome.files {
            use std::io::Write;
            writeln!(stdout, "wrote {}", f.display())?;
        }
        failed |= !outcome.failures.is_empty();
    }
    Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let suite: Suite = args.suite.parse()?;
    let base = if args.quick { VerifyOptions::quick() } else { VerifyOptions::default() };
    let opts = VerifyOptions {
        seed: args.seed,
        fault: args.inject_fault.then_some(Fault::Case1WaterLevel),
        ..base
    };
    let report = run_suite(suite, &opts)?;
    println!("{report}");
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

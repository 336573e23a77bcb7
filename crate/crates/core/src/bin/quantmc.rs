use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quantmc::bounds::{compare_tightness, write_bound_csv, BoundInputs, FormulaId};
use quantmc::harness::{emit_report, fit_rate, run_experiment, write_report, ExperimentConfig, ExperimentOutput, Scenario};

#[derive(Parser)]
#[command(version, about = "Quantized and one-bit matrix completion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment described by a TOML config.
    Run(RunArgs),
    /// Run a rate sweep and fit the log-log slope of the median error.
    Rate(RunArgs),
    /// Evaluate every closed-form bound for `key=value` parameters.
    Bounds {
        /// e.g. `n1=32 n2=32 r=2 epsilon=0.05 resolution=0.25 levels=8`
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// CSV destination; overrides `output`, stdout when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &RunArgs) -> quantmc::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if args.out.is_some() {
        cfg.output.clone_from(&args.out);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(output: &ExperimentOutput) -> quantmc::Result<()> {
    match &output.config.output {
        Some(path) => emit_report(output, path),
        None => write_report(std::io::stdout().lock(), &output.records, &output.summary, &[]),
    }
}

fn run(args: &RunArgs, rate: bool) -> quantmc::Result<()> {
    let cfg = load(args)?;
    if rate && cfg.scenario != Scenario::RateSweep {
        return Err(quantmc::Error::Config(format!(
            "`rate` needs scenario = \"rate_sweep\", got \"{}\"",
            cfg.scenario.name()
        )));
    }
    let output = run_experiment(&cfg)?;
    write(&output)?;
    for g in &output.summary {
        eprintln!(
            "{} m'={}: median err {:.4}, bound {:.4}, satisfied {:.1}%, converged {}/{}",
            g.bound_id,
            g.m_prime,
            g.median_err,
            g.bound_value_median,
            100.0 * g.satisfaction_rate,
            g.converged,
            g.records
        );
    }
    if rate {
        let fit = fit_rate(&output.records)?;
        println!("slope {:.4} ± {:.4} (95%)", fit.slope, fit.half_width);
    }
    Ok(())
}

fn bounds(params: &[String], out: Option<&Path>) -> quantmc::Result<()> {
    let inputs = BoundInputs::from_pairs(params)?;
    let rows = FormulaId::ALL
        .iter()
        .filter_map(|f| f.evaluate(&inputs).ok().map(|v| (inputs, v)))
        .collect::<Vec<_>>();
    match out {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| quantmc::Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            write_bound_csv(f, &rows)?;
        }
        None => write_bound_csv(std::io::stdout().lock(), &rows)?,
    }
    if let Ok(t) = compare_tightness(&inputs) {
        eprintln!("tightness (T = α²/3): {:?}, q1² − q2² = {:.6}", t.verdict, t.gap);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a, false),
        Command::Rate(a) => run(a, true),
        Command::Bounds { params, out } => bounds(params, out.as_deref()),
    };
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

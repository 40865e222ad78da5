use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use torsion_lab_cli::config::{ConfigError, ExperimentConfig};
use torsion_lab_cli::verify::{verify_all, CensusSetup, VerifyOptions};
use torsion_lab_cli::{apply_thread_cap, run, CliError};

#[derive(Parser)]
#[command(name = "torsion-lab", version, about = "Torsion and Witten-deformation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment: torsion, anomaly, birth-death, witten-glue,
    /// small-eig, agmon, cubic, cheeger-muller or suspension.
    Run {
        /// `[EXPERIMENT] [--config FILE] [--key value]...`. The experiment
        /// name may instead come from the config file; flags override it.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "ARGS")]
        args: Vec<String>,
    },
    /// Run the acceptance suite and print PASS/FAIL per criterion.
    Verify {
        /// Override the outer radius r2 of the birth-death census.
        #[arg(long)]
        r2: Option<f64>,
        /// Print per-criterion wall times to stderr.
        #[arg(long)]
        timings: bool,
    },
}

/// Experiment name, config file and remaining flags.
type RunArgs = (Option<String>, Option<PathBuf>, Vec<String>);

/// Separates the optional leading experiment name and `--config FILE` from
/// the parameter flags.
fn split_run_args(args: Vec<String>) -> Result<RunArgs, ConfigError> {
    let mut it = args.into_iter().peekable();
    let experiment = it.next_if(|a| !a.starts_with("--"));
    let (mut config, mut params) = (None, Vec::new());
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(PathBuf::from(it.next().ok_or(ConfigError::MalformedFlag(a))?));
        } else if let Some(path) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else {
            params.push(a);
        }
    }
    Ok((experiment, config, params))
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = apply_thread_cap() {
        return fail(e.into());
    }
    match cli.command {
        Command::Run { args } => {
            let (experiment, config, params) = match split_run_args(args) {
                Ok(x) => x,
                Err(e) => return fail(e.into()),
            };
            let cfg = match ExperimentConfig::load(experiment.as_deref(), config.as_deref(), &params) {
                Ok(c) => c,
                Err(e) => return fail(e.into()),
            };
            match run(&cfg) {
                Ok(rep) => {
                    println!("{} rows written to {} in {:.3} s", rep.table.rows.len(), rep.output_dir.display(), rep.wall_time_seconds);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Verify { r2, timings } => {
            let census = CensusSetup { r2: r2.unwrap_or(CensusSetup::default().r2), ..CensusSetup::default() };
            let results = verify_all(&VerifyOptions { census }, |r| {
                println!("{}", r.line());
                if timings {
                    eprintln!("  criterion {} took {:.2} s (budget {} s)", r.id, r.elapsed.as_secs_f64(), r.budget.as_secs());
                }
            });
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} of {} criteria passed", results.len() - failed, results.len());
            if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) }
        }
    }
}

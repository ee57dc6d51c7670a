use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use pqwf::cli::{self, ExperimentConfig, EXIT_FLOOR_FAILURE};
use pqwf::eval::render_text;
use pqwf::Result;

#[derive(Parser, Debug)]
#[command(name = "pqwf", version, about = "Power-quality disturbance classification pipeline")]
struct Args {
    /// Print the default configuration as TOML and exit.
    #[arg(long)]
    print_default_config: bool,

    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize the labelled waveform dataset.
    Generate,
    /// Decompose every signal and write the feature table.
    Extract {
        /// Dataset CSV (default: <out>/dataset.csv).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Split, train the enabled classifiers and write reports.
    TrainEval {
        /// Feature CSV (default: <out>/features.csv).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Export one signal and its detail bands as CSV and SVG.
    Plot {
        #[arg(long)]
        id: u64,
        /// Dataset CSV (default: <out>/dataset.csv).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// generate, extract and train-eval in one go.
    Run,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn execute(args: Args) -> Result<i32> {
    let cfg = load_config(args.config.as_deref())?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let Some(command) = args.command else {
        eprintln!("no subcommand given; see --help");
        return Ok(2);
    };
    let started = Instant::now();
    let code = match command {
        Command::Generate => {
            let s = cli::cmd_generate(&cfg, &out)?;
            println!("wrote {} signals to {}", s.rows, s.path.display());
            0
        }
        Command::Extract { input } => {
            let input = input.unwrap_or_else(|| out.join(cli::DATASET_FILE));
            let s = cli::cmd_extract(&cfg, &input, &out)?;
            println!(
                "wrote {} feature rows to {} ({} skipped)",
                s.rows,
                s.path.display(),
                s.warnings.len()
            );
            0
        }
        Command::TrainEval { input } => {
            let input = input.unwrap_or_else(|| out.join(cli::FEATURES_FILE));
            let report = cli::cmd_train_eval(&cfg, &input, &out)?;
            print!("{}", render_text(&report));
            if report.comparison.pass { 0 } else { EXIT_FLOOR_FAILURE }
        }
        Command::Plot { id, input } => {
            let input = input.unwrap_or_else(|| out.join(cli::DATASET_FILE));
            let s = cli::cmd_plot(&cfg, &input, id, &out)?;
            println!("wrote {}, {} and {}", s.waveform.display(), s.coefficients.display(), s.svg.display());
            0
        }
        Command::Run => {
            let s = cli::cmd_run(&cfg, &out)?;
            print!("{}", render_text(&s.report));
            if s.report.comparison.pass { 0 } else { EXIT_FLOOR_FAILURE }
        }
    };
    println!("elapsed: {:.1} s", started.elapsed().as_secs_f64());
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    if args.print_default_config {
        print!("{}", ExperimentConfig::default().to_toml());
        return ExitCode::SUCCESS;
    }
    match execute(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}

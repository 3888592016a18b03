use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use massive_csi::experiment::{emit, run_experiment_with_workers, ExperimentConfig, OutputFormat};
use massive_csi::CsiError;

/// Monte Carlo experiments for decoupled massive MIMO channel estimation.
#[derive(Debug, Parser)]
#[command(name = "csi-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment file and write `<scenario>.csv` and `<scenario>.svg`.
    Run {
        /// TOML experiment description.
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Override `n_trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Override `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Skip the SVG plot.
        #[arg(long)]
        no_plot: bool,
    },
    /// Parse and validate an experiment file without running it.
    Check { config: PathBuf },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::from_path(path).map_err(|e| {
        match e {
            CsiError::Config(errs) => {
                eprintln!("invalid config {}:", path.display());
                for err in errs {
                    eprintln!("  - {err}");
                }
            }
            other => eprintln!("cannot read {}: {other}", path.display()),
        }
        ExitCode::from(EXIT_CONFIG)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check { config } => match load(&config) {
            Ok(cfg) => {
                println!("{}: ok ({})", config.display(), cfg.scenario.name());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run {
            config,
            out,
            trials,
            seed,
            workers,
            no_plot,
        } => {
            let mut cfg = match load(&config) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            if let Some(n) = trials {
                cfg.n_trials = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Err(CsiError::Config(errs)) = cfg.validate() {
                eprintln!("invalid overrides:");
                for err in errs {
                    eprintln!("  - {err}");
                }
                return ExitCode::from(EXIT_CONFIG);
            }
            let rows = match run_experiment_with_workers(&cfg, workers) {
                Ok(rows) => rows,
                Err(e) => {
                    eprintln!("run failed: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            };
            if let Err(e) = std::fs::create_dir_all(&out) {
                eprintln!("cannot create {}: {e}", out.display());
                return ExitCode::from(EXIT_RUNTIME);
            }
            let name = cfg.scenario.name();
            let mut targets = vec![(OutputFormat::Csv, out.join(format!("{name}.csv")))];
            if !no_plot {
                targets.push((OutputFormat::PlotSvg, out.join(format!("{name}.svg"))));
            }
            for (format, path) in targets {
                if let Err(e) = emit(&rows, format, &path) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return ExitCode::from(EXIT_RUNTIME);
                }
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
    }
}

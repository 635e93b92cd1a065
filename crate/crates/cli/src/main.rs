use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use l80::config::{ExperimentConfig, ModelSource};
use l80::neural::{Arch, ParameterizationKind};
use l80::pipelines::{cmd_close, cmd_lobes, cmd_simulate, cmd_train};
use l80::{Error, Regime};

/// Lorenz-80 experiments: simulate, fit closures, run them, count lobe transitions.
#[derive(Parser, Debug)]
#[command(name = "l80", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of the config file.
#[derive(Args, Debug)]
struct Common {
    /// Experiment config file (key = value with sections)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parameter preset
    #[arg(long, global = true, value_parser = ["hlf", "slow"])]
    regime: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Train/validation/test assignment
    #[arg(long, global = true, value_parser = ["random", "predefined"])]
    split: Option<String>,
    /// Hidden layers x neurons per layer, e.g. 1x5
    #[arg(long, global = true)]
    arch: Option<Arch>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write trajectories as CSV
    #[arg(long, global = true)]
    csv: bool,
    /// Recording stride in integrator steps (simulate and close)
    #[arg(long, global = true)]
    stride: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the nine-variable model
    Simulate {
        /// Recorded length in days
        #[arg(long)]
        days: Option<f64>,
        /// Discarded transient in days
        #[arg(long)]
        spinup: Option<f64>,
    },
    /// Fit a parameterization to a simulated trajectory
    Train {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, value_parser = ["slow_pair", "vanilla"])]
        kind: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Run the closed model and write the diagnostics bundle
    Close {
        /// Directory written by `train`
        #[arg(long)]
        model: PathBuf,
        /// Reference trajectory; the run starts from its last state
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        days: Option<f64>,
    },
    /// Lobe transitions and sojourn statistics of a trajectory
    Lobes {
        #[arg(long)]
        trajectory: PathBuf,
        /// Lobe threshold
        #[arg(long)]
        y_b: Option<f64>,
    },
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(r) = &c.regime {
        cfg.model = ModelSource::Preset(r.parse::<Regime>()?);
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(s) = &c.split {
        cfg.network.split = if s == "random" { "random" } else { "predefined" };
    }
    if let Some(a) = c.arch {
        cfg.network.arch = a;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    cfg.csv |= c.csv;
    if let Some(s) = c.stride {
        cfg.integration.stride = s;
        cfg.closure.stride = s;
    }
    match &cli.command {
        Command::Simulate { days, spinup } => {
            if let Some(d) = days {
                cfg.integration.record_days = *d;
                // a shorter record caps the training span stored in the config
                cfg.training.span_days = cfg.training.span_days.map(|s| s.min(*d));
            }
            if let Some(s) = spinup {
                cfg.integration.spinup_days = *s;
            }
        }
        Command::Train { kind, epochs, .. } => {
            if let Some(k) = kind {
                cfg.network.kind = k.parse::<ParameterizationKind>()?;
            }
            if let Some(e) = epochs {
                cfg.network.train.epochs = *e;
            }
        }
        Command::Close { days, .. } => {
            if let Some(d) = days {
                cfg.closure.days = *d;
            }
        }
        Command::Lobes { y_b, .. } => {
            if y_b.is_some() {
                cfg.lobes.y_b = *y_b;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::Simulate { .. } => {
            let r = cmd_simulate(&cfg)?;
            println!("wrote {} ({} samples, {} days)", r.path.display(), r.trajectory.len(), r.trajectory.span());
        }
        Command::Train { trajectory, .. } => {
            let r = cmd_train(&cfg, trajectory)?;
            for (name, s) in &r.stages {
                println!(
                    "{name}: best epoch {} train {:.4e} val {:.4e} test {:.4e}",
                    s.best_epoch,
                    s.best_train(),
                    s.best_val(),
                    s.best_test()
                );
            }
            println!("wrote model to {}", cfg.out_dir.display());
        }
        Command::Close { model, truth, .. } => {
            let r = cmd_close(&cfg, model, truth.as_deref())?;
            println!(
                "closure: {} samples, {} transitions, max sojourn {:.2} days",
                r.closure.len(),
                r.lobes.transitions.transitions.len(),
                r.lobes.summary.max_sojourn
            );
            if let Some(d) = &r.deficit {
                println!("spectral deficit {:.3e} {:.3e} {:.3e}", d.ratio[0], d.ratio[1], d.ratio[2]);
            }
            println!("wrote bundle to {}", cfg.out_dir.display());
        }
        Command::Lobes { trajectory, .. } => {
            let r = cmd_lobes(&cfg, trajectory)?;
            print!("{}", r.summary.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `neuromouse`: file-based pipeline from raw pointer logs to trained detectors.

mod commands;
mod exit;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "neuromouse", version, about = "Mouse-dynamics bot detection toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Seed for every random draw (default 0; `bench` falls back to the benchmark file's seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Report errors on stderr as a JSON object.
    #[arg(long, global = true)]
    pub json: bool,
    /// Echo the effective configuration as JSON before running.
    #[arg(long, global = true)]
    pub print_config: bool,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl Global {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a raw `timestamp,event,x,y` log into labelled trajectories.
    Ingest {
        csv: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Label for every trajectory in the log.
        #[arg(long, default_value = "human")]
        attack: String,
    },
    /// Generate function-based bot trajectories.
    Synth {
        #[arg(long)]
        shape: String,
        #[arg(long)]
        vp: u8,
        #[arg(short = 'n', long)]
        n: usize,
        /// Per-direction point-count statistics (JSON).
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train the adversarial generator on human trajectories.
    GanTrain {
        humans: PathBuf,
        #[arg(long, default_value = "desk")]
        preset: String,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Sample trajectories from a trained generator.
    GanGen {
        bundle: PathBuf,
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Sigma-Lognormal decomposition of every trajectory.
    Decompose {
        dataset: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Feature table for a trajectory dataset.
    Features {
        dataset: PathBuf,
        #[arg(long, default_value = "combined")]
        set: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Assemble a labelled benchmark from a spec file.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        /// Generator bundle, required when the benchmark file asks for GAN samples.
        #[arg(long)]
        gan: Option<PathBuf>,
        /// Real human trajectories to use instead of surrogates.
        #[arg(long)]
        humans: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fit a detector on a feature table (or, for `rnn`, a trajectory dataset).
    Train {
        data: PathBuf,
        #[arg(long)]
        model: String,
        /// Hyperparameters as JSON; missing fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Repeated hold-out evaluation with the model's hyperparameters.
    Eval {
        model: PathBuf,
        data: PathBuf,
        #[arg(long, default_value = "none")]
        by: String,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0.7)]
        train_frac: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Accuracy against training-set size.
    Curve {
        features: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "rf,knn,mlp")]
        models: Vec<String>,
        #[arg(long = "L", value_delimiter = ',', default_value = "100,500,1000")]
        l: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0.7)]
        train_frac: f64,
        /// Trajectory dataset for the `rnn` model.
        #[arg(long)]
        trajectories: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// HTTP service for classification and bot replay.
    Serve {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        gan: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Allowed CORS origin (default: any).
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

fn main() {
    let json = std::env::args().any(|a| a == "--json");
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            std::process::exit(exit::OK);
        }
        Err(e) => {
            if json {
                exit::report_json("usage", &e.to_string());
            } else {
                let _ = e.print();
            }
            std::process::exit(exit::USAGE);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = exit::configure_threads(cli.global.threads).and_then(|_| commands::run(&cli.global, cli.command));
    if let Err(e) = result {
        let code = exit::code(&e);
        if cli.global.json {
            exit::report_json(exit::kind(code), &format!("{e:#}"));
        } else {
            eprintln!("error: {e:#}");
        }
        std::process::exit(code);
    }
}

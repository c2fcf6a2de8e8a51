mod commands;
mod error;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdconv::gradient::EmbeddingGradient;
use qdconv::model::{Preset, Variant};

use crate::error::CliResult;
use crate::spec::{Flags, ModelOverrides, Resolved, RunSpecFile, TrainingOverrides};

/// Train and evaluate quantum depthwise-convolution text classifiers on
/// simulated statevectors.
///
/// The dataset root defaults to $QDCONV_DATA, then the repository's data/
/// directory. Exit codes: 0 success, 1 configuration error, 2 data error,
/// 3 verification failure.
#[derive(Parser)]
#[command(name = "qdconv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one variant for every seed and write reports plus a summary.
    Train(RunArgs),
    /// Evaluate a checkpoint on every split of its dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train msff-qdconv, qdconv, qse and msff-qconv under identical seeds.
    Ablate {
        /// Also train the classical msff-conv and msff-dconv counterparts.
        #[arg(long)]
        with_classical: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print trainable parameter counts per variant.
    CountParams(RunArgs),
    /// Compare model gradients with central finite differences.
    Gradcheck {
        /// Number of training examples in the checked batch.
        #[arg(long, default_value_t = 2)]
        batch: usize,
        /// Maximum allowed relative error.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Differentiation of the amplitude-encoded embeddings.
        #[arg(long, default_value = "parameter-shift", value_parser = parse_method)]
        method: EmbeddingGradient,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Hyperparameter preset: mc or rp.
    #[arg(long)]
    preset: Option<Preset>,
    /// TOML run specification; flags override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    /// Run seeds 0..N.
    #[arg(long)]
    seeds: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dataset directory, overriding $QDCONV_DATA.
    #[arg(long)]
    data_root: Option<PathBuf>,
    #[arg(long)]
    d_qemb: Option<usize>,
    #[arg(long)]
    d_qconv: Option<usize>,
    #[arg(long)]
    d_qfc: Option<usize>,
    #[arg(long)]
    n_qemb: Option<usize>,
    #[arg(long)]
    kernel: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// adjoint or parameter-shift.
    #[arg(long, value_parser = parse_method)]
    embedding_gradient: Option<EmbeddingGradient>,
}

fn parse_method(s: &str) -> Result<EmbeddingGradient, String> {
    match s {
        "adjoint" => Ok(EmbeddingGradient::Adjoint),
        "parameter-shift" => Ok(EmbeddingGradient::ParameterShift),
        _ => Err(format!("expected adjoint or parameter-shift, got {s:?}")),
    }
}

impl RunArgs {
    fn resolve(self) -> CliResult<Resolved> {
        let spec = match &self.spec {
            Some(p) => RunSpecFile::read(p)?,
            None => RunSpecFile::default(),
        };
        let flags = Flags {
            preset: self.preset,
            variant: self.variant,
            seeds: self.seeds.map(|n| (0..n).collect()),
            out: self.out,
            data_root: self.data_root,
            model: ModelOverrides {
                d_qemb: self.d_qemb,
                d_qconv: self.d_qconv,
                d_qfc: self.d_qfc,
                n_qemb: self.n_qemb,
                kernel: self.kernel,
                stride: self.stride,
                layers: self.layers,
            },
            training: TrainingOverrides {
                epochs: self.epochs,
                batch_size: self.batch_size,
                learning_rate: self.lr,
                embedding_gradient: self.embedding_gradient,
            },
        };
        Resolved::new(spec, flags)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(args) => commands::train(args.resolve()?),
        Command::Eval {
            checkpoint,
            mut run,
        } => {
            let ck = qdconv::checkpoint::Checkpoint::read(&checkpoint)?;
            if run.preset.is_none() && run.spec.is_none() {
                run.preset = ck.config.dataset.parse().ok();
            }
            commands::eval(run.resolve()?, ck)
        }
        Command::Ablate {
            with_classical,
            run,
        } => commands::ablate(run.resolve()?, with_classical),
        Command::CountParams(args) => {
            let explicit = args.variant.is_some();
            commands::count_params(&args.resolve()?, explicit)
        }
        Command::Gradcheck {
            batch,
            tol,
            method,
            run,
        } => commands::gradcheck(run.resolve()?, batch, tol, method),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

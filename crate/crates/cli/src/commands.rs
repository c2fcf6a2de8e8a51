use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qdconv::checkpoint::Checkpoint;
use qdconv::gradient::{
    finite_diff_grad, relative_error, EmbeddingGradient, ScalarCircuit, FD_STEP,
};
use qdconv::model::{
    count_parameters, cross_entropy, Layout, Model, ModelConfig, ModelParameters, Preset, Variant,
};
use qdconv::text::{Corpus, EncodedExample};
use qdconv::train::{
    batch_gradient, evaluate, train as train_run, Evaluation, TrainRunReport, TrainingConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::spec::Resolved;

const ABLATION: [Variant; 4] = [
    Variant::MsffQdconv,
    Variant::Qdconv,
    Variant::Qse,
    Variant::MsffQconv,
];
const CLASSICAL: [Variant; 2] = [Variant::MsffConv, Variant::MsffDconv];
const GRAD_FLOOR: f64 = 1e-7;

fn write(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Core(qdconv::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value).map_err(qdconv::Error::from)? + "\n")
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn run_dir(out: &Path, variant: Variant, seed: u64) -> PathBuf {
    out.join(variant.name()).join(format!("seed-{seed}"))
}

#[derive(Serialize)]
struct VariantSummary {
    variant: Variant,
    param_count: usize,
    conv_param_count: usize,
    seeds: Vec<u64>,
    test_accuracies: Vec<f64>,
    median_test_accuracy: f64,
    best_test_accuracy: f64,
    final_train_losses: Vec<f64>,
    median_epoch_seconds: f64,
    circuit_executions: Vec<u64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    model_config: &'a ModelConfig,
    training_config: &'a TrainingConfig,
    variants: Vec<VariantSummary>,
}

/// Trains `variant` for every seed, writing one directory per run.
fn run_variant(r: &Resolved, variant: Variant, corpus: &Corpus) -> CliResult<VariantSummary> {
    let config = r.model.clone().with_variant(variant);
    let mut reports: Vec<TrainRunReport> = Vec::new();
    for &seed in &r.seeds {
        let tc = r.training.clone().with_seed(seed);
        let outcome = train_run(&tc, &config, corpus)?;
        let report = outcome.report;
        let dir = run_dir(&r.out, variant, seed);
        write(&dir.join("report.json"), &to_json(&report)?)?;
        write(&dir.join("loss_curve.txt"), &report.loss_curve())?;
        write(
            &dir.join("checkpoint.json"),
            &to_json(&Checkpoint::from_model(&outcome.model, seed))?,
        )?;
        if let Some(reason) = &report.aborted {
            eprintln!("warning: {variant} seed {seed} stopped early: {reason}");
        }
        println!(
            "{variant} seed {seed}: test accuracy {:.4}, train loss {:.4} -> {:.4}, {:.3}s/epoch",
            report.final_test_accuracy,
            report.initial_train_loss,
            report.final_train_loss,
            report.mean_epoch_seconds()
        );
        reports.push(report);
    }
    let acc: Vec<f64> = reports.iter().map(|r| r.final_test_accuracy).collect();
    let secs: Vec<f64> = reports.iter().map(|r| r.mean_epoch_seconds()).collect();
    Ok(VariantSummary {
        variant,
        param_count: count_parameters(&config),
        conv_param_count: Layout::of(&config).conv.iter().map(|c| c.len()).sum(),
        seeds: r.seeds.clone(),
        median_test_accuracy: median(&acc),
        best_test_accuracy: acc.iter().copied().fold(f64::MIN, f64::max),
        test_accuracies: acc,
        final_train_losses: reports.iter().map(|r| r.final_train_loss).collect(),
        median_epoch_seconds: median(&secs),
        circuit_executions: reports.iter().map(|r| r.circuit_executions.total).collect(),
    })
}

fn write_summary(r: &Resolved, variants: Vec<VariantSummary>) -> CliResult<Vec<VariantSummary>> {
    let summary = Summary {
        model_config: &r.model,
        training_config: &r.training,
        variants,
    };
    write(&r.out.join("summary.json"), &to_json(&summary)?)?;
    Ok(summary.variants)
}

pub fn train(mut r: Resolved) -> CliResult<()> {
    let corpus = r.load_corpus()?;
    let s = run_variant(&r, r.model.variant, &corpus)?;
    let s = write_summary(&r, vec![s])?;
    println!(
        "{}: median test accuracy {:.4}, best {:.4} over {} seeds; wrote {}",
        s[0].variant,
        s[0].median_test_accuracy,
        s[0].best_test_accuracy,
        s[0].seeds.len(),
        r.out.display()
    );
    Ok(())
}

pub fn ablate(mut r: Resolved, with_classical: bool) -> CliResult<()> {
    let corpus = r.load_corpus()?;
    let variants: Vec<Variant> = if with_classical {
        ABLATION.iter().chain(&CLASSICAL).copied().collect()
    } else {
        ABLATION.to_vec()
    };
    let mut rows = Vec::new();
    for v in variants {
        rows.push(run_variant(&r, v, &corpus)?);
    }
    let rows = write_summary(&r, rows)?;
    let mut table = String::from("variant\tparams\tconv_params\tmedian_acc\tbest_acc\tepoch_s\n");
    for row in &rows {
        let _ = writeln!(
            table,
            "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
            row.variant,
            row.param_count,
            row.conv_param_count,
            row.median_test_accuracy,
            row.best_test_accuracy,
            row.median_epoch_seconds
        );
    }
    write(&r.out.join("ablation.tsv"), &table)?;
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    checkpoint_seed: u64,
    variant: Variant,
    train: Evaluation,
    dev: Option<Evaluation>,
    test: Evaluation,
}

pub fn eval(mut r: Resolved, ck: Checkpoint) -> CliResult<()> {
    let seed = ck.seed;
    let model = ck.into_model()?;
    let corpus = r.load_corpus()?;
    if model.config.n_vocab != corpus.vocab.len() || model.config.m != corpus.max_len {
        return Err(qdconv::Error::Dataset(format!(
            "checkpoint expects {} words and length {}, corpus has {} and {}",
            model.config.n_vocab,
            model.config.m,
            corpus.vocab.len(),
            corpus.max_len
        ))
        .into());
    }
    let report = EvalReport {
        checkpoint_seed: seed,
        variant: model.config.variant,
        train: evaluate(&model, &corpus.train)?,
        dev: if corpus.dev.is_empty() {
            None
        } else {
            Some(evaluate(&model, &corpus.dev)?)
        },
        test: evaluate(&model, &corpus.test)?,
    };
    print!("{}", to_json(&report)?);
    Ok(())
}

/// Counts reported in the original comparison tables, for the preset
/// configurations only.
fn published_count(preset: Preset, variant: Variant) -> Option<usize> {
    match (preset, variant) {
        (Preset::Mc, Variant::MsffQdconv) => Some(19),
        (Preset::Mc, Variant::MsffConv) => Some(287),
        (Preset::Mc, Variant::MsffDconv) => Some(211),
        (Preset::Rp, Variant::MsffQdconv) => Some(90),
        (Preset::Rp, Variant::MsffConv) => Some(1703),
        (Preset::Rp, Variant::MsffDconv) => Some(1403),
        _ => None,
    }
}

pub fn count_params(r: &Resolved, explicit_variant: bool) -> CliResult<()> {
    let variants = if explicit_variant {
        vec![r.model.variant]
    } else {
        Variant::ALL.to_vec()
    };
    let is_preset = r.model == ModelConfig::preset(r.preset).with_variant(r.model.variant);
    println!("variant\tparams\tconv_params");
    let mut notes = Vec::new();
    for v in variants {
        let c = r.model.clone().with_variant(v);
        let n = count_parameters(&c);
        println!(
            "{v}\t{n}\t{}",
            Layout::of(&c).conv.iter().map(|c| c.len()).sum::<usize>()
        );
        if let Some(p) = published_count(r.preset, v).filter(|_| is_preset) {
            if p != n {
                notes.push(format!(
                    "note: {v} on {} counts {n} parameters; the published table reports {p}",
                    r.preset.name()
                ));
            }
        }
    }
    for n in notes {
        println!("{n}");
    }
    Ok(())
}

/// Mean cross-entropy of a batch as a function of the flat parameters.
struct BatchLoss<'a> {
    config: &'a ModelConfig,
    batch: &'a [&'a EncodedExample],
}

impl ScalarCircuit for BatchLoss<'_> {
    fn arity(&self) -> usize {
        count_parameters(self.config)
    }

    fn evaluate(&self, angles: &[f64]) -> f64 {
        let params = ModelParameters {
            values: angles.to_vec(),
        };
        let m = Model::new(self.config.clone(), params).expect("arity matches the layout");
        let total: f64 = self
            .batch
            .iter()
            .map(|ex| cross_entropy(&m.forward(ex).expect("validated example"), ex.label))
            .sum();
        total / self.batch.len() as f64
    }
}

#[derive(Serialize)]
struct GradcheckReport {
    variant: Variant,
    method: EmbeddingGradient,
    seed: u64,
    batch: usize,
    parameters: usize,
    max_relative_error: f64,
    worst_parameter: usize,
    tolerance: f64,
    seconds: f64,
    passed: bool,
}

pub fn gradcheck(
    mut r: Resolved,
    batch: usize,
    tol: f64,
    method: EmbeddingGradient,
) -> CliResult<()> {
    if batch == 0 {
        return Err(CliError::Config("batch must be >= 1".into()));
    }
    let corpus = r.load_corpus()?;
    let seed = r.seeds[0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = Model::init(r.model.clone(), &mut rng)?;
    let examples: Vec<&EncodedExample> = corpus.train.iter().take(batch).collect();
    // a failing forward pass must surface as an error, not a panic in the oracle
    for ex in &examples {
        model.forward(ex)?;
    }
    let started = Instant::now();
    let (grad, _, _) = batch_gradient(&model, &examples, method)?;
    let loss = BatchLoss {
        config: &model.config,
        batch: &examples,
    };
    let (worst_parameter, max_relative_error) = (0..grad.len())
        .map(|i| {
            let fd = finite_diff_grad(&loss, &model.params.values, i, FD_STEP);
            (i, relative_error(grad[i], fd, GRAD_FLOOR))
        })
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let report = GradcheckReport {
        variant: model.config.variant,
        method,
        seed,
        batch: examples.len(),
        parameters: grad.len(),
        max_relative_error,
        worst_parameter,
        tolerance: tol,
        seconds: started.elapsed().as_secs_f64(),
        passed: max_relative_error < tol,
    };
    print!("{}", to_json(&report)?);
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "max relative error {max_relative_error:.3e} at parameter {worst_parameter} exceeds {tol:e}"
        )))
    }
}

//! Adam, mini-batch training, evaluation and run reports.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::EmbeddingGradient;
use crate::instrument::CircuitTally;
use crate::model::{cross_entropy, CircuitBudget, Model, ModelConfig, Preset};
use crate::text::{Corpus, EncodedExample};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub embedding_gradient: EmbeddingGradient,
}

impl TrainingConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Mc => TrainingConfig {
                epochs: 40,
                batch_size: 8,
                learning_rate: 0.05,
                seed: 0,
                embedding_gradient: EmbeddingGradient::Adjoint,
            },
            Preset::Rp => TrainingConfig {
                epochs: 100,
                batch_size: 6,
                learning_rate: 0.05,
                seed: 0,
                embedding_gradient: EmbeddingGradient::Adjoint,
            },
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// First and second moment estimates of Adam.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    /// One bias-corrected update. A non-finite gradient leaves the
    /// parameters untouched and reports divergence.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Config(format!(
                "optimizer sized for {} parameters got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::Divergence(format!(
                "gradient of parameter {i} is {} at step {}",
                grads[i],
                self.step + 1
            )));
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
}

/// Fraction of examples whose argmax prediction equals the label, plus the
/// mean cross-entropy.
pub fn evaluate(model: &Model, examples: &[EncodedExample]) -> Result<Evaluation> {
    if examples.is_empty() {
        return Ok(Evaluation {
            accuracy: 0.0,
            loss: 0.0,
        });
    }
    let mut correct = 0usize;
    let mut loss = 0.0;
    for ex in examples {
        let p = model.forward(ex)?;
        correct += usize::from(p.argmax() == ex.label);
        loss += cross_entropy(&p, ex.label);
    }
    Ok(Evaluation {
        accuracy: correct as f64 / examples.len() as f64,
        loss: loss / examples.len() as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean loss over the epoch's mini-batches, measured before each update.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Wall-clock seconds of the optimization phase (excludes evaluation).
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitCounts {
    /// Circuit runs inside gradient computations; an adjoint sweep counts
    /// once.
    pub training: u64,
    /// Forward-only runs of evaluation passes.
    pub evaluation: u64,
    pub total: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRunReport {
    pub model_config: ModelConfig,
    pub training_config: TrainingConfig,
    pub seed: u64,
    pub param_count: usize,
    pub initial_train_loss: f64,
    pub final_train_loss: f64,
    pub final_train_accuracy: f64,
    pub final_test_accuracy: f64,
    pub epochs: Vec<EpochMetrics>,
    pub circuit_executions: CircuitCounts,
    /// Set when training stopped early; the metrics cover completed epochs.
    pub aborted: Option<String>,
}

impl TrainRunReport {
    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.epochs.is_empty() {
            return 0.0;
        }
        self.epochs.iter().map(|e| e.seconds).sum::<f64>() / self.epochs.len() as f64
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Two whitespace-separated columns, `epoch train_loss`, one line per
    /// epoch; epoch 0 is the loss before training.
    pub fn loss_curve(&self) -> String {
        let mut s = String::from("# epoch train_loss\n");
        let _ = writeln!(s, "0 {:.10}", self.initial_train_loss);
        for e in &self.epochs {
            let _ = writeln!(s, "{} {:.10}", e.epoch, e.train_loss);
        }
        s
    }
}

/// A finished (or aborted) run: the report and the final model.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub report: TrainRunReport,
    pub model: Model,
}

/// Expected circuit executions of a full training run, assuming it completes.
pub fn expected_circuit_counts(
    config: &ModelConfig,
    tc: &TrainingConfig,
    corpus: &Corpus,
) -> CircuitCounts {
    let fwd = |split: &[EncodedExample]| -> u64 {
        split
            .iter()
            .map(|e| {
                CircuitBudget::for_example(config, e.n_tokens(), tc.embedding_gradient).forward
            })
            .sum()
    };
    let per_epoch: u64 = corpus
        .train
        .iter()
        .map(|e| {
            let b = CircuitBudget::for_example(config, e.n_tokens(), tc.embedding_gradient);
            b.forward + b.gradient
        })
        .sum();
    let training = per_epoch * tc.epochs as u64;
    // initial and final train passes, one test pass per epoch
    let evaluation = 2 * fwd(&corpus.train) + tc.epochs as u64 * fwd(&corpus.test);
    CircuitCounts {
        training,
        evaluation,
        total: training + evaluation,
    }
}

/// Mean gradient of a mini-batch, reduced in example order.
pub fn batch_gradient(
    model: &Model,
    batch: &[&EncodedExample],
    method: EmbeddingGradient,
) -> Result<(Vec<f64>, f64, usize)> {
    let mut grad = vec![0.0; model.param_count()];
    let mut loss = 0.0;
    let mut correct = 0;
    for ex in batch {
        let g = model.loss_and_gradient_with(ex, method)?;
        loss += g.loss;
        correct += usize::from(g.probs.argmax() == ex.label);
        for (a, b) in grad.iter_mut().zip(&g.grad) {
            *a += b;
        }
    }
    let scale = 1.0 / batch.len() as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok((grad, loss, correct))
}

/// Running metrics of one pass over the training split.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStep {
    /// Mean loss, measured before each update.
    pub mean_loss: f64,
    pub accuracy: f64,
    /// Set when a batch produced a non-finite loss or update.
    pub aborted: Option<String>,
}

/// Shuffles `order` with `rng` and runs one epoch of mini-batch Adam.
pub fn train_epoch(
    tc: &TrainingConfig,
    model: &mut Model,
    adam: &mut Adam,
    train: &[EncodedExample],
    order: &mut [usize],
    rng: &mut ChaCha8Rng,
) -> Result<EpochStep> {
    order.shuffle(rng);
    let mut loss_sum = 0.0;
    let mut correct = 0;
    let mut aborted = None;
    for chunk in order.chunks(tc.batch_size) {
        let batch: Vec<&EncodedExample> = chunk.iter().map(|&i| &train[i]).collect();
        let (grad, loss, ok) = batch_gradient(model, &batch, tc.embedding_gradient)?;
        if !loss.is_finite() {
            aborted = Some("non-finite loss".to_string());
            break;
        }
        loss_sum += loss;
        correct += ok;
        if let Err(e) = adam.step(&mut model.params.values, &grad, tc.learning_rate) {
            aborted = Some(e.to_string());
            break;
        }
    }
    let n = order.len() as f64;
    Ok(EpochStep {
        mean_loss: loss_sum / n,
        accuracy: correct as f64 / n,
        aborted,
    })
}

/// Trains a freshly initialized model. Parameters are drawn from a ChaCha8
/// stream seeded with `tc.seed`; the same stream then shuffles the training
/// split at the start of every epoch.
pub fn train(tc: &TrainingConfig, config: &ModelConfig, corpus: &Corpus) -> Result<TrainOutcome> {
    tc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let model = Model::init(config.clone(), &mut rng)?;
    train_model(tc, model, corpus, &mut rng)
}

/// Trains `model` in place using `rng` for shuffling.
pub fn train_model(
    tc: &TrainingConfig,
    mut model: Model,
    corpus: &Corpus,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome> {
    tc.validate()?;
    if corpus.train.is_empty() {
        return Err(Error::Dataset("training split is empty".into()));
    }
    let mut counts = CircuitCounts::default();
    let eval = |model: &Model, split: &[EncodedExample], counts: &mut CircuitCounts| {
        let tally = CircuitTally::start();
        let r = evaluate(model, split);
        counts.evaluation += tally.count();
        r
    };

    let initial = eval(&model, &corpus.train, &mut counts)?;
    let mut adam = Adam::new(model.param_count());
    let mut order: Vec<usize> = (0..corpus.train.len()).collect();
    let mut epochs = Vec::with_capacity(tc.epochs);
    let mut aborted = None;

    for epoch in 1..=tc.epochs {
        let started = Instant::now();
        let tally = CircuitTally::start();
        let step = train_epoch(tc, &mut model, &mut adam, &corpus.train, &mut order, rng);
        counts.training += tally.count();
        let step = step?;
        if let Some(reason) = step.aborted {
            aborted = Some(format!("epoch {epoch}: {reason}"));
            break;
        }
        let seconds = started.elapsed().as_secs_f64();
        let test = eval(&model, &corpus.test, &mut counts)?;
        epochs.push(EpochMetrics {
            epoch,
            train_loss: step.mean_loss,
            train_accuracy: step.accuracy,
            test_accuracy: test.accuracy,
            seconds,
        });
    }

    let final_train = eval(&model, &corpus.train, &mut counts)?;
    let final_test_accuracy = match epochs.last() {
        Some(e) if aborted.is_none() => e.test_accuracy,
        _ => eval(&model, &corpus.test, &mut counts)?.accuracy,
    };
    counts.total = counts.training + counts.evaluation;
    let report = TrainRunReport {
        model_config: model.config.clone(),
        training_config: tc.clone(),
        seed: tc.seed,
        param_count: model.param_count(),
        initial_train_loss: initial.loss,
        final_train_loss: final_train.loss,
        final_train_accuracy: final_train.accuracy,
        final_test_accuracy,
        epochs,
        circuit_executions: counts,
        aborted,
    };
    Ok(TrainOutcome { report, model })
}

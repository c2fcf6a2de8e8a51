//! Full networks: the two-branch fused model, its ablations and the
//! classical counterparts.
//!
//! Every variant shares one topology. The word branch embeds each token,
//! runs `L` convolution layers over the `[E][m]` channel sequence and takes a
//! masked mean over positions. The sentence branch embeds the TF-IDF vector.
//! The two `E`-vectors are summed and passed through the head, whose first
//! `c` outputs are the class logits fed to a softmax.

mod classical;
mod config;
mod quantum;

pub use config::{ConvKind, ModelConfig, Preset, Variant};

use std::f64::consts::TAU;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::EmbeddingGradient;
use crate::layers::{layer_param_count, LayerDescription};
use crate::text::EncodedExample;

/// Which branch outputs reach the fusion sum. A disabled branch contributes
/// the zero vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Branches {
    pub word: bool,
    pub sentence: bool,
}

impl Branches {
    pub fn of(variant: Variant) -> Self {
        Branches {
            word: variant.has_word_branch(),
            sentence: variant.has_sentence_branch(),
        }
    }
}

/// Offsets of each layer's parameters in the flat parameter vector. Absent
/// layers have empty ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub word: Range<usize>,
    pub sentence: Range<usize>,
    pub conv: Vec<Range<usize>>,
    pub head: Range<usize>,
    pub total: usize,
}

impl Layout {
    pub fn of(config: &ModelConfig) -> Self {
        let v = config.variant;
        let (e, n, k, c) = (config.e, config.n_vocab, config.kernel, config.n_classes);
        let (word_len, sentence_len, conv_len, head_len) = if v.is_quantum() {
            let conv_len = match v.conv_kind() {
                ConvKind::Depthwise => config.d_qconv * k,
                ConvKind::Standard => e * e * config.d_qconv * k,
            };
            (
                config.d_qemb * e,
                config.d_qemb * e,
                conv_len,
                config.d_qfc * e,
            )
        } else {
            let conv_len = match v.conv_kind() {
                ConvKind::Depthwise => k + 1,
                ConvKind::Standard => e * e * k + e,
            };
            (n * e, n * e + e, conv_len, c * e + c)
        };
        let mut offset = 0;
        let mut take = |len: usize| {
            let r = offset..offset + len;
            offset += len;
            r
        };
        let word = take(if v.has_word_branch() { word_len } else { 0 });
        let sentence = take(if v.has_sentence_branch() {
            sentence_len
        } else {
            0
        });
        let conv = (0..config.layers)
            .map(|_| take(if v.has_word_branch() { conv_len } else { 0 }))
            .collect();
        let head = take(head_len);
        Layout {
            word,
            sentence,
            conv,
            head,
            total: offset,
        }
    }
}

/// Per-layer description of the quantum layers of a config.
fn quantum_layers(config: &ModelConfig) -> Vec<LayerDescription> {
    let v = config.variant;
    let mut layers = Vec::new();
    let embed = LayerDescription::Entangler {
        n_qubits: config.n_qemb,
        depth: config.d_qemb,
    };
    if v.has_word_branch() {
        layers.push(embed);
        layers.push(match v.conv_kind() {
            ConvKind::Depthwise => LayerDescription::DepthwiseConv {
                kernel_size: config.kernel,
                depth: config.d_qconv,
                n_layers: config.layers,
            },
            ConvKind::Standard => LayerDescription::StandardConv {
                c_in: config.e,
                c_out: config.e,
                kernel_size: config.kernel,
                depth: config.d_qconv,
                n_layers: config.layers,
            },
        });
    }
    if v.has_sentence_branch() {
        layers.push(embed);
    }
    layers.push(LayerDescription::Entangler {
        n_qubits: config.n_qfc,
        depth: config.d_qfc,
    });
    layers
}

/// Trainable parameter count of a configuration.
pub fn count_parameters(config: &ModelConfig) -> usize {
    if config.variant.is_quantum() {
        quantum_layers(config)
            .into_iter()
            .map(layer_param_count)
            .sum()
    } else {
        Layout::of(config).total
    }
}

/// Flat parameter vector of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub values: Vec<f64>,
}

impl ModelParameters {
    /// Quantum angles uniform in `[0, 2π)`. Classical embeddings uniform in
    /// `[-1, 1]`, other classical weights and biases uniform in
    /// `±1/√fan_in`.
    pub fn init<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Self {
        let layout = Layout::of(config);
        let mut values = vec![0.0; layout.total];
        if config.variant.is_quantum() {
            values.iter_mut().for_each(|v| *v = rng.gen_range(0.0..TAU));
        } else {
            let mut fill = |r: Range<usize>, bound: f64| {
                for v in &mut values[r] {
                    *v = rng.gen_range(-bound..bound);
                }
            };
            let conv_fan_in = match config.variant.conv_kind() {
                ConvKind::Depthwise => config.kernel,
                ConvKind::Standard => config.e * config.kernel,
            };
            fill(layout.word.clone(), 1.0);
            fill(
                layout.sentence.clone(),
                1.0 / (config.n_vocab as f64).sqrt(),
            );
            for r in &layout.conv {
                fill(r.clone(), 1.0 / (conv_fan_in as f64).sqrt());
            }
            fill(layout.head.clone(), 1.0 / (config.e as f64).sqrt());
        }
        ModelParameters { values }
    }
}

/// Softmax output over the classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassProbabilities {
    pub probs: Vec<f64>,
}

impl ClassProbabilities {
    pub fn from_logits(logits: &[f64]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = exp.iter().sum();
        ClassProbabilities {
            probs: exp.into_iter().map(|x| x / sum).collect(),
        }
    }

    /// Most probable class; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// A configuration together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParameters,
}

/// Loss, prediction and gradient of one example.
#[derive(Clone, Debug)]
pub struct ExampleGradient {
    pub loss: f64,
    pub probs: ClassProbabilities,
    pub grad: Vec<f64>,
}

impl Model {
    pub fn new(config: ModelConfig, params: ModelParameters) -> Result<Self> {
        config.validate()?;
        let expected = Layout::of(&config).total;
        if params.values.len() != expected {
            return Err(Error::Config(format!(
                "{} model needs {expected} parameters, got {}",
                config.variant,
                params.values.len()
            )));
        }
        if let Some(bad) = params.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NumericInput(format!("model parameter {bad}")));
        }
        Ok(Model { config, params })
    }

    pub fn init<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let params = ModelParameters::init(&config, rng);
        Model::new(config, params)
    }

    pub fn layout(&self) -> Layout {
        Layout::of(&self.config)
    }

    pub fn param_count(&self) -> usize {
        self.params.values.len()
    }

    fn check_example(&self, ex: &EncodedExample) -> Result<()> {
        if ex.indices.len() != self.config.m || ex.mask.len() != self.config.m {
            return Err(Error::Config(format!(
                "example of length {} given to a model with m = {}",
                ex.indices.len(),
                self.config.m
            )));
        }
        if ex.tfidf.len() != self.config.n_vocab {
            return Err(Error::Config(format!(
                "TF-IDF vector of length {} given to a model with N = {}",
                ex.tfidf.len(),
                self.config.n_vocab
            )));
        }
        if ex.label >= self.config.n_classes {
            return Err(Error::Config(format!("label {} out of range", ex.label)));
        }
        if let Some(&bad) = ex.indices.iter().find(|&&i| i >= self.config.n_vocab) {
            return Err(Error::Lookup(format!(
                "token index {bad} outside the vocabulary"
            )));
        }
        Ok(())
    }

    /// Class probabilities with the variant's own branches.
    pub fn forward(&self, ex: &EncodedExample) -> Result<ClassProbabilities> {
        self.forward_with_branches(ex, Branches::of(self.config.variant))
    }

    /// Class probabilities with an explicit choice of which branch outputs are
    /// fused. A branch whose parameters are absent from the variant must be
    /// disabled.
    pub fn forward_with_branches(
        &self,
        ex: &EncodedExample,
        branches: Branches,
    ) -> Result<ClassProbabilities> {
        self.check_example(ex)?;
        let own = Branches::of(self.config.variant);
        if (branches.word && !own.word) || (branches.sentence && !own.sentence) {
            return Err(Error::Config(format!(
                "{} has no parameters for the requested branch",
                self.config.variant
            )));
        }
        if self.config.variant.is_quantum() {
            quantum::forward(self, ex, branches)
        } else {
            classical::forward(self, ex, branches)
        }
    }

    /// Softmax cross-entropy loss and its gradient with respect to every
    /// parameter.
    pub fn loss_and_gradient(&self, ex: &EncodedExample) -> Result<ExampleGradient> {
        self.loss_and_gradient_with(ex, EmbeddingGradient::default())
    }

    /// As [`Model::loss_and_gradient`] with an explicit choice of how the
    /// embedding circuits are differentiated.
    pub fn loss_and_gradient_with(
        &self,
        ex: &EncodedExample,
        method: EmbeddingGradient,
    ) -> Result<ExampleGradient> {
        self.check_example(ex)?;
        if self.config.variant.is_quantum() {
            quantum::loss_and_gradient(self, ex, method)
        } else {
            classical::loss_and_gradient(self, ex)
        }
    }
}

/// `-ln(p[label] + 1e-12)`.
pub fn cross_entropy(probs: &ClassProbabilities, label: usize) -> f64 {
    -(probs.probs[label] + 1e-12).ln()
}

/// Gradient of the cross-entropy with respect to the logits, `p - onehot`.
pub(crate) fn logit_gradient(probs: &ClassProbabilities, label: usize) -> Vec<f64> {
    probs
        .probs
        .iter()
        .enumerate()
        .map(|(i, &p)| if i == label { p - 1.0 } else { p })
        .collect()
}

/// Convolution window inputs as source positions, skipping padded and masked
/// positions (both are constant zeros).
pub(crate) fn window_sources(
    spec: &crate::layers::ConvSpec,
    mask: &[bool],
    t: usize,
) -> Vec<Option<usize>> {
    spec.window(mask.len(), t)
        .map(|p| p.filter(|&p| mask[p]))
        .collect()
}

/// Closed-form circuit-execution counts for one example of a quantum model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CircuitBudget {
    pub forward: u64,
    pub gradient: u64,
}

impl CircuitBudget {
    /// `n_tokens` is the number of unmasked positions of the example.
    pub fn for_example(config: &ModelConfig, n_tokens: usize, method: EmbeddingGradient) -> Self {
        let v = config.variant;
        if !v.is_quantum() {
            return CircuitBudget {
                forward: 0,
                gradient: 0,
            };
        }
        let (e, k) = (config.e as u64, config.kernel as u64);
        let t = n_tokens as u64;
        let embed_shifts = match method {
            EmbeddingGradient::Adjoint => 1,
            EmbeddingGradient::ParameterShift => 2 * config.d_qemb as u64 * e,
        };
        let kernel_shifts = 2 * (k + config.d_qconv as u64 * k);
        let mut forward = 1;
        let mut gradient = 2 * (e + config.d_qfc as u64 * e);
        if v.has_sentence_branch() {
            forward += 1;
            gradient += embed_shifts;
        }
        if v.has_word_branch() {
            forward += t;
            gradient += t * embed_shifts;
            let kernels_per_window = match v.conv_kind() {
                ConvKind::Depthwise => e,
                ConvKind::Standard => e * e,
            };
            let spec = config.conv_spec();
            let mut len = config.m;
            for _ in 0..config.layers {
                len = spec.output_len(len);
                let runs = kernels_per_window * len as u64;
                forward += runs;
                gradient += runs * kernel_shifts;
            }
        }
        CircuitBudget { forward, gradient }
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::ConvSpec;
use crate::statevector::{qubits_for_len, MAX_QUBITS};

/// Which network is assembled from the shared building blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Both branches, quantum depthwise convolution.
    MsffQdconv,
    /// Word branch only.
    Qdconv,
    /// Sentence branch only.
    Qse,
    /// Both branches, standard quantum convolution.
    MsffQconv,
    /// Classical counterpart with standard convolution.
    MsffConv,
    /// Classical counterpart with channel-shared depthwise convolution.
    MsffDconv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvKind {
    Depthwise,
    Standard,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::MsffQdconv,
        Variant::Qdconv,
        Variant::Qse,
        Variant::MsffQconv,
        Variant::MsffConv,
        Variant::MsffDconv,
    ];

    pub fn is_quantum(self) -> bool {
        !matches!(self, Variant::MsffConv | Variant::MsffDconv)
    }

    pub fn has_word_branch(self) -> bool {
        self != Variant::Qse
    }

    pub fn has_sentence_branch(self) -> bool {
        self != Variant::Qdconv
    }

    pub fn conv_kind(self) -> ConvKind {
        match self {
            Variant::MsffQconv | Variant::MsffConv => ConvKind::Standard,
            _ => ConvKind::Depthwise,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::MsffQdconv => "msff-qdconv",
            Variant::Qdconv => "qdconv",
            Variant::Qse => "qse",
            Variant::MsffQconv => "msff-qconv",
            Variant::MsffConv => "msff-conv",
            Variant::MsffDconv => "msff-dconv",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model variant {s:?}")))
    }
}

/// Built-in hyperparameter presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Mc,
    Rp,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Mc => "mc",
            Preset::Rp => "rp",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mc" => Ok(Preset::Mc),
            "rp" => Ok(Preset::Rp),
            _ => Err(Error::Config(format!(
                "unknown preset {s:?} (expected mc or rp)"
            ))),
        }
    }
}

/// Every architectural hyperparameter of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dataset: String,
    /// Embedding dimension, `⌈log₂N⌉`.
    pub e: usize,
    /// Fixed sequence length.
    pub m: usize,
    /// Vocabulary size.
    pub n_vocab: usize,
    pub n_classes: usize,
    pub d_qemb: usize,
    pub d_qconv: usize,
    pub d_qfc: usize,
    pub n_qemb: usize,
    pub n_qconv: usize,
    pub n_qfc: usize,
    /// Kernel size K.
    pub kernel: usize,
    /// Stride S.
    pub stride: usize,
    /// Number of stacked convolution layers L.
    pub layers: usize,
    pub variant: Variant,
}

impl ModelConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Mc => ModelConfig {
                dataset: "mc".into(),
                e: 5,
                m: 4,
                n_vocab: 17,
                n_classes: 2,
                d_qemb: 1,
                d_qconv: 1,
                d_qfc: 1,
                n_qemb: 5,
                n_qconv: 3,
                n_qfc: 5,
                kernel: 3,
                stride: 1,
                layers: 1,
                variant: Variant::MsffQdconv,
            },
            Preset::Rp => ModelConfig {
                dataset: "rp".into(),
                e: 7,
                m: 4,
                n_vocab: 115,
                n_classes: 2,
                d_qemb: 5,
                d_qconv: 2,
                d_qfc: 1,
                n_qemb: 7,
                n_qconv: 3,
                n_qfc: 7,
                kernel: 3,
                stride: 1,
                layers: 2,
                variant: Variant::MsffQdconv,
            },
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    /// Resizes the vocabulary-dependent fields for a corpus, keeping the
    /// qubit counts consistent.
    pub fn fit_corpus(mut self, n_vocab: usize, m: usize) -> Self {
        self.n_vocab = n_vocab;
        self.m = m;
        self.e = qubits_for_len(n_vocab);
        self.n_qemb = self.e;
        self.n_qfc = self.e;
        self
    }

    pub fn conv_spec(&self) -> ConvSpec {
        ConvSpec {
            kernel_size: self.kernel,
            stride: self.stride,
            n_layers: self.layers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_vocab < 2 {
            return fail(format!("vocabulary size {} is too small", self.n_vocab));
        }
        let e = qubits_for_len(self.n_vocab);
        if self.e != e || self.n_qemb != e {
            return fail(format!(
                "vocabulary of {} needs E = n_qemb = {e}, got E={} n_qemb={}",
                self.n_vocab, self.e, self.n_qemb
            ));
        }
        if self.n_qfc != self.e {
            return fail(format!("n_qfc must equal E={}, got {}", self.e, self.n_qfc));
        }
        if self.n_qconv != self.kernel {
            return fail(format!(
                "n_qconv must equal K={}, got {}",
                self.kernel, self.n_qconv
            ));
        }
        if self.e > MAX_QUBITS || self.kernel > MAX_QUBITS {
            return fail(format!("circuits are limited to {MAX_QUBITS} qubits"));
        }
        if self.n_classes < 2 || self.n_classes > self.n_qfc {
            return fail(format!(
                "class count {} must lie in 2..={} (n_qfc)",
                self.n_classes, self.n_qfc
            ));
        }
        if self.m == 0 {
            return fail("sequence length must be >= 1".into());
        }
        if self.d_qemb == 0 || self.d_qconv == 0 || self.d_qfc == 0 {
            return fail("ansatz depths must be >= 1".into());
        }
        self.conv_spec().validate()
    }
}

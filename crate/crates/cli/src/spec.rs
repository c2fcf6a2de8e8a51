//! Run specification files and their resolution against presets and flags.

use std::path::{Path, PathBuf};

use qdconv::datasets::{default_data_root, load_corpus, published_format, DatasetPaths};
use qdconv::gradient::EmbeddingGradient;
use qdconv::model::{ModelConfig, Preset, Variant};
use qdconv::text::{Corpus, IdfVariant, LoadOptions, Separator};
use qdconv::train::TrainingConfig;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// A TOML run specification. Every field is optional and falls back to the
/// selected preset.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunSpecFile {
    pub preset: Option<Preset>,
    pub variant: Option<Variant>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub model: ModelOverrides,
    #[serde(default)]
    pub training: TrainingOverrides,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DataSpec {
    /// Directory holding `<preset>_{train,dev,test}_data.txt`.
    pub root: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub separator: Option<Separator>,
    pub drop_punctuation: Option<bool>,
    pub idf: Option<IdfVariant>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ModelOverrides {
    pub d_qemb: Option<usize>,
    pub d_qconv: Option<usize>,
    pub d_qfc: Option<usize>,
    pub n_qemb: Option<usize>,
    pub kernel: Option<usize>,
    pub stride: Option<usize>,
    pub layers: Option<usize>,
}

impl ModelOverrides {
    /// Fields set in `self` win over `base`.
    pub fn or(self, base: ModelOverrides) -> ModelOverrides {
        ModelOverrides {
            d_qemb: self.d_qemb.or(base.d_qemb),
            d_qconv: self.d_qconv.or(base.d_qconv),
            d_qfc: self.d_qfc.or(base.d_qfc),
            n_qemb: self.n_qemb.or(base.n_qemb),
            kernel: self.kernel.or(base.kernel),
            stride: self.stride.or(base.stride),
            layers: self.layers.or(base.layers),
        }
    }

    fn apply(&self, c: &mut ModelConfig) {
        let set = |dst: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut c.d_qemb, self.d_qemb);
        set(&mut c.d_qconv, self.d_qconv);
        set(&mut c.d_qfc, self.d_qfc);
        set(&mut c.n_qemb, self.n_qemb);
        set(&mut c.kernel, self.kernel);
        // one kernel qubit per window position
        set(&mut c.n_qconv, self.kernel);
        set(&mut c.stride, self.stride);
        set(&mut c.layers, self.layers);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainingOverrides {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub embedding_gradient: Option<EmbeddingGradient>,
}

impl TrainingOverrides {
    pub fn or(self, base: TrainingOverrides) -> TrainingOverrides {
        TrainingOverrides {
            epochs: self.epochs.or(base.epochs),
            batch_size: self.batch_size.or(base.batch_size),
            learning_rate: self.learning_rate.or(base.learning_rate),
            embedding_gradient: self.embedding_gradient.or(base.embedding_gradient),
        }
    }

    fn apply(&self, t: &mut TrainingConfig) {
        if let Some(v) = self.epochs {
            t.epochs = v;
        }
        if let Some(v) = self.batch_size {
            t.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            t.learning_rate = v;
        }
        if let Some(v) = self.embedding_gradient {
            t.embedding_gradient = v;
        }
    }
}

impl RunSpecFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read spec {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Command-line values; `None` defers to the spec file.
#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub preset: Option<Preset>,
    pub variant: Option<Variant>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub data_root: Option<PathBuf>,
    pub model: ModelOverrides,
    pub training: TrainingOverrides,
}

/// A fully resolved run: configs, data locations, seeds and output root.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub preset: Preset,
    pub model: ModelConfig,
    pub training: TrainingConfig,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub paths: DatasetPaths,
    pub load: LoadOptions,
    pub idf: IdfVariant,
    overrides: ModelOverrides,
}

impl Resolved {
    /// Precedence: flags, then the spec file, then the preset.
    pub fn new(spec: RunSpecFile, flags: Flags) -> CliResult<Self> {
        let Flags {
            preset,
            variant,
            seeds,
            out,
            data_root,
            model,
            training,
        } = flags;
        let preset = preset.or(spec.preset).unwrap_or(Preset::Mc);
        let overrides = model.or(spec.model);
        let mut config = ModelConfig::preset(preset);
        if let Some(v) = variant.or(spec.variant) {
            config.variant = v;
        }
        let mut tc = TrainingConfig::preset(preset);
        training.or(spec.training).apply(&mut tc);
        tc.validate()?;

        let root = data_root
            .or(spec.data.root)
            .unwrap_or_else(default_data_root);
        let mut paths = DatasetPaths::for_preset(preset, &root);
        let preset_data =
            spec.data.train.is_none() && spec.data.dev.is_none() && spec.data.test.is_none();
        if let Some(p) = spec.data.train {
            paths.train = p;
        }
        if let Some(p) = spec.data.test {
            paths.test = p;
        }
        if spec.data.dev.is_some() {
            paths.dev = spec.data.dev;
        } else if !preset_data {
            paths.dev = None;
        }
        let mut load = published_format();
        if let Some(s) = spec.data.separator {
            load.separator = s;
        }
        if let Some(d) = spec.data.drop_punctuation {
            load.drop_punctuation = d;
        }

        let seeds = seeds.or(spec.seeds).unwrap_or_else(|| vec![0]);
        if seeds.is_empty() {
            return Err(CliError::Config("at least one seed is required".into()));
        }
        let mut r = Resolved {
            preset,
            model: config,
            training: tc,
            seeds,
            out: out.or(spec.out).unwrap_or_else(|| PathBuf::from("runs")),
            paths,
            load,
            idf: spec.data.idf.unwrap_or_default(),
            overrides,
        };
        r.overrides.apply(&mut r.model);
        r.model.validate()?;
        Ok(r)
    }

    /// Loads the corpus and refits vocabulary-dependent sizes if it differs
    /// from the preset's.
    pub fn load_corpus(&mut self) -> CliResult<Corpus> {
        let corpus = load_corpus(&self.paths, &self.load, self.idf)?;
        if corpus.vocab.len() != self.model.n_vocab || corpus.max_len != self.model.m {
            let variant = self.model.variant;
            let mut c =
                ModelConfig::preset(self.preset).fit_corpus(corpus.vocab.len(), corpus.max_len);
            c.variant = variant;
            c.dataset = self.paths.train.display().to_string();
            self.overrides.apply(&mut c);
            c.validate()?;
            self.model = c;
        }
        Ok(corpus)
    }
}

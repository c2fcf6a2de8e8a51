//! WebAssembly bindings: a single-circuit explorer and an in-browser MC
//! trainer. The bundled MC splits are compiled in.

use std::path::Path;

use qdconv::datasets::published_format;
use qdconv::layers::{AngleVqc, Readout};
use qdconv::model::{Model, ModelConfig, Preset, Variant};
use qdconv::text::{
    pad_and_index, parse_dataset, tfidf_vector, tokenize, Corpus, EncodedExample, IdfVariant,
    LabeledExample,
};
use qdconv::train::{evaluate, train_epoch, Adam, TrainingConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

const MC_TRAIN: &str = include_str!("../../../data/mc_train_data.txt");
const MC_DEV: &str = include_str!("../../../data/mc_dev_data.txt");
const MC_TEST: &str = include_str!("../../../data/mc_test_data.txt");

/// Class names of the MC labels.
pub const MC_CLASSES: [&str; 2] = ["IT", "food"];

fn js(e: qdconv::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Per-qubit `⟨Z⟩` after angle-encoding `inputs` and applying `depth`
/// BasicEntangler layers with `angles` (layer-major, one per qubit).
#[wasm_bindgen]
pub fn ansatz_expectations(
    inputs: &[f64],
    angles: &[f64],
    depth: usize,
) -> Result<Vec<f64>, JsError> {
    let n = inputs.len();
    if n == 0 || angles.len() != n * depth {
        return Err(JsError::new(&format!(
            "{n} qubits at depth {depth} need {} angles, got {}",
            n * depth,
            angles.len()
        )));
    }
    let circuit = AngleVqc {
        n_qubits: n,
        depth,
        readout: Readout::PerQubit,
    };
    let mut all = inputs.to_vec();
    all.extend_from_slice(angles);
    let mut out = vec![0.0; n];
    circuit.run(&all, &mut out).map_err(js)?;
    Ok(out)
}

pub fn mc_corpus() -> qdconv::Result<Corpus> {
    let opts = published_format();
    let parse = |text: &str, name: &str| parse_dataset(text, Path::new(name), &opts);
    Corpus::build(
        &parse(MC_TRAIN, "mc_train_data.txt")?,
        &parse(MC_DEV, "mc_dev_data.txt")?,
        &parse(MC_TEST, "mc_test_data.txt")?,
        IdfVariant::default(),
    )
}

/// Epoch-stepped training of one MC variant with the MC preset.
#[wasm_bindgen]
pub struct McTrainer {
    corpus: Corpus,
    model: Model,
    adam: Adam,
    training: TrainingConfig,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    losses: Vec<f64>,
}

#[wasm_bindgen]
impl McTrainer {
    #[wasm_bindgen(constructor)]
    pub fn new(variant: &str, seed: u32) -> Result<McTrainer, JsError> {
        let variant: Variant = variant.parse().map_err(js)?;
        let corpus = mc_corpus().map_err(js)?;
        let training = TrainingConfig::preset(Preset::Mc).with_seed(seed.into());
        let mut rng = ChaCha8Rng::seed_from_u64(training.seed);
        let model = Model::init(
            ModelConfig::preset(Preset::Mc).with_variant(variant),
            &mut rng,
        )
        .map_err(js)?;
        let initial = evaluate(&model, &corpus.train).map_err(js)?;
        Ok(McTrainer {
            order: (0..corpus.train.len()).collect(),
            adam: Adam::new(model.param_count()),
            corpus,
            model,
            training,
            rng,
            losses: vec![initial.loss],
        })
    }

    /// Runs one epoch and returns its mean training loss.
    pub fn step(&mut self) -> Result<f64, JsError> {
        let step = train_epoch(
            &self.training,
            &mut self.model,
            &mut self.adam,
            &self.corpus.train,
            &mut self.order,
            &mut self.rng,
        )
        .map_err(js)?;
        if let Some(reason) = step.aborted {
            return Err(JsError::new(&reason));
        }
        self.losses.push(step.mean_loss);
        Ok(step.mean_loss)
    }

    pub fn epoch(&self) -> usize {
        self.losses.len() - 1
    }

    /// Epoch 0 holds the loss before training.
    pub fn loss_curve(&self) -> Vec<f64> {
        self.losses.clone()
    }

    pub fn param_count(&self) -> usize {
        self.model.param_count()
    }

    pub fn test_accuracy(&self) -> Result<f64, JsError> {
        Ok(evaluate(&self.model, &self.corpus.test)
            .map_err(js)?
            .accuracy)
    }

    pub fn vocabulary(&self) -> Vec<String> {
        self.corpus.vocab.tokens().to_vec()
    }

    /// Class probabilities `[IT, food]` of a sentence over known words.
    pub fn classify(&self, sentence: &str) -> Result<Vec<f64>, JsError> {
        let ex = self.encode(sentence).map_err(js)?;
        Ok(self.model.forward(&ex).map_err(js)?.probs)
    }
}

impl McTrainer {
    fn encode(&self, sentence: &str) -> qdconv::Result<EncodedExample> {
        let example = LabeledExample {
            label: 0,
            tokens: tokenize(sentence, true),
        };
        let (indices, mask) = pad_and_index(&example, &self.corpus.vocab, self.model.config.m)?;
        let tfidf = tfidf_vector(&example, &self.corpus.vocab, &self.corpus.stats)?;
        Ok(EncodedExample {
            label: 0,
            indices,
            mask,
            tfidf,
        })
    }
}

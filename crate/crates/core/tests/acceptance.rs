//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! stderr. Tests hold a global lock so wall-clock measurements never overlap.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use qdconv::datasets::preset_corpus;
use qdconv::gradient::{
    finite_diff_grad, relative_error, EmbeddingGradient, ScalarCircuit, FD_STEP,
};
use qdconv::instrument::{with_norm_audit, CircuitTally};
use qdconv::layers::{
    one_hot, quantum_depthwise_conv1d, quantum_standard_conv1d, AnsatzParameters, ChannelSequence,
    KernelGrid,
};
use qdconv::model::{
    count_parameters, cross_entropy, Model, ModelConfig, ModelParameters, Preset, Variant,
};
use qdconv::statevector::amplitude_encode;
use qdconv::text::{Corpus, EncodedExample};
use qdconv::train::{batch_gradient, train, TrainRunReport, TrainingConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 5;
const MC_TEST: f64 = 30.0;
const RP_TEST: f64 = 31.0;
const PUBLISHED_PARAMS_MC: usize = 19;
const PUBLISHED_PARAMS_RP: usize = 90;
const PARAM_SLACK: usize = 2;
const MIN_SPEEDUP: f64 = 3.0;
const GRAD_TOL: f64 = 1e-4;
const GRAD_FLOOR: f64 = 1e-7;
const GRAD_SECONDS: f64 = 120.0;
const BASIS_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-10;
const PARAM_SHARE: f64 = 0.15;
const TIMING_EPOCHS: usize = 5;

static LOCK: Mutex<()> = Mutex::new(());
type RunCache = HashMap<(Preset, Variant), Vec<TrainRunReport>>;

static RUNS: Mutex<Option<RunCache>> = Mutex::new(None);

fn serial() -> MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "[acceptance] {verdict} {id}. {name}: {detail}"
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn corpus(preset: Preset) -> Corpus {
    preset_corpus(preset).unwrap()
}

/// Full-protocol runs over seeds `0..SEEDS`, trained once per process.
fn runs(preset: Preset, variant: Variant) -> Vec<TrainRunReport> {
    let mut cache = RUNS.lock().unwrap_or_else(|e| e.into_inner());
    let cache = cache.get_or_insert_with(HashMap::new);
    cache
        .entry((preset, variant))
        .or_insert_with(|| {
            let corpus = corpus(preset);
            let config = ModelConfig::preset(preset).with_variant(variant);
            (0..SEEDS)
                .map(|seed| {
                    let tc = TrainingConfig::preset(preset).with_seed(seed);
                    train(&tc, &config, &corpus).unwrap().report
                })
                .collect()
        })
        .clone()
}

fn accuracies(preset: Preset, variant: Variant) -> Vec<f64> {
    let mut a: Vec<f64> = runs(preset, variant)
        .iter()
        .map(|r| r.final_test_accuracy)
        .collect();
    a.sort_by(f64::total_cmp);
    a
}

fn median(sorted: &[f64]) -> f64 {
    sorted[sorted.len() / 2]
}

fn best(sorted: &[f64]) -> f64 {
    sorted[sorted.len() - 1]
}

fn correct(acc: f64, n: f64) -> String {
    format!("{}/{}", (acc * n).round(), n)
}

fn list(sorted: &[f64], n: f64) -> String {
    sorted
        .iter()
        .map(|a| correct(*a, n))
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn criterion_1_mc_accuracy() {
    let _g = serial();
    let acc = accuracies(Preset::Mc, Variant::MsffQdconv);
    let pass = best(&acc) >= 30.0 / MC_TEST && median(&acc) >= 29.0 / MC_TEST;
    report(
        1,
        "MC accuracy (best 30/30, median >= 29/30)",
        pass,
        format!("seeds: {}", list(&acc, MC_TEST)),
    );
}

#[test]
fn criterion_2_rp_accuracy() {
    let _g = serial();
    let acc = accuracies(Preset::Rp, Variant::MsffQdconv);
    let pass = best(&acc) >= 29.0 / RP_TEST && median(&acc) >= 25.0 / RP_TEST;
    let reference = best(&acc) >= 27.0 / RP_TEST;
    report(
        2,
        "RP accuracy (best >= 29/31, median >= 25/31)",
        pass,
        format!(
            "seeds: {}; best {} the 27/31 reference",
            list(&acc, RP_TEST),
            if reference { "reaches" } else { "misses" }
        ),
    );
}

#[test]
fn criterion_3_parameter_counts() {
    let _g = serial();
    let mc = count_parameters(&ModelConfig::preset(Preset::Mc));
    let rp = count_parameters(&ModelConfig::preset(Preset::Rp));
    let pass = mc.abs_diff(PUBLISHED_PARAMS_MC) <= PARAM_SLACK
        && rp.abs_diff(PUBLISHED_PARAMS_RP) <= PARAM_SLACK;
    report(
        3,
        "quantum parameter counts within 2 of 19 / 90",
        pass,
        format!(
            "MC {mc}, RP {rp}; the published counts are one higher each, consistent with one extra \
             parameter (such as a readout bias) not present here"
        ),
    );
}

fn windowed_counts() -> (u64, u64) {
    let m = 4;
    let x = ChannelSequence::new(5, m, vec![0.3; 5 * m], vec![true; m]).unwrap();
    let config = ModelConfig::preset(Preset::Mc);
    let spec = config.conv_spec();
    let kernel = AnsatzParameters::new(3, 1, vec![0.1, 0.2, 0.3]).unwrap();
    let tally = CircuitTally::start();
    quantum_depthwise_conv1d(&x, &kernel, &spec).unwrap();
    let depthwise = tally.count() / m as u64;
    let grid = KernelGrid {
        c_out: 5,
        c_in: 5,
        kernels: vec![kernel; 25],
    };
    let tally = CircuitTally::start();
    quantum_standard_conv1d(&x, &grid, &spec).unwrap();
    (depthwise, tally.count() / m as u64)
}

fn median_epoch_seconds(preset: Preset, variant: Variant) -> f64 {
    let corpus = corpus(preset);
    let config = ModelConfig::preset(preset).with_variant(variant);
    let mut tc = TrainingConfig::preset(preset);
    tc.epochs = TIMING_EPOCHS;
    let r = train(&tc, &config, &corpus).unwrap().report;
    let mut s: Vec<f64> = r.epochs.iter().map(|e| e.seconds).collect();
    s.sort_by(f64::total_cmp);
    median(&s)
}

#[test]
fn criterion_4_efficiency() {
    let _g = serial();
    let (depthwise, standard) = windowed_counts();
    let mut pass = depthwise == 5 && standard == 25;
    let mut detail = format!("circuits per window: standard {standard}, depthwise {depthwise}");
    for preset in [Preset::Mc, Preset::Rp] {
        let qd = median_epoch_seconds(preset, Variant::MsffQdconv);
        let qc = median_epoch_seconds(preset, Variant::MsffQconv);
        let ratio = qc / qd;
        pass &= ratio > MIN_SPEEDUP;
        detail += &format!("; {preset:?} epoch {qc:.4}s vs {qd:.4}s = {ratio:.1}x");
    }
    report(
        4,
        "efficiency (25 vs 5 circuits, epoch ratio > 3x)",
        pass,
        detail,
    );
}

#[test]
fn criterion_5_ablation_ordering() {
    let _g = serial();
    let mut pass = true;
    let mut detail = Vec::new();
    for (preset, n) in [(Preset::Mc, MC_TEST), (Preset::Rp, RP_TEST)] {
        let full = median(&accuracies(preset, Variant::MsffQdconv));
        let word = median(&accuracies(preset, Variant::Qdconv));
        let sentence = median(&accuracies(preset, Variant::Qse));
        pass &= full >= word && full >= sentence;
        detail.push(format!(
            "{preset:?} medians msff-qdconv {} qdconv {} qse {}",
            correct(full, n),
            correct(word, n),
            correct(sentence, n)
        ));
    }
    report(5, "ablation ordering", pass, detail.join("; "));
}

struct BatchLoss<'a> {
    model: &'a Model,
    batch: &'a [&'a EncodedExample],
}

impl ScalarCircuit for BatchLoss<'_> {
    fn arity(&self) -> usize {
        self.model.param_count()
    }

    fn evaluate(&self, angles: &[f64]) -> f64 {
        let m = Model::new(
            self.model.config.clone(),
            ModelParameters {
                values: angles.to_vec(),
            },
        )
        .unwrap();
        let total: f64 = self
            .batch
            .iter()
            .map(|ex| cross_entropy(&m.forward(ex).unwrap(), ex.label))
            .sum();
        total / self.batch.len() as f64
    }
}

#[test]
fn criterion_6_gradient_correctness() {
    let _g = serial();
    let corpus = corpus(Preset::Rp);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = Model::init(ModelConfig::preset(Preset::Rp), &mut rng).unwrap();
    let batch = [&corpus.train[0], &corpus.train[1]];
    let started = Instant::now();
    let (grad, _, _) = batch_gradient(&model, &batch, EmbeddingGradient::ParameterShift).unwrap();
    let loss = BatchLoss {
        model: &model,
        batch: &batch,
    };
    let worst = (0..grad.len())
        .map(|i| {
            relative_error(
                grad[i],
                finite_diff_grad(&loss, &model.params.values, i, FD_STEP),
                GRAD_FLOOR,
            )
        })
        .fold(0.0, f64::max);
    let seconds = started.elapsed().as_secs_f64();
    report(
        6,
        "RP gradient check (< 1e-4 relative, < 2 min)",
        worst < GRAD_TOL && seconds < GRAD_SECONDS,
        format!(
            "{} parameters, max relative error {worst:.2e}, {seconds:.2}s",
            grad.len()
        ),
    );
}

#[test]
fn criterion_7_encoding_exactness() {
    let _g = serial();
    let corpus = corpus(Preset::Mc);
    let n = corpus.vocab.len();
    let mut basis_err: f64 = 0.0;
    for index in 0..n {
        let state = amplitude_encode(&one_hot(index, n).unwrap(), 5).unwrap();
        for (i, a) in state.amplitudes().iter().enumerate() {
            let want = if i == index { 1.0 } else { 0.0 };
            basis_err = basis_err.max((a.re - want).abs().max(a.im.abs()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = Model::init(ModelConfig::preset(Preset::Mc), &mut rng).unwrap();
    let (_, audit) = with_norm_audit(|| {
        for ex in corpus.train.iter().chain(&corpus.test) {
            model.forward(ex).unwrap();
        }
    });
    let pass = basis_err < BASIS_TOL && audit.max_deviation <= NORM_TOL && audit.states_checked > 0;
    report(
        7,
        "encoding exactness",
        pass,
        format!(
            "one-hot amplitude error {basis_err:.1e}; {} states, max |norm - 1| {:.1e}",
            audit.states_checked, audit.max_deviation
        ),
    );
}

#[test]
fn criterion_8_quantum_vs_classical() {
    let _g = serial();
    let mut pass = true;
    let mut detail = Vec::new();
    for preset in [Preset::Mc, Preset::Rp] {
        let q = count_parameters(&ModelConfig::preset(preset));
        let c = count_parameters(&ModelConfig::preset(preset).with_variant(Variant::MsffConv));
        let share = q as f64 / c as f64;
        pass &= share < PARAM_SHARE;
        detail.push(format!("{preset:?} {q}/{c} = {:.1}%", 100.0 * share));
    }
    let quantum = best(&accuracies(Preset::Rp, Variant::MsffQdconv));
    let classical = best(&accuracies(Preset::Rp, Variant::MsffDconv));
    pass &= quantum >= classical;
    detail.push(format!(
        "RP best msff-qdconv {} vs msff-dconv {}",
        correct(quantum, RP_TEST),
        correct(classical, RP_TEST)
    ));
    report(8, "quantum vs classical", pass, detail.join("; "));
}

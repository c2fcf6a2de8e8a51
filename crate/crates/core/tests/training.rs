use qdconv::checkpoint::Checkpoint;
use qdconv::datasets::preset_corpus;
use qdconv::gradient::EmbeddingGradient;
use qdconv::model::{ModelConfig, Preset, Variant};
use qdconv::train::{expected_circuit_counts, train, TrainRunReport, TrainingConfig};

fn short(preset: Preset, epochs: usize, seed: u64) -> TrainingConfig {
    let mut tc = TrainingConfig::preset(preset).with_seed(seed);
    tc.epochs = epochs;
    tc
}

#[test]
fn same_seed_same_run() {
    let corpus = preset_corpus(Preset::Mc).unwrap();
    let config = ModelConfig::preset(Preset::Mc);
    let a = train(&short(Preset::Mc, 3, 9), &config, &corpus).unwrap();
    let b = train(&short(Preset::Mc, 3, 9), &config, &corpus).unwrap();
    assert_eq!(a.model, b.model);
    let losses = |r: &TrainRunReport| r.epochs.iter().map(|e| e.train_loss).collect::<Vec<_>>();
    assert_eq!(losses(&a.report), losses(&b.report));
    assert_eq!(a.report.final_test_accuracy, b.report.final_test_accuracy);
    let c = train(&short(Preset::Mc, 3, 10), &config, &corpus).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn circuit_counts_match_the_budget() {
    for preset in [Preset::Mc, Preset::Rp] {
        let corpus = preset_corpus(preset).unwrap();
        for variant in [
            Variant::MsffQdconv,
            Variant::MsffQconv,
            Variant::Qse,
            Variant::MsffConv,
        ] {
            for method in [
                EmbeddingGradient::Adjoint,
                EmbeddingGradient::ParameterShift,
            ] {
                let config = ModelConfig::preset(preset).with_variant(variant);
                let mut tc = short(preset, 1, 0);
                tc.embedding_gradient = method;
                let run = train(&tc, &config, &corpus).unwrap();
                assert_eq!(
                    run.report.circuit_executions,
                    expected_circuit_counts(&config, &tc, &corpus),
                    "{preset:?} {variant} {method:?}"
                );
            }
        }
    }
}

#[test]
fn training_reduces_loss_over_seeds() {
    for preset in [Preset::Mc, Preset::Rp] {
        let corpus = preset_corpus(preset).unwrap();
        let config = ModelConfig::preset(preset);
        let mut deltas: Vec<f64> = (0..5)
            .map(|seed| {
                let r = train(
                    &TrainingConfig::preset(preset).with_seed(seed),
                    &config,
                    &corpus,
                )
                .unwrap()
                .report;
                assert!(r.aborted.is_none());
                assert_eq!(r.epochs.len(), TrainingConfig::preset(preset).epochs);
                r.final_train_loss - r.initial_train_loss
            })
            .collect();
        deltas.sort_by(f64::total_cmp);
        assert!(
            deltas[2] < 0.0,
            "{preset:?}: median loss change {}",
            deltas[2]
        );
    }
}

#[test]
fn report_checkpoint_and_loss_curve_round_trip() {
    let corpus = preset_corpus(Preset::Mc).unwrap();
    let config = ModelConfig::preset(Preset::Mc);
    let run = train(&short(Preset::Mc, 2, 4), &config, &corpus).unwrap();
    let dir = std::env::temp_dir().join(format!("qdconv-training-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let report_path = dir.join("report.json");
    run.report.write_json(&report_path).unwrap();
    assert_eq!(TrainRunReport::read_json(&report_path).unwrap(), run.report);

    let ckpt_path = dir.join("checkpoint.json");
    Checkpoint::from_model(&run.model, 4)
        .write(&ckpt_path)
        .unwrap();
    let restored = Checkpoint::read(&ckpt_path).unwrap().into_model().unwrap();
    assert_eq!(restored, run.model);
    for ex in &corpus.test {
        assert_eq!(
            restored.forward(ex).unwrap(),
            run.model.forward(ex).unwrap()
        );
    }

    let curve = run.report.loss_curve();
    let rows: Vec<Vec<f64>> = curve
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == 2));
    assert_eq!(
        rows[0],
        vec![0.0, (run.report.initial_train_loss * 1e10).round() / 1e10]
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

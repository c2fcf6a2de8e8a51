use qdconv::datasets::preset_corpus;
use qdconv::model::{ModelConfig, Preset, Variant};
use qdconv::train::{train, TrainingConfig};
use qdconv_demo::{ansatz_expectations, mc_corpus, McTrainer};

#[test]
fn single_qubit_expectation_is_a_cosine() {
    for (x, theta) in [(0.3, 0.2), (1.0, -2.5)] {
        let z = ansatz_expectations(&[x], &[theta], 1).unwrap();
        assert!((z[0] - f64::cos(x + theta)).abs() < 1e-12);
    }
    let z = ansatz_expectations(&[0.4, 1.2, 2.0], &[0.1; 6], 2).unwrap();
    assert!(z.iter().all(|v| v.abs() <= 1.0));
}

#[test]
fn bundled_corpus_matches_the_data_directory() {
    let a = mc_corpus().unwrap();
    let b = preset_corpus(Preset::Mc).unwrap();
    assert_eq!(a.vocab, b.vocab);
    assert_eq!(a.train, b.train);
    assert_eq!(a.test, b.test);
}

#[test]
fn stepping_reproduces_the_training_loop() {
    let mut trainer = McTrainer::new("msff-qdconv", 3).unwrap();
    for _ in 0..5 {
        trainer.step().unwrap();
    }
    let tc = TrainingConfig {
        epochs: 5,
        ..TrainingConfig::preset(Preset::Mc).with_seed(3)
    };
    let corpus = preset_corpus(Preset::Mc).unwrap();
    let report = train(
        &tc,
        &ModelConfig::preset(Preset::Mc).with_variant(Variant::MsffQdconv),
        &corpus,
    )
    .unwrap()
    .report;
    let mut expected = vec![report.initial_train_loss];
    expected.extend(report.epochs.iter().map(|e| e.train_loss));
    assert_eq!(trainer.loss_curve(), expected);
    assert_eq!(trainer.epoch(), 5);
    assert_eq!(trainer.test_accuracy().unwrap(), report.final_test_accuracy);
}

#[test]
fn classify_returns_a_distribution() {
    let trainer = McTrainer::new("qse", 0).unwrap();
    assert_eq!(trainer.param_count(), 10);
    assert_eq!(trainer.vocabulary().len(), 17);
    let p = trainer.classify("woman cooks tasty meal").unwrap();
    assert_eq!(p.len(), 2);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

//! Memorizing a 20-pair corpus must be possible.

use nbdoc_core::code::build_code_graph;
use nbdoc_core::corpus::{read_pairs_jsonl, CorpusSplit};
use nbdoc_core::summarizer::train::prepare;
use nbdoc_core::summarizer::{bleu_a, evaluate, train, TrainingConfig, DEFAULT_MAX_DECODE};

#[test]
fn toy_corpus_is_memorized() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy_pairs.jsonl")).unwrap();
    let pairs = read_pairs_jsonl(&text).unwrap();
    assert_eq!(pairs.len(), 20);
    let split = CorpusSplit {
        train: pairs.clone(),
        valid: pairs.clone(),
        test: vec![],
        seed: 3,
    };
    let config = TrainingConfig {
        epochs: 300,
        batch_size: 5,
        patience: 300,
        learning_rate: 1e-2,
        seed: 3,
        d: 32,
        ..Default::default()
    };
    let (model, report) = train(&split, &config).unwrap();
    let examples = prepare(&pairs, &model.input_vocab, &model.output_vocab);
    let eval = evaluate(&model.params, model.hops, &examples);
    eprintln!("best epoch {} of {}, loss {:.4}", report.best_epoch, report.epochs.len(), eval.loss);
    assert!(eval.loss < 0.1, "train loss {}", eval.loss);

    let decoded: Vec<Vec<String>> = pairs
        .iter()
        .map(|p| model.greedy_decode(&build_code_graph(&p.source, model.t_max, model.a_max), DEFAULT_MAX_DECODE))
        .collect();
    let exact = decoded.iter().zip(&pairs).filter(|(d, p)| **d == p.target).count();
    assert!(exact >= 18, "{exact}/20");
    assert_eq!(decoded[0], ["read", "the", "data"]);
    let refs: Vec<Vec<String>> = pairs.iter().map(|p| p.target.clone()).collect();
    assert!(bleu_a(&decoded, &refs).unwrap() >= 90.0);
}

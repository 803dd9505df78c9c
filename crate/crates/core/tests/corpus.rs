use std::path::Path;

use nbdoc_core::corpus::{corpus_stats, extract_pairs, split_corpus, CorpusStats, PairOrigin, TrainingPair};
use nbdoc_core::parse_notebook;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

fn mini_corpus() -> Vec<(String, nbdoc_core::NotebookDocument)> {
    let mut paths: Vec<_> = std::fs::read_dir(Path::new(FIXTURES).join("mini_corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let id = p.file_stem().unwrap().to_string_lossy().into_owned();
            (id, parse_notebook(&std::fs::read(p).unwrap()).unwrap())
        })
        .collect()
}

#[test]
fn stats_match_snapshot() {
    let docs = mini_corpus();
    let stats = corpus_stats(docs.iter().map(|(id, d)| (id.as_str(), d))).unwrap();
    let snapshot: CorpusStats = serde_json::from_str(&std::fs::read_to_string(Path::new(FIXTURES).join("mini_corpus_stats.json")).unwrap()).unwrap();
    assert_eq!(stats, snapshot);
    let json = serde_json::to_value(&stats).unwrap();
    for key in ["total_cells", "code_cells", "markdown_cells", "markdown_words"] {
        assert!(json["medians"][key].is_u64());
    }
}

#[test]
fn pairs_from_mini_corpus() {
    let docs = mini_corpus();
    let pairs: Vec<TrainingPair> = docs.iter().flat_map(|(id, d)| extract_pairs(d, id)).collect();
    assert!(!pairs.is_empty());
    for p in &pairs {
        assert!(!p.target.is_empty() && p.target.len() <= 20);
        assert_eq!(p.origin, PairOrigin::AdjacentMarkdown);
        let (_, doc) = docs.iter().find(|(id, _)| *id == p.notebook_id).unwrap();
        assert_eq!(doc.cells[p.cell_index].source, p.source);
    }
}

fn synthetic(n: usize) -> Vec<TrainingPair> {
    (0..n)
        .map(|i| TrainingPair {
            source: format!("x{i} = f({i})"),
            target: vec![format!("w{i}")],
            notebook_id: format!("nb{}", i / 10),
            cell_index: i % 10,
            origin: PairOrigin::AdjacentMarkdown,
        })
        .collect()
}

#[test]
fn split_of_5912_pairs() {
    let pairs = synthetic(5912);
    let a = split_corpus(&pairs, 1).unwrap();
    assert_eq!((a.train.len(), a.valid.len(), a.test.len()), (4730, 591, 591));
    assert_eq!(a, split_corpus(&pairs, 1).unwrap());
    assert_ne!(a.train, split_corpus(&pairs, 2).unwrap().train);
    let mut all: Vec<_> = a.train.iter().chain(&a.valid).chain(&a.test).cloned().collect();
    all.sort_by_key(|p| p.source.clone());
    let mut want = pairs;
    want.sort_by_key(|p| p.source.clone());
    assert_eq!(all, want);
}

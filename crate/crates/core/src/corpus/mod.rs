//! Training-data construction (code/documentation pairs, splits,
//! vocabularies) and descriptive corpus statistics.

mod markdown;
mod taxonomy;
mod vocab;

pub use markdown::{doc_tokens, first_sentence, markdown_plain_text};
pub use taxonomy::{DocCategory, Stage, StageLabel, Task};
pub use vocab::{build_vocab, Vocab, BOS, EOS, NUM, PAD, RESERVED, STR, UNK};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::notebook::{CellKind, NotebookDocument};

/// Maximum documentation length in tokens.
pub const L_MAX: usize = 20;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus has {0} pairs; at least 10 are needed to split")]
    CorpusTooSmall(usize),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("line {line}: {message}")]
    BadRecord { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairOrigin {
    AdjacentMarkdown,
    InlineComment,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrainingPair {
    pub source: String,
    pub target: Vec<String>,
    pub notebook_id: String,
    pub cell_index: usize,
    pub origin: PairOrigin,
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    source: String,
    target: String,
    notebook_id: String,
    cell_index: usize,
    origin: PairOrigin,
}

impl TrainingPair {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&PairRecord {
            source: self.source.clone(),
            target: self.target.join(" "),
            notebook_id: self.notebook_id.clone(),
            cell_index: self.cell_index,
            origin: self.origin,
        })
        .expect("pair records serialize")
    }
}

pub fn write_pairs_jsonl(pairs: &[TrainingPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&p.to_json_line());
        out.push('\n');
    }
    out
}

pub fn read_pairs_jsonl(text: &str) -> Result<Vec<TrainingPair>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PairRecord = serde_json::from_str(line).map_err(|e| CorpusError::BadRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        let target: Vec<String> = rec.target.split_whitespace().map(str::to_string).collect();
        if target.is_empty() {
            return Err(CorpusError::BadRecord {
                line: i + 1,
                message: "empty target".into(),
            });
        }
        out.push(TrainingPair {
            source: rec.source,
            target,
            notebook_id: rec.notebook_id,
            cell_index: rec.cell_index,
            origin: rec.origin,
        });
    }
    Ok(out)
}

/// Text of a leading `#` comment, if the first non-blank line is one.
fn leading_comment(source: &str) -> Option<&str> {
    let line = source.lines().map(str::trim).find(|l| !l.is_empty())?;
    let body = line.strip_prefix('#')?;
    Some(body.trim_start_matches('#').trim())
}

/// Pair each code cell with documentation: a leading inline comment wins,
/// otherwise the markdown cell directly above.
pub fn extract_pairs(doc: &NotebookDocument, notebook_id: &str) -> Vec<TrainingPair> {
    let mut out = Vec::new();
    for (i, cell) in doc.cells.iter().enumerate() {
        if cell.kind != CellKind::Code {
            continue;
        }
        let (origin, mut target) = if let Some(comment) = leading_comment(&cell.source) {
            (PairOrigin::InlineComment, doc_tokens(comment))
        } else if i > 0 && doc.cells[i - 1].kind == CellKind::Markdown {
            let sentence = first_sentence(&doc.cells[i - 1].source);
            (PairOrigin::AdjacentMarkdown, doc_tokens(&sentence))
        } else {
            continue;
        };
        target.truncate(L_MAX);
        if target.is_empty() {
            continue;
        }
        out.push(TrainingPair {
            source: cell.source.clone(),
            target,
            notebook_id: notebook_id.to_string(),
            cell_index: i,
            origin,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<TrainingPair>,
    pub valid: Vec<TrainingPair>,
    pub test: Vec<TrainingPair>,
    pub seed: u64,
}

/// Sizes of an 8:1:1 split: validation and test get `floor(n/10)` each and
/// training takes the remainder.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let tenth = n / 10;
    (n - 2 * tenth, tenth, tenth)
}

pub fn split_corpus(pairs: &[TrainingPair], seed: u64) -> Result<CorpusSplit, CorpusError> {
    if pairs.len() < 10 {
        return Err(CorpusError::CorpusTooSmall(pairs.len()));
    }
    let mut shuffled = pairs.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_train, n_valid, _) = split_sizes(pairs.len());
    let test = shuffled.split_off(n_train + n_valid);
    let valid = shuffled.split_off(n_train);
    Ok(CorpusSplit {
        train: shuffled,
        valid,
        test,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotebookStats {
    pub notebook_id: String,
    pub total_cells: usize,
    pub code_cells: usize,
    pub markdown_cells: usize,
    pub markdown_words: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatMedians {
    pub total_cells: usize,
    pub code_cells: usize,
    pub markdown_cells: usize,
    pub markdown_words: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub notebooks: Vec<NotebookStats>,
    pub medians: StatMedians,
}

/// Median with the lower-middle convention for even counts.
pub fn lower_median(values: &[usize]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    Some(v[(v.len() - 1) / 2])
}

pub fn notebook_stats(doc: &NotebookDocument, notebook_id: &str) -> NotebookStats {
    let code_cells = doc.cells.iter().filter(|c| c.kind == CellKind::Code).count();
    let md: Vec<_> = doc.cells.iter().filter(|c| c.kind == CellKind::Markdown).collect();
    let markdown_words = md
        .iter()
        .map(|c| markdown_plain_text(&c.source).split_whitespace().count())
        .sum();
    NotebookStats {
        notebook_id: notebook_id.to_string(),
        total_cells: doc.cells.len(),
        code_cells,
        markdown_cells: md.len(),
        markdown_words,
    }
}

pub fn corpus_stats<'a>(docs: impl IntoIterator<Item = (&'a str, &'a NotebookDocument)>) -> Result<CorpusStats, CorpusError> {
    let notebooks: Vec<NotebookStats> = docs.into_iter().map(|(id, d)| notebook_stats(d, id)).collect();
    let med = |f: fn(&NotebookStats) -> usize| {
        let v: Vec<usize> = notebooks.iter().map(f).collect();
        lower_median(&v)
    };
    let medians = StatMedians {
        total_cells: med(|s| s.total_cells).ok_or(CorpusError::EmptyCorpus)?,
        code_cells: med(|s| s.code_cells).ok_or(CorpusError::EmptyCorpus)?,
        markdown_cells: med(|s| s.markdown_cells).ok_or(CorpusError::EmptyCorpus)?,
        markdown_words: med(|s| s.markdown_words).ok_or(CorpusError::EmptyCorpus)?,
    };
    Ok(CorpusStats { notebooks, medians })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notebook::Cell;
    use proptest::prelude::*;

    fn doc(cells: Vec<Cell>) -> NotebookDocument {
        let mut d = NotebookDocument::default();
        d.cells = cells;
        d
    }

    fn pair(i: usize) -> TrainingPair {
        TrainingPair {
            source: format!("x{i} = {i}"),
            target: vec![format!("t{i}")],
            notebook_id: "nb".into(),
            cell_index: i,
            origin: PairOrigin::AdjacentMarkdown,
        }
    }

    #[test]
    fn adjacent_markdown_pair() {
        let d = doc(vec![Cell::markdown("m", "Read the data"), Cell::code("c", "pd.read_csv('train.csv')")]);
        let pairs = extract_pairs(&d, "nb");
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].target, ["read", "the", "data"]);
        assert_eq!(pairs[0].origin, PairOrigin::AdjacentMarkdown);
        assert_eq!(pairs[0].cell_index, 1);
    }

    #[test]
    fn inline_comment_overrides() {
        let d = doc(vec![Cell::code("c", "# fit model\nm.fit(x)")]);
        let pairs = extract_pairs(&d, "nb");
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].target, ["fit", "model"]);
        assert_eq!(pairs[0].origin, PairOrigin::InlineComment);

        let d = doc(vec![Cell::markdown("m", "Something else"), Cell::code("c", "\n# fit model\nm.fit(x)")]);
        assert_eq!(extract_pairs(&d, "nb")[0].origin, PairOrigin::InlineComment);
    }

    #[test]
    fn undocumented_code_yields_nothing() {
        let d = doc(vec![Cell::code("c", "x = 1")]);
        assert!(extract_pairs(&d, "nb").is_empty());
        let d = doc(vec![Cell::markdown("m", "---"), Cell::code("c", "x = 1")]);
        assert!(extract_pairs(&d, "nb").is_empty());
    }

    #[test]
    fn targets_are_capped() {
        let long = (0..40).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let d = doc(vec![Cell::markdown("m", &long), Cell::code("c", "x")]);
        assert_eq!(extract_pairs(&d, "nb")[0].target.len(), L_MAX);
    }

    #[test]
    fn split_ten() {
        let pairs: Vec<_> = (0..10).map(pair).collect();
        let s = split_corpus(&pairs, 1).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (8, 1, 1));
        assert!(matches!(split_corpus(&pairs[..9], 1), Err(CorpusError::CorpusTooSmall(9))));
    }

    #[test]
    fn split_is_deterministic() {
        let pairs: Vec<_> = (0..100).map(pair).collect();
        assert_eq!(split_corpus(&pairs, 7).unwrap(), split_corpus(&pairs, 7).unwrap());
        assert_ne!(split_corpus(&pairs, 7).unwrap().train, split_corpus(&pairs, 8).unwrap().train);
    }

    #[test]
    fn split_sizes_for_5912_pairs() {
        assert_eq!(split_sizes(5912), (4730, 591, 591));
    }

    #[test]
    fn stats_single_notebook() {
        let ten = "one two three four five six seven eight nine ten";
        let d = doc(vec![
            Cell::markdown("a", ten),
            Cell::code("b", "x"),
            Cell::markdown("c", ten),
            Cell::code("d", "y"),
            Cell::markdown("e", ten),
        ]);
        let s = corpus_stats([("nb", &d)]).unwrap();
        let n = &s.notebooks[0];
        assert_eq!((n.total_cells, n.markdown_cells, n.code_cells, n.markdown_words), (5, 3, 2, 30));
        assert_eq!(
            s.medians,
            StatMedians {
                total_cells: 5,
                code_cells: 2,
                markdown_cells: 3,
                markdown_words: 30
            }
        );
    }

    #[test]
    fn median_lower_middle() {
        assert_eq!(lower_median(&[200, 100]), Some(100));
        assert_eq!(lower_median(&[3, 1, 2]), Some(2));
        assert_eq!(lower_median(&[]), None);
        let empty: Vec<(&str, &NotebookDocument)> = Vec::new();
        assert!(matches!(corpus_stats(empty), Err(CorpusError::EmptyCorpus)));
    }

    #[test]
    fn jsonl_round_trip() {
        let pairs: Vec<_> = (0..3).map(pair).collect();
        let text = write_pairs_jsonl(&pairs);
        assert_eq!(read_pairs_jsonl(&text).unwrap(), pairs);
        assert!(text.lines().next().unwrap().contains("\"origin\":\"adjacent_markdown\""));
    }

    proptest! {
        #[test]
        fn split_partitions(n in 10usize..200, seed in any::<u64>()) {
            let pairs: Vec<_> = (0..n).map(pair).collect();
            let s = split_corpus(&pairs, seed).unwrap();
            let mut all: Vec<_> = s.train.iter().chain(&s.valid).chain(&s.test).map(|p| p.cell_index).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(s.valid.len(), n / 10);
            prop_assert_eq!(s.test.len(), n / 10);
        }

        #[test]
        fn pairs_never_exceed_code_cells(kinds in proptest::collection::vec(0u8..3, 0..12)) {
            let cells: Vec<Cell> = kinds.iter().enumerate().map(|(i, k)| match k {
                0 => Cell::markdown(format!("m{i}"), "Some words here"),
                1 => Cell::code(format!("c{i}"), "x = 1"),
                _ => Cell::code(format!("c{i}"), "# a comment\nx = 1"),
            }).collect();
            let code = cells.iter().filter(|c| c.kind == CellKind::Code).count();
            let d = doc(cells);
            prop_assert!(extract_pairs(&d, "nb").len() <= code);
        }
    }
}

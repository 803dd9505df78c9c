use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TrainingPair;
use crate::code::{build_code_graph, DEFAULT_A_MAX, DEFAULT_T_MAX};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
pub const STR: u32 = 4;
pub const NUM: u32 = 5;

pub const RESERVED: [&str; 6] = ["<pad>", "<s>", "</s>", "<unk>", "<str>", "<num>"];

/// Token <-> id mapping. Serialized as a JSON list in id order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocab { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    pub fn reserved_only() -> Self {
        RESERVED.iter().map(|s| s.to_string()).collect::<Vec<_>>().into()
    }

    /// Reserved tokens followed by `counts` ranked by descending frequency,
    /// ties broken lexicographically, capped at `max_size` entries in total.
    pub fn from_counts(counts: &HashMap<String, usize>, max_size: usize) -> Self {
        let mut ranked: Vec<(&String, &usize)> = counts
            .iter()
            .filter(|(t, _)| !RESERVED.contains(&t.as_str()))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let room = max_size.saturating_sub(tokens.len());
        tokens.extend(ranked.into_iter().take(room).map(|(t, _)| t.clone()));
        tokens.into()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        self.tokens.get(id as usize).map(String::as_str).unwrap_or("<unk>")
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Input vocabulary over code and AST tokens, output vocabulary over targets.
pub fn build_vocab(pairs: &[TrainingPair], v_in_max: usize, v_out_max: usize) -> (Vocab, Vocab) {
    let mut input: HashMap<String, usize> = HashMap::new();
    let mut output: HashMap<String, usize> = HashMap::new();
    for p in pairs {
        let g = build_code_graph(&p.source, DEFAULT_T_MAX, DEFAULT_A_MAX);
        for t in g.code_tokens.iter().chain(&g.ast_tokens) {
            *input.entry(t.clone()).or_default() += 1;
        }
        for t in &p.target {
            *output.entry(t.clone()).or_default() += 1;
        }
    }
    (Vocab::from_counts(&input, v_in_max), Vocab::from_counts(&output, v_out_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PairOrigin;

    fn counts(items: &[(&str, usize)]) -> HashMap<String, usize> {
        items.iter().map(|(t, n)| (t.to_string(), *n)).collect()
    }

    #[test]
    fn frequency_ranking_and_cap() {
        let v = Vocab::from_counts(&counts(&[("data", 5), ("x", 1)]), 7);
        assert_eq!(v.tokens()[..6], RESERVED.map(String::from));
        assert_eq!(v.tokens()[6], "data");
        assert_eq!(v.len(), 7);
    }

    #[test]
    fn reserved_only_cap() {
        let v = Vocab::from_counts(&counts(&[("data", 5)]), 6);
        assert_eq!(v, Vocab::reserved_only());
    }

    #[test]
    fn ties_are_lexicographic() {
        let v = Vocab::from_counts(&counts(&[("beta", 2), ("alpha", 2)]), 10);
        assert!(v.id("alpha") < v.id("beta"));
    }

    #[test]
    fn unknown_maps_to_unk_and_round_trips() {
        let pairs = vec![TrainingPair {
            source: "df.head()".into(),
            target: vec!["show".into(), "rows".into()],
            notebook_id: "n".into(),
            cell_index: 0,
            origin: PairOrigin::AdjacentMarkdown,
        }];
        let (vin, vout) = build_vocab(&pairs, 100, 100);
        assert_eq!(vout.id("never-seen"), UNK);
        for t in ["show", "rows"] {
            assert_eq!(vout.token(vout.id(t)), t);
        }
        assert!(vin.get("head").is_some() && vin.get("call").is_some());
        let json = serde_json::to_string(&vout).unwrap();
        let back: Vocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vout);
    }
}

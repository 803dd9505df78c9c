//! Classifying who wrote a markdown cell: the tool alone (T), the tool and a
//! human together (C), or a human alone (H).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    T,
    C,
    H,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::T => "T",
            Provenance::C => "C",
            Provenance::H => "H",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "T" => Some(Provenance::T),
            "C" => Some(Provenance::C),
            "H" => Some(Provenance::H),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceTag {
    pub value: Provenance,
    pub similarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub tool: f64,
    pub co_created: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tool: 0.95,
            co_created: 0.30,
        }
    }
}

/// Lowercase, drop markdown markers, collapse whitespace.
pub fn normalize(text: &str) -> String {
    let stripped: String = text
        .chars()
        .filter(|c| !matches!(c, '#' | '*' | '_' | '`' | '>'))
        .flat_map(char::to_lowercase)
        .collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Character-level Levenshtein distance (two-row dynamic program).
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - distance / max(len)` over normalized text; 1.0 for two empty strings.
pub fn similarity(suggested: &str, final_text: &str) -> f64 {
    let a: Vec<char> = normalize(suggested).chars().collect();
    let b: Vec<char> = normalize(final_text).chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / longest as f64
}

pub fn classify_provenance_with(suggested: &str, final_text: &str, th: Thresholds) -> ProvenanceTag {
    if normalize(final_text).is_empty() || normalize(suggested).is_empty() {
        return ProvenanceTag {
            value: Provenance::H,
            similarity: 0.0,
        };
    }
    let sim = similarity(suggested, final_text);
    let value = if sim >= th.tool {
        Provenance::T
    } else if sim >= th.co_created {
        Provenance::C
    } else {
        Provenance::H
    };
    ProvenanceTag { value, similarity: sim }
}

pub fn classify_provenance(suggested: &str, final_text: &str) -> ProvenanceTag {
    classify_provenance_with(suggested, final_text, Thresholds::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_lev(a: &[char], b: &[char]) -> usize {
        // Plain recursion, fine for the short strings used here.
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                if x == y {
                    brute_lev(ra, rb)
                } else {
                    1 + brute_lev(ra, b).min(brute_lev(a, rb)).min(brute_lev(ra, rb))
                }
            }
        }
    }

    #[test]
    fn identical_is_tool() {
        let tag = classify_provenance("Importing libraries", "Importing libraries");
        assert_eq!(tag.value, Provenance::T);
        assert_eq!(tag.similarity, 1.0);
    }

    #[test]
    fn appended_default_value_is_co_created() {
        let tag = classify_provenance("Return the first 5 rows", "Return the first 5 rows. (defValue=5)");
        assert_eq!(tag.value, Provenance::C);
    }

    #[test]
    fn rewritten_is_human() {
        let a: Vec<char> = "model".chars().collect();
        let b: Vec<char> = "fit regression model".chars().collect();
        assert_eq!(brute_lev(&a, &b), 15);
        let tag = classify_provenance("Model", "Fit regression model");
        assert_eq!(tag.value, Provenance::H);
        assert!((tag.similarity - 0.25).abs() < 1e-12);
    }

    #[test]
    fn empty_final_is_human() {
        assert_eq!(classify_provenance("Read the data", "   ").value, Provenance::H);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize("  ## Read   **the**\n data "), "read the data");
    }

    proptest! {
        #[test]
        fn dp_matches_recursion(a in "[ab ]{0,7}", b in "[ab ]{0,7}") {
            let a: Vec<char> = a.chars().collect();
            let b: Vec<char> = b.chars().collect();
            prop_assert_eq!(levenshtein(&a, &b), brute_lev(&a, &b));
        }

        #[test]
        fn surrounding_whitespace_is_ignored(s in "[a-z ]{1,20}", f in "[a-z ]{1,20}", pad in "[ \n\t]{0,4}") {
            let padded = format!("{pad}{f}{pad}");
            prop_assert_eq!(classify_provenance(&s, &f).value, classify_provenance(&s, &padded).value);
        }

        #[test]
        fn similarity_in_unit_interval(s in ".{0,20}", f in ".{0,20}") {
            let sim = similarity(&s, &f);
            prop_assert!((0.0..=1.0).contains(&sim));
        }
    }
}

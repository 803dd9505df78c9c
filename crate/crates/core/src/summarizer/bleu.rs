//! Corpus BLEU-a: brevity penalty times the arithmetic mean of add-one
//! smoothed corpus n-gram precisions for n = 1..4, scaled to [0, 100].

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BleuError {
    #[error("{candidates} candidates but {references} references")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("empty corpus")]
    Empty,
}

pub const MAX_N: usize = 4;

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_default() += 1;
        }
    }
    counts
}

/// Clipped matches and candidate n-gram totals summed over the corpus.
pub fn corpus_ngram_stats<S: AsRef<str>>(candidates: &[Vec<S>], references: &[Vec<S>], n: usize) -> (usize, usize) {
    let mut matches = 0;
    let mut total = 0;
    for (c, r) in candidates.iter().zip(references) {
        let cc = ngram_counts(c, n);
        let rc = ngram_counts(r, n);
        for (g, k) in &cc {
            matches += (*k).min(rc.get(g).copied().unwrap_or(0));
            total += k;
        }
    }
    (matches, total)
}

pub fn brevity_penalty(cand_len: usize, ref_len: usize) -> f64 {
    if cand_len == 0 {
        0.0
    } else if cand_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    }
}

pub fn bleu_a<S: AsRef<str>>(candidates: &[Vec<S>], references: &[Vec<S>]) -> Result<f64, BleuError> {
    if candidates.len() != references.len() {
        return Err(BleuError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(BleuError::Empty);
    }
    let c_len: usize = candidates.iter().map(Vec::len).sum();
    let r_len: usize = references.iter().map(Vec::len).sum();
    let mean_p = (1..=MAX_N)
        .map(|n| {
            let (m, t) = corpus_ngram_stats(candidates, references, n);
            (m as f64 + 1.0) / (t as f64 + 1.0)
        })
        .sum::<f64>()
        / MAX_N as f64;
    Ok(100.0 * brevity_penalty(c_len, r_len) * mean_p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn perfect() {
        let c = vec![toks("read the data"), toks("show the first rows")];
        assert_eq!(bleu_a(&c, &c).unwrap(), 100.0);
    }

    #[test]
    fn the_cat() {
        // p1 = 3/3, p2 = 2/2, p3 = 1/1, p4 = 1/1, bp = exp(1 - 3/2)
        let v = bleu_a(&[toks("the cat")], &[toks("the cat sat")]).unwrap();
        assert!((v - 100.0 * (-0.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn clipping_counts_reference_multiplicity() {
        assert_eq!(corpus_ngram_stats(&[toks("the the the")], &[toks("the cat")], 1), (1, 3));
    }

    #[test]
    fn errors() {
        assert_eq!(
            bleu_a(&[toks("a")], &[]),
            Err(BleuError::LengthMismatch { candidates: 1, references: 0 })
        );
        assert_eq!(bleu_a::<&str>(&[], &[]), Err(BleuError::Empty));
        assert_eq!(bleu_a(&[vec![]], &[toks("a")]).unwrap(), 0.0);
    }
}

//! Code-cell preprocessing: cleaning, tokenization, a subset parser and the
//! token/node/edge graph consumed by the summarizer.

mod ast;
mod graph;
pub mod lexer;

pub use ast::{parse_ast, AstNode, NodeKind};
pub use graph::{build_code_graph, CodeGraph, DEFAULT_A_MAX, DEFAULT_T_MAX};

use lexer::TokKind;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("lex error at byte {offset}: {message}")]
    Lex { offset: usize, message: String },
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unsupported syntax at byte {offset}: {construct}")]
    UnsupportedSyntax { offset: usize, construct: String },
}

pub const STR_TOKEN: &str = "<str>";
pub const NUM_TOKEN: &str = "<num>";

fn is_shell_or_magic(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with('%') || t.starts_with('!')
}

fn is_non_grammar_char(c: char) -> bool {
    matches!(c, '\u{feff}' | '\u{200b}'..='\u{200f}' | '\u{2028}'..='\u{202e}' | '\u{2060}'..='\u{206f}')
}

/// Drop notebook magics and shell escapes, invisible unicode punctuation and
/// trailing whitespace. Comments are kept.
pub fn clean_source(source: &str) -> String {
    let lines: Vec<String> = source
        .lines()
        .filter(|l| !is_shell_or_magic(l))
        .map(|l| {
            l.chars()
                .filter(|c| !is_non_grammar_char(*c))
                .map(|c| if c == '\u{a0}' { ' ' } else { c })
                .collect::<String>()
                .trim_end()
                .to_string()
        })
        .collect();
    let mut cleaned = lines.join("\n");
    let trimmed_len = cleaned.trim_end().len();
    cleaned.truncate(trimmed_len);
    cleaned
}

/// Split an identifier into lowercase sub-tokens at underscores and case
/// boundaries: `read_csv` -> `read csv`, `LassoCV` -> `lasso cv`,
/// `HTTPServer` -> `http server`.
pub fn split_identifier(ident: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for part in ident.split(|c: char| c == '_' || c == '.') {
        if part.starts_with(|c: char| c.is_ascii_digit()) {
            // A digit-led piece would re-lex as a number; keep it glued.
            match out.last_mut() {
                Some(prev) => prev.push_str(&part.to_lowercase()),
                None => out.push(format!("_{}", part.to_lowercase())),
            }
            continue;
        }
        let chars: Vec<char> = part.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = (prev.is_lowercase() && cur.is_uppercase())
                || (prev.is_uppercase() && cur.is_uppercase() && next_lower);
            if boundary {
                out.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        if start < chars.len() {
            out.push(chars[start..].iter().collect::<String>().to_lowercase());
        }
    }
    out
}

fn tokens_from(toks: Vec<lexer::Token>) -> Vec<String> {
    let mut out = Vec::new();
    for t in toks {
        match t.kind {
            TokKind::Name => out.extend(split_identifier(&t.text)),
            TokKind::Number => out.push(NUM_TOKEN.to_string()),
            TokKind::Str => out.push(STR_TOKEN.to_string()),
            TokKind::Op | TokKind::Placeholder => out.push(t.text),
            TokKind::Newline | TokKind::Indent | TokKind::Dedent | TokKind::Eof => {}
        }
    }
    out
}

/// Lexical tokens of cleaned code with identifiers split and literals abstracted.
pub fn tokenize_code(source: &str) -> Result<Vec<String>, CodeError> {
    lexer::lex(source).map(tokens_from)
}

/// Like [`tokenize_code`] but never fails; unterminated strings run to the end.
pub fn tokenize_code_lenient(source: &str) -> Vec<String> {
    tokens_from(lexer::lex_lenient(source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize_code(s).unwrap()
    }

    #[test]
    fn clean_examples() {
        assert_eq!(clean_source("%matplotlib inline\nx = 1"), "x = 1");
        assert_eq!(clean_source("x = 1"), "x = 1");
        assert_eq!(clean_source("!pip install a\ny=2  "), "y=2");
        assert_eq!(clean_source("%%time\nx = 1 # keep me"), "x = 1 # keep me");
        assert_eq!(clean_source("\u{feff}x\u{200b} = 1"), "x = 1");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(toks("train = pd.read_csv('train.csv')"), ["train", "=", "pd", ".", "read", "csv", "(", "<str>", ")"]);
        assert_eq!(toks("x=1"), ["x", "=", "<num>"]);
        assert_eq!(toks("LassoCV"), ["lasso", "cv"]);
        assert_eq!(toks("HTTPServer"), ["http", "server"]);
        assert_eq!(toks("x = 1  # note"), ["x", "=", "<num>"]);
    }

    #[test]
    fn unterminated_is_lex_error() {
        assert!(matches!(tokenize_code("s = 'oops"), Err(CodeError::Lex { .. })));
        assert_eq!(tokenize_code_lenient("s = 'oops"), ["s", "=", "<str>"]);
    }

    proptest! {
        #[test]
        fn idempotent_on_output(src in "[a-zA-Z_ =().,0-9+\\-*'\\[\\]:]{0,40}") {
            if let Ok(first) = tokenize_code(&src) {
                let again = tokenize_code(&first.join(" ")).unwrap();
                prop_assert_eq!(again, first);
            }
        }

        #[test]
        fn deterministic(src in ".{0,40}") {
            prop_assert_eq!(tokenize_code(&src), tokenize_code(&src));
        }
    }
}

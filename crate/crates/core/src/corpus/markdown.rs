//! Reducing markdown cells to plain text.

fn strip_heading(line: &str) -> Option<&str> {
    let t = line.trim_start();
    let hashes = t.chars().take_while(|&c| c == '#').count();
    if hashes > 0 && hashes <= 6 && (t.len() == hashes || t[hashes..].starts_with(' ')) {
        Some(t[hashes..].trim())
    } else {
        None
    }
}

/// Remove inline markup from one line: links and images keep their text,
/// code spans keep their content, emphasis markers and html tags go.
fn strip_inline(line: &str) -> String {
    let chars: Vec<char> = line.chars().collect();
    let mut out = String::with_capacity(line.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '!' if chars.get(i + 1) == Some(&'[') => i += 1,
            '[' => {
                // [text](url) -> text
                if let Some(close) = chars[i + 1..].iter().position(|&c| c == ']').map(|p| p + i + 1) {
                    if chars.get(close + 1) == Some(&'(') {
                        if let Some(end) = chars[close + 1..].iter().position(|&c| c == ')').map(|p| p + close + 1) {
                            out.push_str(&strip_inline(&chars[i + 1..close].iter().collect::<String>()));
                            i = end + 1;
                            continue;
                        }
                    }
                }
                out.push(c);
                i += 1;
            }
            '<' => {
                if let Some(end) = chars[i + 1..].iter().position(|&c| c == '>').map(|p| p + i + 1) {
                    let inner: String = chars[i + 1..end].iter().collect();
                    if inner.starts_with(|c: char| c.is_ascii_alphabetic() || c == '/') {
                        out.push(' ');
                        i = end + 1;
                        continue;
                    }
                }
                out.push(c);
                i += 1;
            }
            '`' | '*' => i += 1,
            '~' if chars.get(i + 1) == Some(&'~') => i += 2,
            '_' => {
                let prev_word = i > 0 && chars[i - 1].is_alphanumeric();
                let next_word = chars.get(i + 1).is_some_and(|c| c.is_alphanumeric());
                if prev_word && next_word {
                    out.push(c);
                }
                i += 1;
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

/// Plain text of a whole markdown cell, one output line per input line.
pub fn markdown_plain_text(md: &str) -> String {
    md.lines()
        .map(|l| strip_inline(strip_heading(l).unwrap_or(l)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Headings are sentences of their own; other lines are joined into
/// paragraphs. Returns the first sentence of the first non-empty block.
pub fn first_sentence(md: &str) -> String {
    let mut blocks: Vec<String> = Vec::new();
    let mut para = String::new();
    for line in md.lines() {
        if let Some(h) = strip_heading(line) {
            if !para.trim().is_empty() {
                blocks.push(std::mem::take(&mut para));
            }
            blocks.push(strip_inline(h));
        } else if line.trim().is_empty() {
            if !para.trim().is_empty() {
                blocks.push(std::mem::take(&mut para));
            }
        } else {
            para.push(' ');
            para.push_str(&strip_inline(line.trim()));
        }
    }
    if !para.trim().is_empty() {
        blocks.push(para);
    }
    let Some(block) = blocks.into_iter().find(|b| !doc_tokens(b).is_empty()) else {
        return String::new();
    };
    let chars: Vec<char> = block.trim().chars().collect();
    for (i, c) in chars.iter().enumerate() {
        if matches!(c, '.' | '!' | '?') && chars.get(i + 1).is_none_or(|n| n.is_whitespace()) {
            return chars[..i].iter().collect::<String>().trim().to_string();
        }
    }
    chars.iter().collect::<String>().trim().to_string()
}

/// Lowercased word tokens of documentation text.
pub fn doc_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|w| w.trim_matches('\''))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headings_and_emphasis() {
        assert_eq!(first_sentence("## Read the **data**"), "Read the data");
        assert_eq!(first_sentence("# Blending Models\nMore text here."), "Blending Models");
        assert_eq!(first_sentence("We fit the model. Then we predict."), "We fit the model");
        assert_eq!(first_sentence("Refer [here](https://x.org/a.b) for `read_csv`."), "Refer here for read_csv");
    }

    #[test]
    fn plain_text_keeps_words() {
        let text = markdown_plain_text("# Title\nSee <b>this</b> _note_ and snake_case.");
        assert_eq!(text.split_whitespace().collect::<Vec<_>>(), ["Title", "See", "this", "note", "and", "snake_case."]);
    }

    #[test]
    fn tokens() {
        assert_eq!(doc_tokens("Let's see the values!"), ["let's", "see", "the", "values"]);
        assert_eq!(doc_tokens("dummy/indicator"), ["dummy", "indicator"]);
        assert!(doc_tokens("---").is_empty());
    }
}

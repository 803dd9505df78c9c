//! Lexer for the Python subset found in data-science notebook cells.

use super::CodeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Name,
    Number,
    Str,
    Op,
    /// `<str>` / `<num>` placeholders, so the tokenizer can re-read its output.
    Placeholder,
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    pub offset: usize,
}

const OPS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "==", "!=", "<=", ">=", "**", "//", "<<", ">>", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "@=",
];

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    depth: usize,
    indents: Vec<usize>,
    at_line_start: bool,
    out: Vec<Token>,
    lenient: bool,
}

/// Lex `src`. Unterminated strings are an error.
pub fn lex(src: &str) -> Result<Vec<Token>, CodeError> {
    Lexer::new(src, false).run()
}

/// Lex `src`, treating an unterminated string as running to end of input.
pub fn lex_lenient(src: &str) -> Vec<Token> {
    Lexer::new(src, true).run().expect("lenient lexing is total")
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, lenient: bool) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            depth: 0,
            indents: vec![0],
            at_line_start: true,
            out: Vec::new(),
            lenient,
        }
    }

    fn push(&mut self, kind: TokKind, start: usize, end: usize) {
        self.out.push(Token {
            kind,
            text: self.src[start..end].to_string(),
            offset: start,
        });
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn run(mut self) -> Result<Vec<Token>, CodeError> {
        while self.pos < self.bytes.len() {
            if self.at_line_start && self.depth == 0 {
                if !self.handle_indent() {
                    continue;
                }
            }
            let Some(c) = self.peek() else { break };
            match c {
                b' ' | b'\t' | b'\x0c' | b'\r' => self.pos += 1,
                b'\\' if self.bytes.get(self.pos + 1) == Some(&b'\n') => self.pos += 2,
                b'\n' => {
                    if self.depth == 0 {
                        self.newline(self.pos);
                        self.at_line_start = true;
                    }
                    self.pos += 1;
                }
                b'#' => self.skip_comment(),
                b'<' if self.src[self.pos..].starts_with("<str>") || self.src[self.pos..].starts_with("<num>") => {
                    let start = self.pos;
                    self.pos += 5;
                    self.push(TokKind::Placeholder, start, self.pos);
                }
                b'0'..=b'9' => self.number(),
                b'.' if matches!(self.bytes.get(self.pos + 1), Some(b'0'..=b'9')) => self.number(),
                b'"' | b'\'' => self.string(self.pos)?,
                _ if c == b'_' || c.is_ascii_alphabetic() || c >= 0x80 => {
                    let start = self.pos;
                    let mut end = start;
                    for (i, ch) in self.src[start..].char_indices() {
                        if ch == '_' || ch.is_alphanumeric() {
                            end = start + i + ch.len_utf8();
                        } else {
                            break;
                        }
                    }
                    if end == start {
                        // A lone non-identifier unicode char; emit it as an op.
                        let ch = self.src[start..].chars().next().unwrap();
                        self.pos += ch.len_utf8();
                        self.push(TokKind::Op, start, self.pos);
                        continue;
                    }
                    // String prefixes: r"", b'', f"", rb"", ...
                    let word = &self.src[start..end];
                    let is_prefix = word.len() <= 2
                        && word.chars().all(|ch| matches!(ch.to_ascii_lowercase(), 'r' | 'b' | 'f' | 'u'));
                    if is_prefix && matches!(self.bytes.get(end), Some(b'"' | b'\'')) {
                        self.pos = end;
                        self.string(start)?;
                    } else {
                        self.pos = end;
                        self.push(TokKind::Name, start, end);
                    }
                }
                _ => self.op(),
            }
        }
        let end = self.bytes.len();
        if self.out.last().is_some_and(|t| !matches!(t.kind, TokKind::Newline | TokKind::Dedent | TokKind::Indent)) {
            self.newline(end);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.out.push(Token {
                kind: TokKind::Dedent,
                text: String::new(),
                offset: end,
            });
        }
        self.out.push(Token {
            kind: TokKind::Eof,
            text: String::new(),
            offset: end,
        });
        Ok(self.out)
    }

    fn newline(&mut self, at: usize) {
        if self.out.last().is_some_and(|t| !matches!(t.kind, TokKind::Newline | TokKind::Indent | TokKind::Dedent)) {
            self.out.push(Token {
                kind: TokKind::Newline,
                text: String::new(),
                offset: at,
            });
        }
    }

    /// Measure indentation at line start. Returns false if the line was blank
    /// or comment-only and has been consumed.
    fn handle_indent(&mut self) -> bool {
        let mut width = 0;
        let mut p = self.pos;
        while let Some(&c) = self.bytes.get(p) {
            match c {
                b' ' => width += 1,
                b'\t' => width = (width / 8 + 1) * 8,
                b'\x0c' | b'\r' => {}
                _ => break,
            }
            p += 1;
        }
        match self.bytes.get(p) {
            None => {
                self.pos = p;
                return false;
            }
            Some(b'\n') => {
                self.pos = p + 1;
                return false;
            }
            Some(b'#') => {
                self.pos = p;
                self.skip_comment();
                if self.peek() == Some(b'\n') {
                    self.pos += 1;
                }
                return false;
            }
            _ => {}
        }
        self.pos = p;
        self.at_line_start = false;
        let current = *self.indents.last().unwrap();
        if width > current {
            self.indents.push(width);
            self.out.push(Token {
                kind: TokKind::Indent,
                text: String::new(),
                offset: p,
            });
        } else {
            while width < *self.indents.last().unwrap() {
                self.indents.pop();
                self.out.push(Token {
                    kind: TokKind::Dedent,
                    text: String::new(),
                    offset: p,
                });
            }
            // Inconsistent dedent; snap to the enclosing level.
            if width > *self.indents.last().unwrap() {
                self.indents.push(width);
            }
        }
        true
    }

    fn skip_comment(&mut self) {
        while let Some(c) = self.peek() {
            if c == b'\n' {
                break;
            }
            self.pos += 1;
        }
    }

    fn number(&mut self) {
        let start = self.pos;
        let b = self.bytes;
        if b[self.pos] == b'0' && matches!(b.get(self.pos + 1), Some(b'x' | b'X' | b'o' | b'O' | b'b' | b'B')) {
            self.pos += 2;
            while matches!(self.peek(), Some(c) if c.is_ascii_hexdigit() || c == b'_') {
                self.pos += 1;
            }
        } else {
            while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'_' || c == b'.') {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b'e' | b'E')) {
                let save = self.pos;
                self.pos += 1;
                if matches!(self.peek(), Some(b'+' | b'-')) {
                    self.pos += 1;
                }
                if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'_') {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                }
            }
        }
        if matches!(self.peek(), Some(b'j' | b'J')) {
            self.pos += 1;
        }
        self.push(TokKind::Number, start, self.pos);
    }

    fn string(&mut self, start: usize) -> Result<(), CodeError> {
        let quote = self.bytes[self.pos];
        let triple = self.bytes.get(self.pos + 1) == Some(&quote) && self.bytes.get(self.pos + 2) == Some(&quote);
        self.pos += if triple { 3 } else { 1 };
        loop {
            match self.peek() {
                None => {
                    if self.lenient {
                        self.push(TokKind::Str, start, self.pos);
                        return Ok(());
                    }
                    return Err(CodeError::Lex {
                        offset: start,
                        message: "unterminated string".into(),
                    });
                }
                Some(b'\\') => self.pos += 2.min(self.bytes.len() - self.pos),
                Some(b'\n') if !triple => {
                    if self.lenient {
                        self.push(TokKind::Str, start, self.pos);
                        return Ok(());
                    }
                    return Err(CodeError::Lex {
                        offset: start,
                        message: "unterminated string".into(),
                    });
                }
                Some(c) if c == quote => {
                    if !triple {
                        self.pos += 1;
                        break;
                    }
                    if self.bytes.get(self.pos + 1) == Some(&quote) && self.bytes.get(self.pos + 2) == Some(&quote) {
                        self.pos += 3;
                        break;
                    }
                    self.pos += 1;
                }
                Some(_) => self.pos += 1,
            }
        }
        self.push(TokKind::Str, start, self.pos);
        Ok(())
    }

    fn op(&mut self) {
        let start = self.pos;
        let rest = &self.src[start..];
        let len = OPS
            .iter()
            .find(|op| rest.starts_with(**op))
            .map(|op| op.len())
            .unwrap_or_else(|| rest.chars().next().map(char::len_utf8).unwrap_or(1));
        match &rest[..len] {
            "(" | "[" | "{" => self.depth += 1,
            ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
            _ => {}
        }
        self.pos += len;
        self.push(TokKind::Op, start, self.pos);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokKind, String)> {
        lex(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn simple_assignment() {
        let toks = kinds("x = 1");
        assert_eq!(
            toks,
            vec![
                (TokKind::Name, "x".into()),
                (TokKind::Op, "=".into()),
                (TokKind::Number, "1".into()),
                (TokKind::Newline, "".into()),
                (TokKind::Eof, "".into()),
            ]
        );
    }

    #[test]
    fn brackets_join_lines() {
        let toks = lex("f(a,\n  b)\ny").unwrap();
        let newlines = toks.iter().filter(|t| t.kind == TokKind::Newline).count();
        assert_eq!(newlines, 2);
        assert!(toks.iter().all(|t| t.kind != TokKind::Indent));
    }

    #[test]
    fn indentation() {
        let toks = lex("def f(x):\n    return x\nf(1)").unwrap();
        let k: Vec<_> = toks.iter().map(|t| t.kind).collect();
        assert!(k.contains(&TokKind::Indent));
        assert!(k.contains(&TokKind::Dedent));
    }

    #[test]
    fn strings_and_prefixes() {
        let toks = kinds("f'a{b}' + r\"\\d\" + '''x\ny'''");
        let strs: Vec<_> = toks.iter().filter(|(k, _)| *k == TokKind::Str).collect();
        assert_eq!(strs.len(), 3);
    }

    #[test]
    fn unterminated_string() {
        assert!(matches!(lex("x = 'abc"), Err(CodeError::Lex { .. })));
        let toks = lex_lenient("x = 'abc");
        assert_eq!(toks[2].kind, TokKind::Str);
    }

    #[test]
    fn numbers() {
        let toks = kinds("0.0005 1e-3 0x1F 10_000 .5 3j");
        let nums = toks.iter().filter(|(k, _)| *k == TokKind::Number).count();
        assert_eq!(nums, 6);
    }

    #[test]
    fn comments_dropped() {
        let toks = kinds("# header\nx = 1  # trailing\n");
        assert!(toks.iter().all(|(_, t)| !t.contains("header") && !t.contains("trailing")));
    }
}

//! API-documentation retrieval: match call names, imported libraries and
//! subscript shapes against a curated knowledge base.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::lexer::{lex_lenient, TokKind};
use crate::code::{clean_source, parse_ast, AstNode, NodeKind};

pub const DEFAULT_MAX_ITEMS: usize = 4;

/// The knowledge base shipped with the crate.
pub const SEED_KB: &str = include_str!("../../../kb/seed.jsonl");

#[derive(Debug, Error)]
pub enum KbError {
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: duplicate match key {key}")]
    DuplicateKey { line: usize, key: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatchKey {
    CallName(String),
    LibraryImport(String),
    /// A subscript whose index contains a slice, `x[a:b]`.
    SliceSubscript,
    /// A subscript indexed by a list display, `df[['a', 'b']]`.
    ListSubscript,
}

impl MatchKey {
    pub fn kind(&self) -> &'static str {
        match self {
            MatchKey::CallName(_) => "call_name",
            MatchKey::LibraryImport(_) => "library_import",
            MatchKey::SliceSubscript => "slice_subscript",
            MatchKey::ListSubscript => "list_subscript",
        }
    }

    pub fn value(&self) -> Option<&str> {
        match self {
            MatchKey::CallName(v) | MatchKey::LibraryImport(v) => Some(v),
            _ => None,
        }
    }

    pub fn from_parts(kind: &str, value: Option<&str>) -> Result<Self, String> {
        let need = |v: Option<&str>| match v {
            Some(s) if !s.trim().is_empty() => Ok(s.trim().to_string()),
            _ => Err(format!("{kind} requires a match_key_value")),
        };
        match kind {
            "call_name" => Ok(MatchKey::CallName(need(value)?)),
            "library_import" => Ok(MatchKey::LibraryImport(need(value)?)),
            "slice_subscript" => Ok(MatchKey::SliceSubscript),
            "list_subscript" => Ok(MatchKey::ListSubscript),
            other => Err(format!("unknown match_key_kind {other:?}")),
        }
    }
}

impl std::fmt::Display for MatchKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{}({v})", self.kind()),
            None => f.write_str(self.kind()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiRecord {
    pub library: String,
    pub qualified_name: String,
    pub match_key_kind: String,
    #[serde(default)]
    pub match_key_value: Option<String>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiEntry {
    pub library: String,
    pub qualified_name: String,
    pub match_key: MatchKey,
    pub description: String,
}

impl ApiEntry {
    pub fn from_record(r: ApiRecord) -> Result<Self, String> {
        let description = r.description.trim().to_string();
        if description.is_empty() {
            return Err("empty description".into());
        }
        if r.library.trim().is_empty() || r.qualified_name.trim().is_empty() {
            return Err("empty library or qualified_name".into());
        }
        Ok(ApiEntry {
            match_key: MatchKey::from_parts(&r.match_key_kind, r.match_key_value.as_deref())?,
            library: r.library.trim().to_string(),
            qualified_name: r.qualified_name.trim().to_string(),
            description,
        })
    }

    /// A call-name entry keyed on the last segment of `qualified_name`, or a
    /// library entry when the qualified name is the library itself.
    pub fn from_qualified(library: &str, qualified_name: &str, description: &str) -> Result<Self, String> {
        let qn = qualified_name.trim();
        let (kind, value) = if qn == library.trim() {
            ("library_import", qn)
        } else {
            ("call_name", qn.rsplit('.').next().unwrap_or(qn))
        };
        ApiEntry::from_record(ApiRecord {
            library: library.into(),
            qualified_name: qn.into(),
            match_key_kind: kind.into(),
            match_key_value: Some(value.into()),
            description: description.into(),
        })
    }

    pub fn to_record(&self) -> ApiRecord {
        ApiRecord {
            library: self.library.clone(),
            qualified_name: self.qualified_name.clone(),
            match_key_kind: self.match_key.kind().into(),
            match_key_value: self.match_key.value().map(String::from),
            description: self.description.clone(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    entries: Vec<ApiEntry>,
    index: HashMap<MatchKey, usize>,
}

impl KnowledgeBase {
    pub fn from_entries(entries: Vec<ApiEntry>) -> Result<Self, KbError> {
        let mut index = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.match_key.clone(), i).is_some() {
                return Err(KbError::DuplicateKey {
                    line: i + 1,
                    key: e.match_key.to_string(),
                });
            }
        }
        Ok(KnowledgeBase { entries, index })
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, KbError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| KbError::MalformedRecord { line: i + 1, message };
            let rec: ApiRecord = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
            entries.push(ApiEntry::from_record(rec).map_err(malformed)?);
        }
        KnowledgeBase::from_entries(entries)
    }

    pub fn seed() -> Self {
        KnowledgeBase::parse_jsonl(SEED_KB).expect("seed knowledge base is valid")
    }

    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(&e.to_record()).expect("record serializes") + "\n")
            .collect()
    }

    pub fn entries(&self) -> &[ApiEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn lookup(&self, key: &MatchKey) -> Option<(usize, &ApiEntry)> {
        self.index.get(key).map(|&i| (i, &self.entries[i]))
    }

    pub fn get(&self, key: &MatchKey) -> Option<&ApiEntry> {
        self.lookup(key).map(|(_, e)| e)
    }
}

pub fn load_kb(path: &Path) -> Result<KnowledgeBase, KbError> {
    KnowledgeBase::parse_jsonl(&std::fs::read_to_string(path)?)
}

fn top_level(module: &str) -> Option<String> {
    let m = module.trim_start_matches('.');
    m.split('.').next().filter(|s| !s.is_empty()).map(String::from)
}

fn index_shape(index: &AstNode) -> Option<MatchKey> {
    match index.kind {
        NodeKind::Slice => Some(MatchKey::SliceSubscript),
        NodeKind::Tuple if index.children.iter().any(|c| c.kind == NodeKind::Slice) => Some(MatchKey::SliceSubscript),
        NodeKind::List => Some(MatchKey::ListSubscript),
        _ => None,
    }
}

/// Mentions with the byte offset they were found at.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Mentions {
    import_only: bool,
    keys: Vec<(usize, MatchKey)>,
}

fn mentions_from_ast(root: &AstNode) -> Mentions {
    let import_only =
        !root.children.is_empty() && root.children.iter().all(|s| matches!(s.kind, NodeKind::Import | NodeKind::ImportFrom));
    let mut keys = Vec::new();
    if import_only {
        for stmt in &root.children {
            match stmt.kind {
                NodeKind::Import => {
                    for n in &stmt.children {
                        if let Some(lib) = n.value.as_deref().and_then(top_level) {
                            keys.push((n.offset, MatchKey::LibraryImport(lib)));
                        }
                    }
                }
                _ => {
                    if let Some(lib) = stmt.value.as_deref().and_then(top_level) {
                        keys.push((stmt.offset, MatchKey::LibraryImport(lib)));
                    }
                }
            }
        }
    } else {
        for n in root.walk() {
            match n.kind {
                NodeKind::Call => {
                    if let Some(name) = n.callee_name() {
                        keys.push((n.offset, MatchKey::CallName(name.to_string())));
                    }
                }
                NodeKind::Subscript => {
                    if let Some(k) = n.children.get(1).and_then(index_shape) {
                        keys.push((n.offset, k));
                    }
                }
                _ => {}
            }
        }
    }
    Mentions { import_only, keys }
}

/// Token-level scan for sources the parser does not accept.
fn mentions_from_tokens(source: &str) -> Mentions {
    let toks: Vec<_> = lex_lenient(source)
        .into_iter()
        .filter(|t| !matches!(t.kind, TokKind::Indent | TokKind::Dedent))
        .collect();
    let stmts: Vec<&[crate::code::lexer::Token]> = toks
        .split(|t| t.kind == TokKind::Newline || t.kind == TokKind::Eof)
        .filter(|s| !s.is_empty())
        .collect();
    let is_import = |s: &&[crate::code::lexer::Token]| s[0].kind == TokKind::Name && (s[0].text == "import" || s[0].text == "from");
    let import_only = !stmts.is_empty() && stmts.iter().all(is_import);
    let mut keys = Vec::new();
    if import_only {
        for s in &stmts {
            if s[0].text == "from" {
                if let Some(t) = s.get(1).filter(|t| t.kind == TokKind::Name) {
                    keys.push((t.offset, MatchKey::LibraryImport(t.text.clone())));
                }
            } else {
                let mut expect_name = true;
                let mut after_as = false;
                for t in &s[1..] {
                    match (t.kind, t.text.as_str()) {
                        (TokKind::Name, "as") => after_as = true,
                        (TokKind::Name, _) if expect_name && !after_as => {
                            keys.push((t.offset, MatchKey::LibraryImport(t.text.clone())));
                            expect_name = false;
                        }
                        (TokKind::Op, ",") => {
                            expect_name = true;
                            after_as = false;
                        }
                        (TokKind::Op, ".") => {}
                        _ => expect_name = false,
                    }
                }
            }
        }
        return Mentions { import_only, keys };
    }
    for (i, t) in toks.iter().enumerate() {
        let next = toks.get(i + 1);
        if t.kind == TokKind::Name && next.is_some_and(|n| n.kind == TokKind::Op && n.text == "(") {
            keys.push((t.offset, MatchKey::CallName(t.text.clone())));
        }
        let subscriptable = |k: TokKind, text: &str| k == TokKind::Name || (k == TokKind::Op && (text == ")" || text == "]"));
        if t.kind == TokKind::Op && t.text == "[" && i > 0 && subscriptable(toks[i - 1].kind, &toks[i - 1].text) {
            if next.is_some_and(|n| n.text == "[") {
                keys.push((t.offset, MatchKey::ListSubscript));
                continue;
            }
            let mut depth = 0usize;
            for u in &toks[i + 1..] {
                match u.text.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "}" => depth = depth.saturating_sub(1),
                    "]" if depth == 0 => break,
                    "]" => depth -= 1,
                    ":" if depth == 0 && u.kind == TokKind::Op => {
                        keys.push((t.offset, MatchKey::SliceSubscript));
                        break;
                    }
                    _ => {}
                }
            }
        }
    }
    Mentions { import_only, keys }
}

fn collect_mentions(source: &str) -> Mentions {
    let cleaned = clean_source(source);
    let mut m = match parse_ast(&cleaned) {
        Ok(root) => mentions_from_ast(&root),
        Err(_) => mentions_from_tokens(&cleaned),
    };
    m.keys.sort_by_key(|(offset, _)| *offset);
    let mut seen = std::collections::HashSet::new();
    m.keys.retain(|(_, k)| seen.insert(k.clone()));
    m
}

/// Match keys in order of first occurrence, duplicates collapsed.
pub fn extract_api_mentions(source: &str) -> Vec<MatchKey> {
    collect_mentions(source).keys.into_iter().map(|(_, k)| k).collect()
}

/// Knowledge-base entries matched by `source`, in presentation order.
///
/// Library blurbs for an import-only cell follow knowledge-base order. Call
/// and subscript hits follow source order and are restricted to the library
/// of the first hit.
pub fn query_hits<'a>(kb: &'a KnowledgeBase, source: &str) -> Vec<&'a ApiEntry> {
    let mentions = collect_mentions(source);
    let mut hits: Vec<(usize, &ApiEntry)> = mentions.keys.iter().filter_map(|(_, k)| kb.lookup(k)).collect();
    if mentions.import_only {
        hits.sort_by_key(|(i, _)| *i);
    } else if let Some(lib) = hits.first().map(|(_, e)| e.library.clone()) {
        hits.retain(|(_, e)| e.library == lib);
    }
    hits.into_iter().map(|(_, e)| e).collect()
}

fn ends_with_terminal(s: &str) -> bool {
    s.ends_with(['.', '!', '?'])
}

pub fn query_candidate(kb: &KnowledgeBase, source: &str, max_items: usize) -> Option<String> {
    let mut descriptions: Vec<&str> = Vec::new();
    for e in query_hits(kb, source) {
        if !descriptions.contains(&e.description.as_str()) {
            descriptions.push(&e.description);
        }
    }
    descriptions.truncate(max_items);
    if descriptions.is_empty() {
        return None;
    }
    let mut text = descriptions.join("; ");
    if descriptions.len() > 1 && !ends_with_terminal(&text) {
        text.push('.');
    }
    Some(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(s: &str) -> MatchKey {
        MatchKey::CallName(s.into())
    }

    #[test]
    fn seed_loads() {
        let kb = KnowledgeBase::seed();
        assert!(kb.len() >= 25);
        assert_eq!(KnowledgeBase::parse_jsonl(&kb.to_jsonl()).unwrap().entries(), kb.entries());
    }

    #[test]
    fn mentions() {
        assert_eq!(
            extract_api_mentions("import pandas as pd\nimport numpy as np\nfrom sklearn.linear_model import LassoCV"),
            vec![
                MatchKey::LibraryImport("pandas".into()),
                MatchKey::LibraryImport("numpy".into()),
                MatchKey::LibraryImport("sklearn".into())
            ]
        );
        assert_eq!(
            extract_api_mentions("train = pd.read_csv('train.csv')\ntest = pd.read_csv('test.csv')"),
            vec![call("read_csv")]
        );
        assert_eq!(extract_api_mentions("X_train = all_data[:train.shape[0]]"), vec![MatchKey::SliceSubscript]);
        assert_eq!(extract_api_mentions("m = LassoCV(alphas=[1]).fit(X, y)"), vec![call("LassoCV"), call("fit")]);
    }

    #[test]
    fn token_fallback_matches_parser_on_simple_cells() {
        for src in [
            "import pandas as pd, numpy\nfrom sklearn.linear_model import LassoCV",
            "train = pd.read_csv('a')\ntrain.head()",
            "x = df[['a', 'b']]\ny = s[1:3]",
        ] {
            let cleaned = clean_source(src);
            let keys = |m: Mentions| m.keys.into_iter().map(|(_, k)| k).collect::<Vec<_>>();
            let a = keys(mentions_from_ast(&parse_ast(&cleaned).unwrap()));
            let b = keys(mentions_from_tokens(&cleaned));
            assert_eq!(a, b, "{src}");
        }
    }

    #[test]
    fn fallback_on_unsupported_syntax() {
        assert_eq!(
            extract_api_mentions("while True:\n    df.head()"),
            vec![call("head")]
        );
    }

    #[test]
    fn candidates() {
        let kb = KnowledgeBase::seed();
        assert_eq!(query_candidate(&kb, "train.head()", 4).as_deref(), Some("Return the first 5 rows"));
        assert_eq!(
            query_candidate(&kb, "train = pd.read_csv('train.csv')\ntrain.head()", 4).as_deref(),
            Some("Read a comma-separated values (csv) file into DataFrame; Return the first 5 rows.")
        );
        assert_eq!(query_candidate(&kb, "z = my_custom_fn(q)", 4), None);
        assert_eq!(query_candidate(&kb, "train.head()", 0), None);
        assert_eq!(query_candidate(&KnowledgeBase::default(), "train.head()", 4), None);
    }

    #[test]
    fn kb_errors() {
        let line = r#"{"library":"pandas","qualified_name":"pandas.read_csv","match_key_kind":"call_name","match_key_value":"read_csv","description":"Read"}"#;
        assert!(matches!(
            KnowledgeBase::parse_jsonl(&format!("{line}\n{line}\n")),
            Err(KbError::DuplicateKey { line: 2, .. })
        ));
        assert!(matches!(KnowledgeBase::parse_jsonl("{nope"), Err(KbError::MalformedRecord { line: 1, .. })));
        let empty_desc = line.replace("\"Read\"", "\" \"");
        assert!(matches!(KnowledgeBase::parse_jsonl(&empty_desc), Err(KbError::MalformedRecord { .. })));
        assert!(KnowledgeBase::parse_jsonl("").unwrap().is_empty());
    }

    #[test]
    fn qualified_entries() {
        let e = ApiEntry::from_qualified("pandas", "pandas.DataFrame.merge", "Merge").unwrap();
        assert_eq!(e.match_key, call("merge"));
        let l = ApiEntry::from_qualified("numpy", "numpy", "NumPy").unwrap();
        assert_eq!(l.match_key, MatchKey::LibraryImport("numpy".into()));
    }
}

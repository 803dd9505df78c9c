use serde::{Deserialize, Serialize};

use super::{clean_source, parse_ast, split_identifier, tokenize_code_lenient, AstNode, NodeKind};

pub const DEFAULT_T_MAX: usize = 100;
pub const DEFAULT_A_MAX: usize = 200;

/// Token sequence, AST node-token sequence and parent->child edges for one
/// code cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeGraph {
    pub code_tokens: Vec<String>,
    pub ast_tokens: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    pub degraded: bool,
}

impl CodeGraph {
    pub fn token_only(code_tokens: Vec<String>) -> Self {
        CodeGraph {
            code_tokens,
            ast_tokens: Vec::new(),
            edges: Vec::new(),
            degraded: true,
        }
    }
}

fn value_tokens(node: &AstNode) -> Vec<String> {
    let Some(v) = node.value.as_deref() else {
        return Vec::new();
    };
    let is_ident = v.chars().next().is_some_and(|c| c == '_' || c.is_alphabetic());
    if node.kind == NodeKind::Constant || !is_ident {
        vec![v.to_lowercase()]
    } else {
        split_identifier(v)
    }
}

struct Emitter {
    tokens: Vec<String>,
    edges: Vec<(usize, usize)>,
    cap: usize,
    exhausted: bool,
}

impl Emitter {
    /// Pre-order emission. Leaves expand into their value sub-tokens, each a
    /// child of `parent`; structural nodes emit their kind name followed by
    /// any value sub-tokens as their own children. A node whose expansion
    /// does not fit is dropped together with everything after it.
    fn emit(&mut self, node: &AstNode, parent: Option<usize>) {
        if self.exhausted {
            return;
        }
        if node.kind.is_leaf() {
            let subs = value_tokens(node);
            if self.tokens.len() + subs.len() > self.cap || parent.is_none() {
                self.exhausted = true;
                return;
            }
            let parent = parent.unwrap();
            for s in subs {
                self.edges.push((parent, self.tokens.len()));
                self.tokens.push(s);
            }
            return;
        }
        let subs = value_tokens(node);
        if self.tokens.len() + 1 + subs.len() > self.cap {
            self.exhausted = true;
            return;
        }
        let me = self.tokens.len();
        if let Some(p) = parent {
            self.edges.push((p, me));
        }
        self.tokens.push(node.kind.as_str().to_string());
        for s in subs {
            self.edges.push((me, self.tokens.len()));
            self.tokens.push(s);
        }
        for child in &node.children {
            self.emit(child, Some(me));
        }
    }
}

pub fn graph_from_ast(root: &AstNode, a_max: usize) -> (Vec<String>, Vec<(usize, usize)>) {
    let mut e = Emitter {
        tokens: Vec::new(),
        edges: Vec::new(),
        cap: a_max,
        exhausted: false,
    };
    e.emit(root, None);
    (e.tokens, e.edges)
}

/// Clean, tokenize and parse one code cell. Never fails: if the subset parser
/// rejects the cell the graph is marked degraded and only code tokens remain.
pub fn build_code_graph(source: &str, t_max: usize, a_max: usize) -> CodeGraph {
    let cleaned = clean_source(source);
    let mut code_tokens = tokenize_code_lenient(&cleaned);
    code_tokens.truncate(t_max);
    match parse_ast(&cleaned) {
        Ok(root) => {
            let (ast_tokens, edges) = graph_from_ast(&root, a_max);
            CodeGraph {
                code_tokens,
                ast_tokens,
                edges,
                degraded: false,
            }
        }
        Err(_) => CodeGraph::token_only(code_tokens),
    }
}

//! Recursive-descent parser for a Python statement/expression subset.
//!
//! The node set mirrors the shapes produced by Python's own `ast` module for
//! the constructs it covers, flattened into one generic node type.

use super::lexer::{self, TokKind, Token};
use super::{CodeError, NUM_TOKEN, STR_TOKEN};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Module,
    Assign,
    Call,
    Attribute,
    Name,
    Constant,
    Import,
    ImportFrom,
    FunctionDef,
    Return,
    For,
    If,
    BinOp,
    UnaryOp,
    Subscript,
    Slice,
    List,
    Tuple,
    Keyword,
    Lambda,
    ExprStmt,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Module => "module",
            NodeKind::Assign => "assign",
            NodeKind::Call => "call",
            NodeKind::Attribute => "attribute",
            NodeKind::Name => "name",
            NodeKind::Constant => "constant",
            NodeKind::Import => "import",
            NodeKind::ImportFrom => "import_from",
            NodeKind::FunctionDef => "function_def",
            NodeKind::Return => "return",
            NodeKind::For => "for",
            NodeKind::If => "if",
            NodeKind::BinOp => "binop",
            NodeKind::UnaryOp => "unaryop",
            NodeKind::Subscript => "subscript",
            NodeKind::Slice => "slice",
            NodeKind::List => "list",
            NodeKind::Tuple => "tuple",
            NodeKind::Keyword => "keyword",
            NodeKind::Lambda => "lambda",
            NodeKind::ExprStmt => "expr_stmt",
        }
    }

    pub fn is_leaf(self) -> bool {
        matches!(self, NodeKind::Name | NodeKind::Constant)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AstNode {
    pub kind: NodeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<AstNode>,
    /// Byte offset of the token that names this node (attribute name for
    /// attributes, callee name for calls, `[` for subscripts).
    #[serde(skip)]
    pub offset: usize,
}

impl AstNode {
    fn new(kind: NodeKind, value: Option<String>, children: Vec<AstNode>, offset: usize) -> Self {
        AstNode {
            kind,
            value,
            children,
            offset,
        }
    }

    fn leaf(kind: NodeKind, value: impl Into<String>, offset: usize) -> Self {
        AstNode::new(kind, Some(value.into()), Vec::new(), offset)
    }

    /// Pre-order walk.
    pub fn walk(&self) -> Vec<&AstNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    /// Terminal callee name of a call node: `pd.read_csv(...)` -> `read_csv`.
    pub fn callee_name(&self) -> Option<&str> {
        if self.kind != NodeKind::Call {
            return None;
        }
        let func = self.children.first()?;
        match func.kind {
            NodeKind::Name | NodeKind::Attribute => func.value.as_deref(),
            _ => None,
        }
    }

    /// Compact s-expression rendering, used in tests and the demo page.
    pub fn to_sexpr(&self) -> String {
        let head = match &self.value {
            Some(v) => format!("{}({})", self.kind.as_str(), v),
            None => self.kind.as_str().to_string(),
        };
        if self.children.is_empty() {
            head
        } else {
            let kids: Vec<String> = self.children.iter().map(AstNode::to_sexpr).collect();
            format!("{head}[{}]", kids.join(", "))
        }
    }
}

type PResult<T> = Result<T, CodeError>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "async", "await", "class", "while", "with", "try", "except", "finally", "global", "nonlocal", "del", "assert",
    "raise", "yield", "match",
];

/// Parse cleaned source into a `module` node.
pub fn parse_ast(source: &str) -> PResult<AstNode> {
    let toks = lexer::lex(source)?;
    let mut p = Parser { toks, pos: 0 };
    let mut body = Vec::new();
    while !p.at_kind(TokKind::Eof) {
        if p.at_kind(TokKind::Newline) {
            p.pos += 1;
            continue;
        }
        if p.at_kind(TokKind::Indent) {
            return Err(p.parse_err("unexpected indent"));
        }
        body.extend(p.statement()?);
    }
    Ok(AstNode::new(NodeKind::Module, None, body, 0))
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_at(&self, ahead: usize) -> &Token {
        &self.toks[(self.pos + ahead).min(self.toks.len() - 1)]
    }

    fn at_kind(&self, kind: TokKind) -> bool {
        self.peek().kind == kind
    }

    fn at_op(&self, op: &str) -> bool {
        let t = self.peek();
        t.kind == TokKind::Op && t.text == op
    }

    fn at_kw(&self, kw: &str) -> bool {
        let t = self.peek();
        t.kind == TokKind::Name && t.text == kw
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<Token> {
        if self.at_op(op) {
            Ok(self.bump())
        } else {
            Err(self.parse_err(&format!("expected `{op}`")))
        }
    }

    fn expect_name(&mut self) -> PResult<Token> {
        if self.at_kind(TokKind::Name) && !is_keyword(&self.peek().text) {
            Ok(self.bump())
        } else {
            Err(self.parse_err("expected identifier"))
        }
    }

    fn parse_err(&self, message: &str) -> CodeError {
        let t = self.peek();
        let found = if t.kind == TokKind::Eof { "end of input".to_string() } else { format!("`{}`", t.text) };
        CodeError::Parse {
            offset: t.offset,
            message: format!("{message}, found {found}"),
        }
    }

    fn unsupported(&self, construct: &str) -> CodeError {
        CodeError::UnsupportedSyntax {
            offset: self.peek().offset,
            construct: construct.to_string(),
        }
    }

    fn end_of_simple(&mut self) -> PResult<()> {
        if self.at_kind(TokKind::Newline) {
            self.pos += 1;
            Ok(())
        } else if self.at_kind(TokKind::Eof) || self.at_kind(TokKind::Dedent) {
            Ok(())
        } else {
            Err(self.parse_err("expected end of statement"))
        }
    }

    /// One logical line (possibly several `;`-separated simple statements) or
    /// one compound statement.
    fn statement(&mut self) -> PResult<Vec<AstNode>> {
        let t = self.peek().clone();
        if t.kind == TokKind::Name {
            if UNSUPPORTED_KEYWORDS.contains(&t.text.as_str()) {
                return Err(self.unsupported(&t.text));
            }
            match t.text.as_str() {
                "def" => return Ok(vec![self.function_def()?]),
                "for" => return Ok(vec![self.for_stmt()?]),
                "if" => return Ok(vec![self.if_stmt()?]),
                _ => {}
            }
        }
        if t.kind == TokKind::Op && t.text == "@" {
            return Err(self.unsupported("decorator"));
        }
        let mut out = vec![self.simple_statement()?];
        while self.eat_op(";") {
            if self.at_kind(TokKind::Newline) || self.at_kind(TokKind::Eof) {
                break;
            }
            out.push(self.simple_statement()?);
        }
        self.end_of_simple()?;
        Ok(out)
    }

    fn suite(&mut self) -> PResult<Vec<AstNode>> {
        self.expect_op(":")?;
        if self.at_kind(TokKind::Newline) {
            self.pos += 1;
            if !self.at_kind(TokKind::Indent) {
                return Err(self.parse_err("expected an indented block"));
            }
            self.pos += 1;
            let mut body = Vec::new();
            while !self.at_kind(TokKind::Dedent) && !self.at_kind(TokKind::Eof) {
                if self.at_kind(TokKind::Newline) {
                    self.pos += 1;
                    continue;
                }
                body.extend(self.statement()?);
            }
            if self.at_kind(TokKind::Dedent) {
                self.pos += 1;
            }
            Ok(body)
        } else {
            self.statement()
        }
    }

    fn function_def(&mut self) -> PResult<AstNode> {
        let kw = self.bump();
        let name = self.expect_name()?;
        self.expect_op("(")?;
        let mut children = self.params(")")?;
        self.expect_op(")")?;
        if self.eat_op("->") {
            self.expr()?;
        }
        children.extend(self.suite()?);
        Ok(AstNode::new(NodeKind::FunctionDef, Some(name.text), children, kw.offset))
    }

    /// Parameter list for `def` (terminated by `)`) or `lambda` (by `:`).
    fn params(&mut self, close: &str) -> PResult<Vec<AstNode>> {
        let mut out = Vec::new();
        while !self.at_op(close) {
            if self.eat_op("*") || self.eat_op("**") {
                if self.at_op(",") || self.at_op(close) {
                    // bare `*` separator
                } else {
                    let n = self.expect_name()?;
                    out.push(AstNode::leaf(NodeKind::Name, n.text, n.offset));
                }
            } else if self.eat_op("/") {
            } else {
                let n = self.expect_name()?;
                if close == ")" && self.eat_op(":") {
                    self.expr()?;
                }
                if self.eat_op("=") {
                    let default = self.expr()?;
                    out.push(AstNode::new(NodeKind::Keyword, Some(n.text), vec![default], n.offset));
                } else {
                    out.push(AstNode::leaf(NodeKind::Name, n.text, n.offset));
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(out)
    }

    fn for_stmt(&mut self) -> PResult<AstNode> {
        let kw = self.bump();
        let target = self.target_list()?;
        if !self.eat_kw("in") {
            return Err(self.parse_err("expected `in`"));
        }
        let iter = self.expr_list()?;
        let mut children = vec![target, iter];
        children.extend(self.suite()?);
        if self.at_kw("else") {
            return Err(self.unsupported("for-else"));
        }
        Ok(AstNode::new(NodeKind::For, None, children, kw.offset))
    }

    fn if_stmt(&mut self) -> PResult<AstNode> {
        let kw = self.bump();
        let test = self.named_expr()?;
        let mut children = vec![test];
        children.extend(self.suite()?);
        if self.at_kw("elif") {
            children.push(self.if_stmt()?);
        } else if self.eat_kw("else") {
            children.extend(self.suite()?);
        }
        Ok(AstNode::new(NodeKind::If, None, children, kw.offset))
    }

    fn dotted_name(&mut self) -> PResult<(String, usize)> {
        let first = self.expect_name()?;
        let mut name = first.text;
        while self.eat_op(".") {
            name.push('.');
            name.push_str(&self.expect_name()?.text);
        }
        Ok((name, first.offset))
    }

    fn simple_statement(&mut self) -> PResult<AstNode> {
        let t = self.peek().clone();
        if t.kind == TokKind::Name {
            match t.text.as_str() {
                "import" => {
                    self.bump();
                    let mut names = Vec::new();
                    loop {
                        let (name, offset) = self.dotted_name()?;
                        if self.eat_kw("as") {
                            self.expect_name()?;
                        }
                        names.push(AstNode::leaf(NodeKind::Name, name, offset));
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    return Ok(AstNode::new(NodeKind::Import, None, names, t.offset));
                }
                "from" => {
                    self.bump();
                    let mut module = String::new();
                    while self.at_op(".") || self.at_op("...") {
                        module.push_str(&self.bump().text);
                    }
                    if !self.at_kw("import") {
                        module.push_str(&self.dotted_name()?.0);
                    }
                    if !self.eat_kw("import") {
                        return Err(self.parse_err("expected `import`"));
                    }
                    let mut names = Vec::new();
                    if self.at_op("*") {
                        let star = self.bump();
                        names.push(AstNode::leaf(NodeKind::Name, "*", star.offset));
                    } else {
                        let paren = self.eat_op("(");
                        loop {
                            if paren && self.at_op(")") {
                                break;
                            }
                            let n = self.expect_name()?;
                            if self.eat_kw("as") {
                                self.expect_name()?;
                            }
                            names.push(AstNode::leaf(NodeKind::Name, n.text, n.offset));
                            if !self.eat_op(",") {
                                break;
                            }
                        }
                        if paren {
                            self.expect_op(")")?;
                        }
                    }
                    return Ok(AstNode::new(NodeKind::ImportFrom, Some(module), names, t.offset));
                }
                "return" => {
                    self.bump();
                    let mut children = Vec::new();
                    if !self.at_kind(TokKind::Newline) && !self.at_kind(TokKind::Eof) && !self.at_op(";") {
                        children.push(self.expr_list()?);
                    }
                    return Ok(AstNode::new(NodeKind::Return, None, children, t.offset));
                }
                "pass" | "break" | "continue" => {
                    self.bump();
                    return Ok(AstNode::new(NodeKind::ExprStmt, None, Vec::new(), t.offset));
                }
                _ => {}
            }
        }

        let first = self.expr_list()?;
        if self.at_op("=") {
            let mut parts = vec![first];
            while self.eat_op("=") {
                parts.push(self.expr_list()?);
            }
            for target in &parts[..parts.len() - 1] {
                check_target(target).map_err(|_| CodeError::Parse {
                    offset: target.offset,
                    message: "cannot assign to expression".into(),
                })?;
            }
            return Ok(AstNode::new(NodeKind::Assign, None, parts, t.offset));
        }
        let aug = self.peek().clone();
        if aug.kind == TokKind::Op && aug.text.len() >= 2 && aug.text.ends_with('=') && !matches!(aug.text.as_str(), "==" | "<=" | ">=" | "!=") {
            self.bump();
            let value = self.expr_list()?;
            return Ok(AstNode::new(NodeKind::Assign, Some(aug.text), vec![first, value], t.offset));
        }
        if self.at_op(":") {
            return Err(self.unsupported("annotated assignment"));
        }
        Ok(AstNode::new(NodeKind::ExprStmt, None, vec![first], t.offset))
    }

    fn target_list(&mut self) -> PResult<AstNode> {
        let start = self.peek().offset;
        let mut items = vec![self.or_expr()?];
        let mut tuple = false;
        while self.eat_op(",") {
            tuple = true;
            if self.at_kw("in") {
                break;
            }
            items.push(self.or_expr()?);
        }
        let node = if tuple { AstNode::new(NodeKind::Tuple, None, items, start) } else { items.pop().unwrap() };
        check_target(&node).map_err(|_| CodeError::Parse {
            offset: start,
            message: "invalid loop target".into(),
        })?;
        Ok(node)
    }

    /// Comma-separated expressions; more than one becomes a tuple.
    fn expr_list(&mut self) -> PResult<AstNode> {
        let start = self.peek().offset;
        let first = self.star_or_expr()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.ends_expr_list() {
                break;
            }
            items.push(self.star_or_expr()?);
        }
        Ok(AstNode::new(NodeKind::Tuple, None, items, start))
    }

    fn ends_expr_list(&self) -> bool {
        let t = self.peek();
        matches!(t.kind, TokKind::Newline | TokKind::Eof | TokKind::Dedent)
            || (t.kind == TokKind::Op && matches!(t.text.as_str(), "=" | ")" | "]" | "}" | ";" | ":"))
            || (t.kind == TokKind::Op && t.text.len() >= 2 && t.text.ends_with('=') && !matches!(t.text.as_str(), "==" | "<=" | ">=" | "!="))
    }

    fn star_or_expr(&mut self) -> PResult<AstNode> {
        if self.at_op("*") {
            let star = self.bump();
            let inner = self.or_expr()?;
            return Ok(AstNode::new(NodeKind::UnaryOp, Some("*".into()), vec![inner], star.offset));
        }
        self.expr()
    }

    fn named_expr(&mut self) -> PResult<AstNode> {
        if self.peek().kind == TokKind::Name && self.peek_at(1).kind == TokKind::Op && self.peek_at(1).text == ":=" {
            return Err(self.unsupported("assignment expression"));
        }
        self.expr()
    }

    fn expr(&mut self) -> PResult<AstNode> {
        if self.at_kw("lambda") {
            return self.lambda();
        }
        let start = self.peek().offset;
        let body = self.or_test()?;
        if self.at_kw("if") {
            self.bump();
            let test = self.or_test()?;
            if !self.eat_kw("else") {
                return Err(self.parse_err("expected `else`"));
            }
            let orelse = self.expr()?;
            return Ok(AstNode::new(NodeKind::BinOp, Some("if".into()), vec![body, test, orelse], start));
        }
        Ok(body)
    }

    fn lambda(&mut self) -> PResult<AstNode> {
        let kw = self.bump();
        let mut children = self.params(":")?;
        self.expect_op(":")?;
        children.push(self.expr()?);
        Ok(AstNode::new(NodeKind::Lambda, None, children, kw.offset))
    }

    fn or_test(&mut self) -> PResult<AstNode> {
        let mut left = self.and_test()?;
        while self.at_kw("or") {
            let op = self.bump();
            let right = self.and_test()?;
            left = AstNode::new(NodeKind::BinOp, Some("or".into()), vec![left, right], op.offset);
        }
        Ok(left)
    }

    fn and_test(&mut self) -> PResult<AstNode> {
        let mut left = self.not_test()?;
        while self.at_kw("and") {
            let op = self.bump();
            let right = self.not_test()?;
            left = AstNode::new(NodeKind::BinOp, Some("and".into()), vec![left, right], op.offset);
        }
        Ok(left)
    }

    fn not_test(&mut self) -> PResult<AstNode> {
        if self.at_kw("not") {
            let op = self.bump();
            let inner = self.not_test()?;
            return Ok(AstNode::new(NodeKind::UnaryOp, Some("not".into()), vec![inner], op.offset));
        }
        self.comparison()
    }

    fn comparison_op(&mut self) -> Option<(String, usize)> {
        let t = self.peek().clone();
        match (t.kind, t.text.as_str()) {
            (TokKind::Op, "<" | ">" | "==" | ">=" | "<=" | "!=") => {
                self.bump();
                Some((t.text, t.offset))
            }
            (TokKind::Name, "in") => {
                self.bump();
                Some(("in".into(), t.offset))
            }
            (TokKind::Name, "not") if self.peek_at(1).text == "in" => {
                self.bump();
                self.bump();
                Some(("not in".into(), t.offset))
            }
            (TokKind::Name, "is") => {
                self.bump();
                if self.eat_kw("not") {
                    Some(("is not".into(), t.offset))
                } else {
                    Some(("is".into(), t.offset))
                }
            }
            _ => None,
        }
    }

    fn comparison(&mut self) -> PResult<AstNode> {
        let mut left = self.or_expr()?;
        while let Some((op, offset)) = self.comparison_op() {
            let right = self.or_expr()?;
            left = AstNode::new(NodeKind::BinOp, Some(op), vec![left, right], offset);
        }
        Ok(left)
    }

    fn binary_level(&mut self, ops: &[&str], next: fn(&mut Self) -> PResult<AstNode>) -> PResult<AstNode> {
        let mut left = next(self)?;
        loop {
            let t = self.peek();
            if t.kind == TokKind::Op && ops.contains(&t.text.as_str()) {
                let op = self.bump();
                let right = next(self)?;
                left = AstNode::new(NodeKind::BinOp, Some(op.text), vec![left, right], op.offset);
            } else {
                return Ok(left);
            }
        }
    }

    fn or_expr(&mut self) -> PResult<AstNode> {
        self.binary_level(&["|"], Self::xor_expr)
    }

    fn xor_expr(&mut self) -> PResult<AstNode> {
        self.binary_level(&["^"], Self::and_expr)
    }

    fn and_expr(&mut self) -> PResult<AstNode> {
        self.binary_level(&["&"], Self::shift_expr)
    }

    fn shift_expr(&mut self) -> PResult<AstNode> {
        self.binary_level(&["<<", ">>"], Self::arith)
    }

    fn arith(&mut self) -> PResult<AstNode> {
        self.binary_level(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> PResult<AstNode> {
        self.binary_level(&["*", "/", "//", "%", "@"], Self::factor)
    }

    fn factor(&mut self) -> PResult<AstNode> {
        let t = self.peek().clone();
        if t.kind == TokKind::Op && matches!(t.text.as_str(), "-" | "+" | "~") {
            self.bump();
            let inner = self.factor()?;
            return Ok(AstNode::new(NodeKind::UnaryOp, Some(t.text), vec![inner], t.offset));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<AstNode> {
        let base = self.primary()?;
        if self.at_op("**") {
            let op = self.bump();
            let exp = self.factor()?;
            return Ok(AstNode::new(NodeKind::BinOp, Some("**".into()), vec![base, exp], op.offset));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<AstNode> {
        let mut node = self.atom()?;
        loop {
            if self.at_op(".") {
                self.bump();
                let attr = self.expect_name()?;
                node = AstNode::new(NodeKind::Attribute, Some(attr.text), vec![node], attr.offset);
            } else if self.at_op("(") {
                self.bump();
                let callee_offset = node.offset;
                let mut children = vec![node];
                children.extend(self.call_args()?);
                self.expect_op(")")?;
                node = AstNode::new(NodeKind::Call, None, children, callee_offset);
            } else if self.at_op("[") {
                let open = self.bump();
                let index = self.subscript_list()?;
                self.expect_op("]")?;
                node = AstNode::new(NodeKind::Subscript, None, vec![node, index], open.offset);
            } else {
                return Ok(node);
            }
        }
    }

    fn call_args(&mut self) -> PResult<Vec<AstNode>> {
        let mut out = Vec::new();
        while !self.at_op(")") {
            let t = self.peek().clone();
            if t.kind == TokKind::Name && self.peek_at(1).kind == TokKind::Op && self.peek_at(1).text == "=" {
                self.bump();
                self.bump();
                let value = self.expr()?;
                out.push(AstNode::new(NodeKind::Keyword, Some(t.text), vec![value], t.offset));
            } else if self.at_op("*") || self.at_op("**") {
                let star = self.bump();
                let value = self.expr()?;
                out.push(AstNode::new(NodeKind::UnaryOp, Some(star.text), vec![value], star.offset));
            } else {
                let value = self.named_expr()?;
                if self.at_kw("for") {
                    return Err(self.unsupported("generator expression"));
                }
                out.push(value);
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(out)
    }

    fn subscript_list(&mut self) -> PResult<AstNode> {
        let start = self.peek().offset;
        let first = self.subscript_item()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.subscript_item()?);
        }
        Ok(AstNode::new(NodeKind::Tuple, None, items, start))
    }

    fn subscript_item(&mut self) -> PResult<AstNode> {
        let start = self.peek().offset;
        let is_bound_end = |p: &Self| p.at_op(":") || p.at_op("]") || p.at_op(",");
        let lower = if is_bound_end(self) { None } else { Some(self.expr()?) };
        if !self.at_op(":") {
            return lower.ok_or_else(|| self.parse_err("expected subscript"));
        }
        self.bump();
        let mut children: Vec<AstNode> = lower.into_iter().collect();
        if !is_bound_end(self) {
            children.push(self.expr()?);
        }
        if self.eat_op(":") && !is_bound_end(self) {
            children.push(self.expr()?);
        }
        Ok(AstNode::new(NodeKind::Slice, None, children, start))
    }

    fn atom(&mut self) -> PResult<AstNode> {
        let t = self.peek().clone();
        match t.kind {
            TokKind::Name => {
                if is_keyword(&t.text) {
                    return match t.text.as_str() {
                        "True" | "False" | "None" => {
                            self.bump();
                            Ok(AstNode::leaf(NodeKind::Constant, t.text, t.offset))
                        }
                        kw if UNSUPPORTED_KEYWORDS.contains(&kw) => Err(self.unsupported(kw)),
                        _ => Err(self.parse_err("unexpected keyword")),
                    };
                }
                self.bump();
                Ok(AstNode::leaf(NodeKind::Name, t.text, t.offset))
            }
            TokKind::Number => {
                self.bump();
                Ok(AstNode::leaf(NodeKind::Constant, NUM_TOKEN, t.offset))
            }
            TokKind::Str => {
                self.bump();
                while self.at_kind(TokKind::Str) {
                    self.bump();
                }
                Ok(AstNode::leaf(NodeKind::Constant, STR_TOKEN, t.offset))
            }
            TokKind::Placeholder => {
                self.bump();
                Ok(AstNode::leaf(NodeKind::Constant, t.text, t.offset))
            }
            TokKind::Op => match t.text.as_str() {
                "(" => {
                    self.bump();
                    if self.eat_op(")") {
                        return Ok(AstNode::new(NodeKind::Tuple, None, Vec::new(), t.offset));
                    }
                    let first = self.star_or_expr()?;
                    if self.at_kw("for") {
                        return Err(self.unsupported("generator expression"));
                    }
                    if self.at_op(")") {
                        self.bump();
                        return Ok(first);
                    }
                    let mut items = vec![first];
                    while self.eat_op(",") {
                        if self.at_op(")") {
                            break;
                        }
                        items.push(self.star_or_expr()?);
                    }
                    self.expect_op(")")?;
                    Ok(AstNode::new(NodeKind::Tuple, None, items, t.offset))
                }
                "[" => {
                    self.bump();
                    let mut items = Vec::new();
                    while !self.at_op("]") {
                        items.push(self.star_or_expr()?);
                        if self.at_kw("for") {
                            return Err(self.unsupported("list comprehension"));
                        }
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    self.expect_op("]")?;
                    Ok(AstNode::new(NodeKind::List, None, items, t.offset))
                }
                "{" => Err(self.unsupported("dict or set display")),
                "..." => {
                    self.bump();
                    Ok(AstNode::leaf(NodeKind::Constant, "...", t.offset))
                }
                _ => Err(self.parse_err("unexpected token")),
            },
            TokKind::Newline | TokKind::Eof | TokKind::Indent | TokKind::Dedent => {
                Err(self.parse_err("unexpected end of expression"))
            }
        }
    }
}

fn check_target(node: &AstNode) -> Result<(), ()> {
    match node.kind {
        NodeKind::Name | NodeKind::Attribute | NodeKind::Subscript => Ok(()),
        NodeKind::Tuple | NodeKind::List => node.children.iter().try_for_each(check_target),
        NodeKind::UnaryOp if node.value.as_deref() == Some("*") => node.children.iter().try_for_each(check_target),
        _ => Err(()),
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "False" | "None" | "True" | "and" | "as" | "assert" | "async" | "await" | "break" | "class" | "continue"
            | "def" | "del" | "elif" | "else" | "except" | "finally" | "for" | "from" | "global" | "if" | "import"
            | "in" | "is" | "lambda" | "nonlocal" | "not" | "or" | "pass" | "raise" | "return" | "try" | "while"
            | "with" | "yield"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sx(src: &str) -> String {
        parse_ast(src).unwrap().to_sexpr()
    }

    #[test]
    fn assignment() {
        assert_eq!(sx("x = 1"), "module[assign[name(x), constant(<num>)]]");
    }

    #[test]
    fn empty_module() {
        let m = parse_ast("").unwrap();
        assert_eq!(m.kind, NodeKind::Module);
        assert!(m.children.is_empty());
    }

    #[test]
    fn attribute_call() {
        assert_eq!(
            sx("pd.get_dummies(all_data)"),
            "module[expr_stmt[call[attribute(get_dummies)[name(pd)], name(all_data)]]]"
        );
    }

    #[test]
    fn imports() {
        assert_eq!(
            sx("import pandas as pd\nfrom sklearn.linear_model import LassoCV"),
            "module[import[name(pandas)], import_from(sklearn.linear_model)[name(LassoCV)]]"
        );
    }

    #[test]
    fn slices_and_lambdas() {
        assert_eq!(
            sx("X = d[:n]"),
            "module[assign[name(X), subscript[name(d), slice[name(n)]]]]"
        );
        assert_eq!(
            sx("f(lambda x: x.replace('-', ''))"),
            "module[expr_stmt[call[name(f), lambda[name(x), call[attribute(replace)[name(x)], constant(<str>), constant(<str>)]]]]]"
        );
        assert!(parse_ast("t.loc[:, 'a':'b']").is_ok());
    }

    #[test]
    fn function_def_and_return() {
        let m = parse_ast("def rmse_cv(model):\n    r = np.sqrt(-f(model, cv=5))\n    return(r)\nrmse_cv(m).mean()").unwrap();
        assert_eq!(m.children.len(), 2);
        assert_eq!(m.children[0].kind, NodeKind::FunctionDef);
        assert_eq!(m.children[0].value.as_deref(), Some("rmse_cv"));
        assert_eq!(m.children[1].kind, NodeKind::ExprStmt);
    }

    #[test]
    fn control_flow() {
        assert!(parse_ast("for i, c in enumerate(cols):\n    if c > 0:\n        print(i)\n    elif c < 0:\n        pass\n    else:\n        x += 1").is_ok());
    }

    #[test]
    fn unsupported_and_errors() {
        assert!(matches!(parse_ast("async def f(): ..."), Err(CodeError::UnsupportedSyntax { .. })));
        assert!(matches!(parse_ast("class A: pass"), Err(CodeError::UnsupportedSyntax { .. })));
        assert!(matches!(parse_ast("d = {'a': 1}"), Err(CodeError::UnsupportedSyntax { .. })));
        assert!(matches!(parse_ast("x = = 1"), Err(CodeError::Parse { .. })));
        assert!(matches!(parse_ast("f(1"), Err(CodeError::Parse { .. })));
        assert!(matches!(parse_ast("1 = x"), Err(CodeError::Parse { .. })));
    }

    #[test]
    fn callee_names() {
        let m = parse_ast("LassoCV(alphas=[1, 0.1]).fit(X, y)").unwrap();
        let names: Vec<_> = m.walk().into_iter().filter_map(AstNode::callee_name).collect();
        assert_eq!(names, ["fit", "LassoCV"]);
    }
}

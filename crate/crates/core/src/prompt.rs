//! Fill-in-the-blank prompts chosen from a cell's output signature.

use serde::Serialize;

use crate::code::{clean_source, parse_ast, AstNode, NodeKind};
use crate::corpus::DocCategory;
use crate::notebook::{CellOutput, OutputKind, Placement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptId {
    Process,
    TableResult,
    GenericResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PromptTemplate {
    pub id: PromptId,
    pub text: &'static str,
    pub placement: Placement,
    pub category: DocCategory,
}

pub const PROCESS: PromptTemplate = PromptTemplate {
    id: PromptId::Process,
    text: "This code cell is for _ _ _ _ _",
    placement: Placement::Above,
    category: DocCategory::Process,
};

pub const TABLE_RESULT: PromptTemplate = PromptTemplate {
    id: PromptId::TableResult,
    text: "The table shows _ _ _ _ _",
    placement: Placement::Below,
    category: DocCategory::Result,
};

pub const GENERIC_RESULT: PromptTemplate = PromptTemplate {
    id: PromptId::GenericResult,
    text: "The result indicates that _ _ _ _ _",
    placement: Placement::Below,
    category: DocCategory::Result,
};

pub const TEMPLATES: [PromptTemplate; 3] = [PROCESS, TABLE_RESULT, GENERIC_RESULT];

pub fn prompt_for_kind(kind: Option<OutputKind>) -> PromptTemplate {
    match kind {
        Some(OutputKind::Table) => TABLE_RESULT,
        Some(OutputKind::Text | OutputKind::Image) => GENERIC_RESULT,
        Some(OutputKind::Error | OutputKind::None) | None => PROCESS,
    }
}

pub fn prompt_candidate(output: Option<&CellOutput>) -> PromptTemplate {
    prompt_for_kind(output.map(|o| o.kind))
}

/// The kind that decides the prompt for a list of outputs: a table anywhere
/// wins, then any text or image, then an error.
pub fn output_signature(outputs: &[CellOutput]) -> Option<OutputKind> {
    [OutputKind::Table, OutputKind::Image, OutputKind::Text, OutputKind::Error]
        .into_iter()
        .find(|k| outputs.iter().any(|o| o.kind == *k))
}

const TABLE_METHODS: [&str; 5] = ["head", "describe", "tail", "sample", "corr"];

/// Guess the output kind of a cell that was never run.
pub fn static_output_guess(source: &str) -> Option<OutputKind> {
    let root = parse_ast(&clean_source(source)).ok()?;
    let has_print = root
        .walk()
        .iter()
        .any(|n| n.kind == NodeKind::Call && n.callee_name() == Some("print") && is_plain_name_call(n));
    if let Some(last) = root.children.last().filter(|s| s.kind == NodeKind::ExprStmt) {
        let expr = &last.children[0];
        if expr.callee_name().is_some_and(|name| TABLE_METHODS.contains(&name)) {
            return Some(OutputKind::Table);
        }
        return Some(OutputKind::Text);
    }
    has_print.then_some(OutputKind::Text)
}

fn is_plain_name_call(call: &AstNode) -> bool {
    call.children.first().is_some_and(|f| f.kind == NodeKind::Name)
}

//! Browser bindings. Every export takes strings and returns a JSON string.

use std::cell::OnceCell;

use nbdoc_core::code::{build_code_graph, DEFAULT_A_MAX, DEFAULT_T_MAX};
use nbdoc_core::{classify_provenance, KnowledgeBase, OutputInfo, OutputKind, Suggester};
use serde_json::json;
use wasm_bindgen::prelude::*;

thread_local! {
    static SUGGESTER: OnceCell<Suggester> = const { OnceCell::new() };
}

/// `""` means the cell was never run, `"none"` that it ran without output.
pub fn output_info(kind: &str) -> Result<OutputInfo, String> {
    match kind.trim() {
        "" => Ok(OutputInfo::Unknown),
        "none" => Ok(OutputInfo::Absent),
        k => OutputKind::parse(k).map(OutputInfo::Kind).ok_or_else(|| format!("unknown output kind {k:?}")),
    }
}

/// Query and prompt candidates from the bundled KB (no trained model).
#[wasm_bindgen]
pub fn suggest(source: &str, output_kind: &str) -> String {
    let info = match output_info(output_kind) {
        Ok(i) => i,
        Err(e) => return json!({"error": e}).to_string(),
    };
    SUGGESTER.with(|cell| {
        let s = cell.get_or_init(|| Suggester::new(None, KnowledgeBase::seed()));
        serde_json::to_string(&s.suggest(source, info)).expect("response serializes")
    })
}

#[wasm_bindgen]
pub fn provenance(suggested: &str, final_text: &str) -> String {
    serde_json::to_string(&classify_provenance(suggested, final_text)).expect("tag serializes")
}

#[wasm_bindgen]
pub fn code_graph(source: &str) -> String {
    serde_json::to_string(&build_code_graph(source, DEFAULT_T_MAX, DEFAULT_A_MAX)).expect("graph serializes")
}

#[wasm_bindgen]
pub fn kb_size() -> usize {
    SUGGESTER.with(|cell| cell.get_or_init(|| Suggester::new(None, KnowledgeBase::seed())).kb().len())
}

//! nbformat-4 notebook documents.
//!
//! Only the fields the assistant needs are modelled explicitly. Everything
//! else (notebook metadata, cell metadata, unknown keys, raw output records)
//! is carried along as JSON so that a parse/serialize round trip is lossless
//! up to key ordering.

use serde_json::{Map, Value};
use thiserror::Error;

use crate::corpus::DocCategory;
use crate::provenance::Provenance;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NotebookError {
    #[error("malformed notebook: {0}")]
    MalformedNotebook(String),
    #[error("unsupported nbformat major version {0}")]
    UnsupportedVersion(u64),
    #[error("unknown cell `{0}`")]
    UnknownCell(String),
    #[error("cell `{0}` is not a code cell")]
    AnchorNotCode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Code,
    Markdown,
    /// nbformat `raw` cells, kept so that round trips do not drop them.
    Raw,
}

impl CellKind {
    fn as_str(self) -> &'static str {
        match self {
            CellKind::Code => "code",
            CellKind::Markdown => "markdown",
            CellKind::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Table,
    Text,
    Image,
    Error,
    None,
}

impl OutputKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputKind::Table => "table",
            OutputKind::Text => "text",
            OutputKind::Image => "image",
            OutputKind::Error => "error",
            OutputKind::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "table" => OutputKind::Table,
            "text" => OutputKind::Text,
            "image" => OutputKind::Image,
            "error" => OutputKind::Error,
            "none" => OutputKind::None,
            _ => return None,
        })
    }
}

/// One classified output record of a code cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutput {
    pub kind: OutputKind,
    pub mime_hint: String,
    raw: Value,
}

impl CellOutput {
    /// An output that exists only in memory (no backing record).
    pub fn synthetic(kind: OutputKind) -> Self {
        let mime_hint = match kind {
            OutputKind::Table => "text/html",
            OutputKind::Image => "image/png",
            OutputKind::Error => "application/vnd.jupyter.error",
            _ => "text/plain",
        };
        CellOutput {
            kind,
            mime_hint: mime_hint.to_string(),
            raw: Value::Null,
        }
    }

    /// Classify a raw nbformat output record. Classification is mime-driven:
    /// `text/html` wins over `image/*`, which wins over any other payload.
    pub fn from_record(raw: Value) -> Self {
        let output_type = raw.get("output_type").and_then(Value::as_str).unwrap_or("");
        let (kind, mime_hint) = match output_type {
            "stream" => {
                let has_text = raw.get("text").map(|t| !source_text(t).is_empty()).unwrap_or(false);
                if has_text {
                    (OutputKind::Text, "text/plain".to_string())
                } else {
                    (OutputKind::None, String::new())
                }
            }
            "error" => (OutputKind::Error, "application/vnd.jupyter.error".to_string()),
            _ => match raw.get("data").and_then(Value::as_object) {
                Some(data) if !data.is_empty() => {
                    if data.contains_key("text/html") {
                        (OutputKind::Table, "text/html".to_string())
                    } else if let Some(img) = data.keys().find(|k| k.starts_with("image/")) {
                        (OutputKind::Image, img.clone())
                    } else {
                        let first = data.keys().next().cloned().unwrap_or_default();
                        (OutputKind::Text, first)
                    }
                }
                _ => (OutputKind::None, String::new()),
            },
        };
        CellOutput { kind, mime_hint, raw }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: String,
    pub kind: CellKind,
    pub source: String,
    pub outputs: Vec<CellOutput>,
    pub provenance: Option<Provenance>,
    /// Cell-level `metadata` minus the provenance key.
    pub metadata: Map<String, Value>,
    /// Remaining keys of the cell record (`execution_count`, `attachments`, ...).
    extra: Map<String, Value>,
}

impl Cell {
    pub fn code(id: impl Into<String>, source: impl Into<String>) -> Self {
        let mut extra = Map::new();
        extra.insert("execution_count".into(), Value::Null);
        Cell {
            id: id.into(),
            kind: CellKind::Code,
            source: source.into(),
            outputs: Vec::new(),
            provenance: None,
            metadata: Map::new(),
            extra,
        }
    }

    pub fn markdown(id: impl Into<String>, source: impl Into<String>) -> Self {
        Cell {
            id: id.into(),
            kind: CellKind::Markdown,
            source: source.into(),
            outputs: Vec::new(),
            provenance: None,
            metadata: Map::new(),
            extra: Map::new(),
        }
    }

    pub fn with_outputs(mut self, outputs: Vec<CellOutput>) -> Self {
        self.outputs = outputs;
        self
    }

    pub fn execution_count(&self) -> Option<i64> {
        self.extra.get("execution_count").and_then(Value::as_i64)
    }

    pub fn set_execution_count(&mut self, count: Option<i64>) {
        self.extra.insert("execution_count".into(), count.map(Value::from).unwrap_or(Value::Null));
    }

    /// The first output that carries a payload.
    pub fn primary_output(&self) -> Option<&CellOutput> {
        self.outputs.iter().find(|o| o.kind != OutputKind::None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NotebookDocument {
    pub format_version: (u32, u32),
    pub metadata: Value,
    pub cells: Vec<Cell>,
    extra: Map<String, Value>,
}

impl Default for NotebookDocument {
    fn default() -> Self {
        NotebookDocument {
            format_version: (4, 5),
            metadata: Value::Object(Map::new()),
            cells: Vec::new(),
            extra: Map::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Above,
    Below,
}

impl Placement {
    /// Result documentation goes under the cell; everything else above it.
    pub fn for_category(category: DocCategory) -> Self {
        if category == DocCategory::Result {
            Placement::Below
        } else {
            Placement::Above
        }
    }
}

fn source_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(parts) => parts.iter().filter_map(Value::as_str).collect(),
        _ => String::new(),
    }
}

fn source_lines(s: &str) -> Value {
    Value::Array(s.split_inclusive('\n').map(|l| Value::String(l.to_string())).collect())
}

fn malformed(msg: impl Into<String>) -> NotebookError {
    NotebookError::MalformedNotebook(msg.into())
}

pub fn parse_notebook(bytes: &[u8]) -> Result<NotebookDocument, NotebookError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| malformed(e.to_string()))?;
    let Value::Object(mut root) = root else {
        return Err(malformed("top level is not an object"));
    };

    let major = root.get("nbformat").and_then(Value::as_u64).ok_or_else(|| malformed("missing nbformat"))?;
    if major != 4 {
        return Err(NotebookError::UnsupportedVersion(major));
    }
    let minor = root.get("nbformat_minor").and_then(Value::as_u64).unwrap_or(0);
    root.remove("nbformat");
    root.remove("nbformat_minor");

    let metadata = root.remove("metadata").unwrap_or_else(|| Value::Object(Map::new()));
    let cells_raw = match root.remove("cells") {
        Some(Value::Array(cells)) => cells,
        _ => return Err(malformed("missing cells array")),
    };

    let mut cells = Vec::with_capacity(cells_raw.len());
    for (index, raw) in cells_raw.into_iter().enumerate() {
        let Value::Object(mut raw) = raw else {
            return Err(malformed(format!("cell {index} is not an object")));
        };
        let kind = match raw.remove("cell_type").as_ref().and_then(Value::as_str) {
            Some("code") => CellKind::Code,
            Some("markdown") => CellKind::Markdown,
            Some("raw") => CellKind::Raw,
            other => return Err(malformed(format!("cell {index} has cell_type {other:?}"))),
        };
        let id = match raw.remove("id") {
            Some(Value::String(id)) => id,
            _ => format!("cell-{index}"),
        };
        let source = raw.remove("source").map(|s| source_text(&s)).unwrap_or_default();
        let mut metadata = match raw.remove("metadata") {
            Some(Value::Object(m)) => m,
            _ => Map::new(),
        };
        let provenance = metadata
            .remove("provenance")
            .and_then(|p| p.as_str().and_then(Provenance::parse));
        let outputs = match raw.remove("outputs") {
            Some(Value::Array(outs)) if kind == CellKind::Code => outs.into_iter().map(CellOutput::from_record).collect(),
            _ => Vec::new(),
        };
        cells.push(Cell {
            id,
            kind,
            source,
            outputs,
            provenance,
            metadata,
            extra: raw,
        });
    }

    let mut seen = std::collections::HashSet::new();
    for cell in &cells {
        if !seen.insert(cell.id.as_str()) {
            return Err(malformed(format!("duplicate cell id `{}`", cell.id)));
        }
    }

    Ok(NotebookDocument {
        format_version: (4, minor as u32),
        metadata,
        cells,
        extra: root,
    })
}

pub fn serialize_notebook(doc: &NotebookDocument) -> Vec<u8> {
    let mut root = doc.extra.clone();
    let cells = doc.cells.iter().map(cell_to_json).collect();
    root.insert("cells".into(), Value::Array(cells));
    root.insert("metadata".into(), doc.metadata.clone());
    root.insert("nbformat".into(), Value::from(doc.format_version.0));
    root.insert("nbformat_minor".into(), Value::from(doc.format_version.1));
    let mut out = serde_json::to_vec_pretty(&Value::Object(root)).expect("JSON values always serialize");
    out.push(b'\n');
    out
}

fn cell_to_json(cell: &Cell) -> Value {
    let mut obj = cell.extra.clone();
    obj.insert("cell_type".into(), Value::from(cell.kind.as_str()));
    obj.insert("id".into(), Value::from(cell.id.clone()));
    let mut metadata = cell.metadata.clone();
    if let Some(p) = cell.provenance {
        metadata.insert("provenance".into(), Value::from(p.as_str()));
    }
    obj.insert("metadata".into(), Value::Object(metadata));
    obj.insert("source".into(), source_lines(&cell.source));
    if cell.kind == CellKind::Code {
        let outputs = cell
            .outputs
            .iter()
            .filter(|o| o.kind != OutputKind::None)
            .map(output_to_json)
            .collect();
        obj.insert("outputs".into(), Value::Array(outputs));
        obj.entry("execution_count").or_insert(Value::Null);
    }
    Value::Object(obj)
}

fn output_to_json(out: &CellOutput) -> Value {
    if !out.raw.is_null() {
        return out.raw.clone();
    }
    // Synthetic outputs get a minimal record matching their kind.
    let mut obj = Map::new();
    match out.kind {
        OutputKind::Error => {
            obj.insert("output_type".into(), Value::from("error"));
            obj.insert("ename".into(), Value::from("Error"));
            obj.insert("evalue".into(), Value::from(""));
            obj.insert("traceback".into(), Value::Array(Vec::new()));
        }
        _ => {
            let mut data = Map::new();
            data.insert(out.mime_hint.clone(), Value::from(""));
            obj.insert("output_type".into(), Value::from("display_data"));
            obj.insert("data".into(), Value::Object(data));
            obj.insert("metadata".into(), Value::Object(Map::new()));
        }
    }
    Value::Object(obj)
}

impl NotebookDocument {
    pub fn index_of(&self, cell_id: &str) -> Option<usize> {
        self.cells.iter().position(|c| c.id == cell_id)
    }

    pub fn cell(&self, cell_id: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.id == cell_id)
    }

    /// True when at least one code cell carries an execution count or output.
    pub fn is_executed(&self) -> bool {
        self.cells
            .iter()
            .filter(|c| c.kind == CellKind::Code)
            .any(|c| c.execution_count().is_some() || c.primary_output().is_some())
    }

    fn fresh_id(&self) -> String {
        let taken: std::collections::HashSet<&str> = self.cells.iter().map(|c| c.id.as_str()).collect();
        (0..)
            .map(|n| format!("md-{n}"))
            .find(|id| !taken.contains(id.as_str()))
            .expect("unbounded id space")
    }

    /// Insert a markdown cell next to a code cell, returning the new document
    /// and the id of the inserted cell.
    pub fn insert_markdown(
        &self,
        anchor_cell_id: &str,
        text: &str,
        placement: Placement,
        provenance: Option<Provenance>,
    ) -> Result<(NotebookDocument, String), NotebookError> {
        let index = self
            .index_of(anchor_cell_id)
            .ok_or_else(|| NotebookError::UnknownCell(anchor_cell_id.to_string()))?;
        if self.cells[index].kind != CellKind::Code {
            return Err(NotebookError::AnchorNotCode(anchor_cell_id.to_string()));
        }
        let id = self.fresh_id();
        let mut cell = Cell::markdown(id.clone(), text);
        cell.provenance = provenance;
        let at = match placement {
            Placement::Above => index,
            Placement::Below => index + 1,
        };
        let mut doc = self.clone();
        doc.cells.insert(at, cell);
        Ok((doc, id))
    }
}

/// Convenience wrapper matching the free-function style of the other ops.
pub fn insert_markdown(
    doc: &NotebookDocument,
    anchor_cell_id: &str,
    text: &str,
    placement: Placement,
) -> Result<NotebookDocument, NotebookError> {
    doc.insert_markdown(anchor_cell_id, text, placement, None).map(|(d, _)| d)
}

use nbdoc_core::notebook::{Cell, CellKind, NotebookDocument, Placement};
use nbdoc_core::{parse_notebook, serialize_notebook};
use proptest::prelude::*;
use serde_json::Value;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

fn all_fixtures() -> Vec<std::path::PathBuf> {
    let mut out = vec![format!("{FIXTURES}/house.ipynb").into(), format!("{FIXTURES}/covid.ipynb").into()];
    for e in std::fs::read_dir(format!("{FIXTURES}/mini_corpus")).unwrap() {
        out.push(e.unwrap().path());
    }
    out
}

#[test]
fn fixtures_round_trip() {
    for path in all_fixtures() {
        let bytes = std::fs::read(&path).unwrap();
        let doc = parse_notebook(&bytes).unwrap();
        let again = serialize_notebook(&doc);
        assert_eq!(parse_notebook(&again).unwrap(), doc, "{path:?}");
        let a: Value = serde_json::from_slice(&bytes).unwrap();
        let b: Value = serde_json::from_slice(&again).unwrap();
        assert_eq!(a["cells"].as_array().unwrap().len(), b["cells"].as_array().unwrap().len());
        assert_eq!(a["metadata"], b["metadata"]);
    }
}

fn doc_from(kinds: &[bool]) -> NotebookDocument {
    let mut d = NotebookDocument::default();
    d.cells = kinds
        .iter()
        .enumerate()
        .map(|(i, &code)| if code { Cell::code(format!("c{i}"), "x = 1") } else { Cell::markdown(format!("c{i}"), "# t") })
        .collect();
    d
}

proptest! {
    #[test]
    fn insert_lands_next_to_anchor(kinds in prop::collection::vec(any::<bool>(), 1..12), pick in any::<prop::sample::Index>(), below in any::<bool>()) {
        let doc = doc_from(&kinds);
        let codes: Vec<usize> = kinds.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i).collect();
        prop_assume!(!codes.is_empty());
        let anchor = codes[pick.index(codes.len())];
        let placement = if below { Placement::Below } else { Placement::Above };
        let (out, id) = doc.insert_markdown(&format!("c{anchor}"), "note", placement, None).unwrap();
        prop_assert_eq!(out.cells.len(), doc.cells.len() + 1);
        let at = out.index_of(&id).unwrap();
        prop_assert_eq!(at, if below { anchor + 1 } else { anchor });
        prop_assert_eq!(out.cells[at].kind, CellKind::Markdown);
        let mut rest = out.cells.clone();
        rest.remove(at);
        prop_assert_eq!(rest, doc.cells);
    }
}

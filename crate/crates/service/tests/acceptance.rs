//! One PASS/FAIL line per acceptance criterion.
//!
//! Criteria listed in `KNOWN_RED` are printed as FAIL and do not fail the
//! run; one of them turning green does, so the list cannot go stale.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use nbdoc_core::code::build_code_graph;
use nbdoc_core::corpus::{corpus_stats, read_pairs_jsonl, split_corpus, CorpusSplit, CorpusStats, PairOrigin, TrainingPair};
use nbdoc_core::notebook::{Cell, CellKind, CellOutput, NotebookDocument, OutputKind, Placement};
use nbdoc_core::prompt::{output_signature, prompt_for_kind};
use nbdoc_core::provenance::{classify_provenance_with, Provenance, Thresholds};
use nbdoc_core::summarizer::gradcheck::{gradient_check, tiny_problem};
use nbdoc_core::summarizer::train::prepare;
use nbdoc_core::summarizer::{bleu_a, evaluate, train, TrainingConfig, DEFAULT_MAX_DECODE};
use nbdoc_core::{parse_notebook, query_candidate, serialize_notebook, KnowledgeBase, Suggester};
use nbdoc_service::{router, AppState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures");

const QUERY_RUNTIME: Duration = Duration::from_secs(1);
const THETA_T: f64 = 0.95;
const THETA_C: f64 = 0.30;
const GRADCHECK_EPS: f64 = 1e-4;
const GRADCHECK_MAX_REL: f64 = 1e-3;
const GRADCHECK_RUNTIME: Duration = Duration::from_secs(30);
const OVERFIT_MAX_LOSS: f64 = 0.1;
const OVERFIT_MIN_EXACT: usize = 18;
const OVERFIT_MIN_BLEU: f64 = 90.0;
const OVERFIT_RUNTIME: Duration = Duration::from_secs(300);
const BLEU_TOL: f64 = 1e-6;
const RANDOM_DOCUMENTS: usize = 1000;
const P50_LIMIT: Duration = Duration::from_millis(200);

const KNOWN_RED: &[&str] = &["query_golden", "provenance_calibration"];

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn fixture(name: &str) -> PathBuf {
    Path::new(FIXTURES).join(name)
}

fn golden() -> Vec<Value> {
    serde_json::from_str(&std::fs::read_to_string(fixture("candidates_golden.json")).unwrap()).unwrap()
}

fn notebook(name: &str) -> NotebookDocument {
    parse_notebook(&std::fs::read(fixture(&format!("{name}.ipynb"))).unwrap()).unwrap()
}

fn golden_cell(row: &Value) -> Cell {
    notebook(row["notebook"].as_str().unwrap()).cell(row["cell_id"].as_str().unwrap()).unwrap().clone()
}

fn query_golden() -> Outcome {
    let kb = KnowledgeBase::seed();
    let rows = golden();
    let sources: Vec<(String, String, Option<String>)> = rows
        .iter()
        .map(|r| (r["cell_id"].as_str().unwrap().to_string(), golden_cell(r).source, r["query"].as_str().map(String::from)))
        .collect();
    let start = Instant::now();
    let got: Vec<Option<String>> = sources.iter().map(|(_, src, _)| query_candidate(&kb, src, 4)).collect();
    let elapsed = start.elapsed();
    let wrong: Vec<&str> = sources.iter().zip(&got).filter(|((_, _, want), got)| want != *got).map(|((id, _, _), _)| id.as_str()).collect();
    Outcome {
        name: "query_golden",
        pass: wrong.is_empty() && elapsed < QUERY_RUNTIME,
        detail: format!("{}/{} exact in {:.1} ms; mismatched {:?}", rows.len() - wrong.len(), rows.len(), elapsed.as_secs_f64() * 1e3, wrong),
    }
}

fn prompt_golden() -> Outcome {
    let rows = golden();
    let mut wrong = Vec::new();
    for r in &rows {
        let cell = golden_cell(r);
        let t = prompt_for_kind(output_signature(&cell.outputs));
        let placement = serde_json::to_value(t.placement).unwrap();
        if t.text != r["prompt"].as_str().unwrap() || placement != r["placement"] {
            wrong.push(cell.id);
        }
    }
    Outcome {
        name: "prompt_golden",
        pass: wrong.is_empty(),
        detail: format!("{}/{} texts and placements exact; mismatched {:?}", rows.len() - wrong.len(), rows.len(), wrong),
    }
}

fn provenance_calibration() -> Outcome {
    let th = Thresholds { tool: THETA_T, co_created: THETA_C };
    let labeled: Vec<Value> = golden().into_iter().filter(|r| r["label"].is_string()).collect();
    let mut wrong = Vec::new();
    for r in &labeled {
        let from = r["suggested_from"].as_str().unwrap();
        let tag = classify_provenance_with(r[from].as_str().unwrap(), r["final"].as_str().unwrap(), th);
        let want = Provenance::parse(r["label"].as_str().unwrap()).unwrap();
        if tag.value != want {
            wrong.push(format!("{} {}->{} at {:.3}", r["cell_id"].as_str().unwrap(), want.as_str(), tag.value.as_str(), tag.similarity));
        }
    }
    Outcome {
        name: "provenance_calibration",
        pass: wrong.is_empty(),
        detail: format!("{}/{} labels reproduced at theta_T={THETA_T}, theta_C={THETA_C}; {:?}", labeled.len() - wrong.len(), labeled.len(), wrong),
    }
}

fn gradient() -> Outcome {
    let start = Instant::now();
    let (params, input, inputs, targets) = tiny_problem(7);
    let checks = gradient_check(&params, 2, &input, &inputs, &targets, GRADCHECK_EPS);
    let elapsed = start.elapsed();
    let worst = checks.iter().max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error)).unwrap();
    Outcome {
        name: "gradient_check",
        pass: checks.iter().all(|c| c.max_rel_error < GRADCHECK_MAX_REL) && elapsed < GRADCHECK_RUNTIME,
        detail: format!("{} tensors, worst {} at {:.2e} (< {GRADCHECK_MAX_REL:e}) in {:.2} s", checks.len(), worst.name, worst.max_rel_error, elapsed.as_secs_f64()),
    }
}

fn toy_pairs() -> Vec<TrainingPair> {
    read_pairs_jsonl(&std::fs::read_to_string(fixture("toy_pairs.jsonl")).unwrap()).unwrap()
}

fn overfit() -> Outcome {
    let start = Instant::now();
    let pairs = toy_pairs();
    let split = CorpusSplit { train: pairs.clone(), valid: pairs.clone(), test: vec![], seed: 3 };
    let config = TrainingConfig { epochs: 300, batch_size: 5, patience: 300, learning_rate: 1e-2, seed: 3, d: 32, ..Default::default() };
    let (model, _) = train(&split, &config).unwrap();
    let loss = evaluate(&model.params, model.hops, &prepare(&pairs, &model.input_vocab, &model.output_vocab)).loss;
    let decoded: Vec<Vec<String>> = pairs
        .iter()
        .map(|p| model.greedy_decode(&build_code_graph(&p.source, model.t_max, model.a_max), DEFAULT_MAX_DECODE))
        .collect();
    let exact = decoded.iter().zip(&pairs).filter(|(d, p)| **d == p.target).count();
    let refs: Vec<Vec<String>> = pairs.iter().map(|p| p.target.clone()).collect();
    let bleu = bleu_a(&decoded, &refs).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        name: "overfit",
        pass: loss < OVERFIT_MAX_LOSS && exact >= OVERFIT_MIN_EXACT && bleu >= OVERFIT_MIN_BLEU && elapsed < OVERFIT_RUNTIME,
        detail: format!("{} pairs, d=32, 300 epochs: loss {loss:.4}, {exact}/20 exact, BLEU-a {bleu:.2}, {:.1} s", pairs.len(), elapsed.as_secs_f64()),
    }
}

fn split() -> Outcome {
    let pairs: Vec<TrainingPair> = (0..5912)
        .map(|i| TrainingPair {
            source: format!("x{i} = f({i})"),
            target: vec![format!("w{i}")],
            notebook_id: format!("nb{}", i / 10),
            cell_index: i % 10,
            origin: PairOrigin::AdjacentMarkdown,
        })
        .collect();
    let a = split_corpus(&pairs, 1).unwrap();
    let b = split_corpus(&pairs, 1).unwrap();
    let sizes = (a.train.len(), a.valid.len(), a.test.len());
    Outcome {
        name: "split",
        pass: sizes == (4730, 591, 591) && a == b,
        detail: format!("5912 pairs -> {sizes:?}, repeat identical: {}", a == b),
    }
}

fn toks(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn bleu_formula() -> Outcome {
    // Clipped matches per order: 5/6, 3/5, 1/4, 0/3, each smoothed by +1;
    // equal lengths so no brevity penalty. Total 100 * 913 / 1680.
    let hand = 100.0 * (6.0 / 7.0 + 4.0 / 6.0 + 2.0 / 5.0 + 1.0 / 4.0) / 4.0;
    let got = bleu_a(&[toks("the cat sat on the mat")], &[toks("the cat is on the mat")]).unwrap();
    // Perfect n-gram match, candidate two thirds of the reference.
    let short = bleu_a(&[toks("the cat")], &[toks("the cat sat")]).unwrap();
    let short_hand = 100.0 * (-0.5f64).exp();
    let perfect = bleu_a(&[toks("read the data")], &[toks("read the data")]).unwrap();
    let err = (got - hand).abs().max((short - short_hand).abs());
    Outcome {
        name: "bleu_formula",
        pass: err < BLEU_TOL && perfect == 100.0,
        detail: format!(
            "{got:.9} vs {hand:.9}, {short:.9} vs {short_hand:.9}, perfect {perfect}; corpus-scale BLEU-a vs baselines is not reproducible without the original corpus"
        ),
    }
}

fn random_document(rng: &mut ChaCha8Rng) -> NotebookDocument {
    let kinds = [OutputKind::Table, OutputKind::Text, OutputKind::Image, OutputKind::Error];
    let words = ["df", "= pd.read_csv('a.csv')", "\n", "# Title", "plot(x)", "**bold**", "é", "\"q\"", "  "];
    let mut doc = NotebookDocument::default();
    for i in 0..rng.gen_range(0..15) {
        let n = rng.gen_range(0..6);
        let source: String = (0..n).map(|_| words[rng.gen_range(0..words.len())]).collect::<Vec<_>>().join(" ");
        let cell = if rng.gen_bool(0.6) {
            let mut c = Cell::code(format!("r{i}"), source);
            if rng.gen_bool(0.5) {
                c = c.with_outputs(vec![CellOutput::synthetic(kinds[rng.gen_range(0..kinds.len())])]);
                c.set_execution_count(Some(i as i64 + 1));
            }
            c
        } else {
            Cell::markdown(format!("r{i}"), source)
        };
        doc.cells.push(cell);
    }
    doc
}

fn round_trip() -> Outcome {
    let mut paths = vec![fixture("house.ipynb"), fixture("covid.ipynb")];
    paths.extend(std::fs::read_dir(fixture("mini_corpus")).unwrap().map(|e| e.unwrap().path()));
    let fixtures_ok = paths.iter().all(|p| {
        let doc = parse_notebook(&std::fs::read(p).unwrap()).unwrap();
        parse_notebook(&serialize_notebook(&doc)).unwrap() == doc
    });

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut failures = 0;
    let mut inserts = 0;
    for _ in 0..RANDOM_DOCUMENTS {
        let doc = parse_notebook(&serialize_notebook(&random_document(&mut rng))).unwrap();
        if parse_notebook(&serialize_notebook(&doc)).unwrap() != doc {
            failures += 1;
            continue;
        }
        let codes: Vec<usize> = doc.cells.iter().enumerate().filter(|(_, c)| c.kind == CellKind::Code).map(|(i, _)| i).collect();
        if codes.is_empty() {
            continue;
        }
        let anchor = codes[rng.gen_range(0..codes.len())];
        let placement = if rng.gen_bool(0.5) { Placement::Below } else { Placement::Above };
        let (out, id) = doc.insert_markdown(&doc.cells[anchor].id.clone(), "note", placement, Some(Provenance::T)).unwrap();
        inserts += 1;
        let at = out.index_of(&id).unwrap();
        let mut rest = out.cells.clone();
        rest.remove(at);
        let expected_at = if placement == Placement::Below { anchor + 1 } else { anchor };
        if at != expected_at || rest != doc.cells || out.cells[at].kind != CellKind::Markdown {
            failures += 1;
        }
    }
    Outcome {
        name: "notebook_round_trip",
        pass: fixtures_ok && failures == 0,
        detail: format!("{} fixtures round trip: {fixtures_ok}; {RANDOM_DOCUMENTS} random documents, {inserts} inserts, {failures} failures", paths.len()),
    }
}

async fn post_suggest(app: &axum::Router, body: &Value) -> (StatusCode, Value) {
    let req = Request::post("/api/suggest").header("content-type", "application/json").body(Body::from(body.to_string())).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn service_contract() -> Outcome {
    let pairs = toy_pairs();
    let split = CorpusSplit { train: pairs.clone(), valid: pairs, test: vec![], seed: 0 };
    let cfg = TrainingConfig { epochs: 40, batch_size: 5, d: 16, learning_rate: 1e-2, ..Default::default() };
    let model = train(&split, &cfg).unwrap().0;
    let dir = tempfile::tempdir().unwrap();
    let app = router(Arc::new(AppState::new(Suggester::new(Some(model), KnowledgeBase::seed()), dir.path().to_path_buf())));
    let source = notebook("house").cells[0].source.clone();
    let body = json!({"source": source, "has_output": false});
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let (status, v) = post_suggest(&app, &body).await;
        let order: Vec<(String, String)> = v["candidates"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| (c["kind"].as_str().unwrap().to_string(), c["placement"].as_str().unwrap().to_string()))
            .collect();
        let want: Vec<(String, String)> = ["Deep", "Query", "Prompt"].iter().map(|k| (k.to_string(), "above".to_string())).collect();
        let mut times = Vec::new();
        for _ in 0..101 {
            let t = Instant::now();
            post_suggest(&app, &body).await;
            times.push(t.elapsed());
        }
        times.sort();
        let p50 = times[times.len() / 2];
        Outcome {
            name: "service_contract",
            pass: status == StatusCode::OK && order == want && p50 < P50_LIMIT,
            detail: format!("import cell -> {order:?}; warm p50 {:.3} ms (< {} ms)", p50.as_secs_f64() * 1e3, P50_LIMIT.as_millis()),
        }
    })
}

fn stats() -> Outcome {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture("mini_corpus")).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    let docs: Vec<(String, NotebookDocument)> = paths
        .iter()
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), parse_notebook(&std::fs::read(p).unwrap()).unwrap()))
        .collect();
    let got = corpus_stats(docs.iter().map(|(id, d)| (id.as_str(), d))).unwrap();
    let snapshot: CorpusStats = serde_json::from_str(&std::fs::read_to_string(fixture("mini_corpus_stats.json")).unwrap()).unwrap();
    let json = serde_json::to_value(&got).unwrap();
    let schema = ["total_cells", "code_cells", "markdown_cells", "markdown_words"].iter().all(|k| json["medians"][k].is_u64());
    Outcome {
        name: "corpus_stats",
        pass: got == snapshot && schema,
        detail: format!("{} notebooks, medians {:?}, snapshot equal: {}", docs.len(), got.medians, got == snapshot),
    }
}

fn main() {
    let outcomes = [
        query_golden(),
        prompt_golden(),
        provenance_calibration(),
        gradient(),
        overfit(),
        split(),
        bleu_formula(),
        round_trip(),
        service_contract(),
        stats(),
    ];
    let mut unexpected = Vec::new();
    for o in &outcomes {
        let known = KNOWN_RED.contains(&o.name);
        let note = match (o.pass, known) {
            (false, true) => " [known red]",
            (true, true) => " [known red now passes; update KNOWN_RED]",
            _ => "",
        };
        println!("{} {}: {}{}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail, note);
        if o.pass == known {
            unexpected.push(o.name);
        }
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} pass", outcomes.len());
    if !unexpected.is_empty() {
        println!("unexpected outcome for {unexpected:?}");
        std::process::exit(1);
    }
}

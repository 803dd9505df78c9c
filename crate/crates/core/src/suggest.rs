//! Runs the three generators for one code cell.

use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use lru::LruCache;
use serde::{Deserialize, Serialize};

use crate::code::build_code_graph;
use crate::corpus::DocCategory;
use crate::notebook::{OutputKind, Placement};
use crate::prompt::{prompt_for_kind, static_output_guess};
use crate::retriever::{query_candidate, KnowledgeBase, DEFAULT_MAX_ITEMS};
use crate::summarizer::{SummarizerModel, DEFAULT_MAX_DECODE};

pub const CACHE_CAPACITY: usize = 256;
pub const WARN_MODEL_NOT_LOADED: &str = "model_not_loaded";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SuggestionKind {
    Deep,
    Query,
    Prompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionCandidate {
    pub kind: SuggestionKind,
    pub text: String,
    pub placement: Placement,
    pub category: DocCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub candidates: Vec<SuggestionCandidate>,
    pub warnings: Vec<String>,
}

/// What is known about a cell's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputInfo {
    /// The notebook was never run; guess from the source.
    Unknown,
    Absent,
    Kind(OutputKind),
}

impl OutputInfo {
    pub fn resolve(self, source: &str) -> Option<OutputKind> {
        match self {
            OutputInfo::Unknown => static_output_guess(source),
            OutputInfo::Absent => None,
            OutputInfo::Kind(k) => Some(k),
        }
    }
}

/// Sentence-case the decoded tokens and drop a trailing period.
pub fn render_deep(tokens: &[String]) -> String {
    let joined = tokens.join(" ");
    let trimmed = joined.trim().trim_end_matches('.').trim_end();
    let mut chars = trimmed.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub struct Suggester {
    model: Option<Arc<SummarizerModel>>,
    kb: Arc<KnowledgeBase>,
    pub max_items: usize,
    pub max_decode: usize,
    cache: Mutex<LruCache<(String, OutputInfo), SuggestResponse>>,
}

impl Suggester {
    pub fn new(model: Option<SummarizerModel>, kb: KnowledgeBase) -> Self {
        Suggester {
            model: model.map(Arc::new),
            kb: Arc::new(kb),
            max_items: DEFAULT_MAX_ITEMS,
            max_decode: DEFAULT_MAX_DECODE,
            cache: Mutex::new(LruCache::new(NonZeroUsize::new(CACHE_CAPACITY).unwrap())),
        }
    }

    pub fn model_loaded(&self) -> bool {
        self.model.is_some()
    }

    pub fn model(&self) -> Option<&SummarizerModel> {
        self.model.as_deref()
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    /// Uncached computation.
    pub fn compute(&self, source: &str, output: OutputInfo) -> SuggestResponse {
        let mut resp = SuggestResponse::default();
        match &self.model {
            Some(model) => {
                let graph = build_code_graph(source, model.t_max, model.a_max);
                if !graph.code_tokens.is_empty() {
                    let text = render_deep(&model.greedy_decode(&graph, self.max_decode));
                    if !text.is_empty() {
                        resp.candidates.push(SuggestionCandidate {
                            kind: SuggestionKind::Deep,
                            text,
                            placement: Placement::Above,
                            category: DocCategory::Process,
                        });
                    }
                }
            }
            None => resp.warnings.push(WARN_MODEL_NOT_LOADED.into()),
        }
        if let Some(text) = query_candidate(&self.kb, source, self.max_items) {
            resp.candidates.push(SuggestionCandidate {
                kind: SuggestionKind::Query,
                text,
                placement: Placement::Above,
                category: DocCategory::Process,
            });
        }
        let prompt = prompt_for_kind(output.resolve(source));
        resp.candidates.push(SuggestionCandidate {
            kind: SuggestionKind::Prompt,
            text: prompt.text.into(),
            placement: prompt.placement,
            category: prompt.category,
        });
        resp
    }

    pub fn suggest(&self, source: &str, output: OutputInfo) -> SuggestResponse {
        let key = (source.to_string(), output);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let resp = self.compute(source, output);
        self.cache.lock().unwrap().put(key, resp.clone());
        resp
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}

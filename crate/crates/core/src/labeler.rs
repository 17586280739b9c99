//! Weak-supervision labeling: lexical-item matching, the negation filter,
//! and label assignment.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::NormalizedDocument;
use crate::lexicon::CompiledMatcher;
use crate::text::{canonical_surface, token_strings, tokenize};

/// Tokens that negate a directly following lexical item.
pub const NEGATORS: [&str; 2] = ["não", "nem"];

pub const DEFAULT_NEGATION_WINDOW: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSpan {
    #[serde(rename = "start")]
    pub token_start: usize,
    #[serde(rename = "end")]
    pub token_end: usize,
    pub surface: String,
    #[serde(rename = "categories")]
    pub category_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelingPolicy {
    /// Labels are the union of all matched items' categories.
    #[default]
    Union,
    /// Labels come from the term the upstream collector filtered on.
    CollectionTerm,
}

impl fmt::Display for LabelingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelingPolicy::Union => "union",
            LabelingPolicy::CollectionTerm => "collection_term",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub lexicon_hash: String,
    pub policy: LabelingPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub labels: BTreeSet<String>,
    pub spans: Vec<MatchSpan>,
    pub provenance: Provenance,
}

impl LabeledExample {
    /// Tokens of the normalized text; span indices refer to these.
    pub fn tokens(&self) -> Vec<String> {
        token_strings(&self.text)
    }
}

pub fn find_matches(matcher: &CompiledMatcher, doc: &NormalizedDocument) -> Vec<MatchSpan> {
    find_matches_in_tokens(matcher, &token_strings(&doc.text))
}

pub fn find_matches_in_tokens<S: AsRef<str>>(matcher: &CompiledMatcher, tokens: &[S]) -> Vec<MatchSpan> {
    matcher
        .find(tokens)
        .into_iter()
        .map(|m| {
            let p = &matcher.patterns()[m.pattern];
            MatchSpan {
                token_start: m.start,
                token_end: m.end,
                surface: p.surface.clone(),
                category_ids: p.categories.iter().cloned().collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegationDecision {
    Keep,
    /// `negator` is the index of the negating token, `span` the index of
    /// the span it negates.
    Discard {
        negator: usize,
        span: usize,
    },
}

pub fn apply_negation_filter(doc: &NormalizedDocument, spans: &[MatchSpan], window: usize) -> NegationDecision {
    let tokens: Vec<&str> = tokenize(&doc.text).into_iter().map(|t| t.text).collect();
    negation_in_tokens(&tokens, spans, window)
}

/// Discards when a negator occurs within `window` tokens before the start
/// of any span. A window of 0 disables the filter.
pub fn negation_in_tokens<S: AsRef<str>>(tokens: &[S], spans: &[MatchSpan], window: usize) -> NegationDecision {
    for (si, span) in spans.iter().enumerate() {
        let from = span.token_start.saturating_sub(window);
        for j in (from..span.token_start).rev() {
            if tokens.get(j).is_some_and(|t| NEGATORS.contains(&t.as_ref())) {
                return NegationDecision::Discard { negator: j, span: si };
            }
        }
    }
    NegationDecision::Keep
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotLabelable;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub example: LabeledExample,
    /// The collection-term policy could not resolve the term and used the
    /// span union instead.
    pub fell_back: bool,
}

pub fn assign_labels(
    matcher: &CompiledMatcher,
    doc: &NormalizedDocument,
    spans: Vec<MatchSpan>,
    policy: LabelingPolicy,
) -> Result<Assignment, NotLabelable> {
    let term_labels = match policy {
        LabelingPolicy::Union => None,
        LabelingPolicy::CollectionTerm => doc
            .collected_by_term
            .as_deref()
            .and_then(|t| matcher.categories_for(&canonical_surface(t))),
    };
    let fell_back = policy == LabelingPolicy::CollectionTerm && term_labels.is_none();
    if fell_back {
        log::warn!("{}: collection term missing or unknown, using span union", doc.id);
    }
    let labels: BTreeSet<String> = match term_labels {
        Some(cats) => cats.iter().cloned().collect(),
        None => spans.iter().flat_map(|s| s.category_ids.iter().cloned()).collect(),
    };
    if labels.is_empty() {
        return Err(NotLabelable);
    }
    Ok(Assignment {
        example: LabeledExample {
            id: doc.id.clone(),
            text: doc.text.clone(),
            labels,
            spans,
            provenance: Provenance {
                lexicon_hash: matcher.lexicon_version().to_owned(),
                policy,
            },
        },
        fell_back,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelingConfig {
    pub policy: LabelingPolicy,
    pub negation_window: usize,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self {
            policy: LabelingPolicy::Union,
            negation_window: DEFAULT_NEGATION_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelingStats {
    pub input: usize,
    pub discarded_negation: usize,
    pub unmatched: usize,
    pub labeled: usize,
    pub collection_term_fallbacks: usize,
}

impl LabelingStats {
    pub fn to_tsv(&self) -> String {
        format!(
            "stat\tcount\ninput\t{}\ndiscarded_negation\t{}\nunmatched\t{}\nlabeled\t{}\ncollection_term_fallbacks\t{}\n",
            self.input, self.discarded_negation, self.unmatched, self.labeled, self.collection_term_fallbacks
        )
    }
}

enum Outcome {
    Labeled(Assignment),
    Negated,
    Unmatched,
}

fn label_one(matcher: &CompiledMatcher, doc: &NormalizedDocument, config: LabelingConfig) -> Outcome {
    let tokens = token_strings(&doc.text);
    let spans = find_matches_in_tokens(matcher, &tokens);
    if let NegationDecision::Discard { .. } = negation_in_tokens(&tokens, &spans, config.negation_window) {
        return Outcome::Negated;
    }
    match assign_labels(matcher, doc, spans, config.policy) {
        Ok(a) => Outcome::Labeled(a),
        Err(NotLabelable) => Outcome::Unmatched,
    }
}

/// Runs match, negation filter and label assignment over every document.
/// Documents are processed in parallel; output keeps input order.
pub fn label_corpus(
    matcher: &CompiledMatcher,
    docs: &[NormalizedDocument],
    config: LabelingConfig,
) -> (Vec<LabeledExample>, LabelingStats) {
    let outcomes: Vec<Outcome> = docs.par_iter().map(|d| label_one(matcher, d, config)).collect();
    let mut stats = LabelingStats {
        input: docs.len(),
        ..Default::default()
    };
    let mut examples = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Labeled(a) => {
                stats.labeled += 1;
                stats.collection_term_fallbacks += usize::from(a.fell_back);
                examples.push(a.example);
            }
            Outcome::Negated => stats.discarded_negation += 1,
            Outcome::Unmatched => stats.unmatched += 1,
        }
    }
    (examples, stats)
}

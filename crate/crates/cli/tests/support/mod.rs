//! Independent oracles and synthetic data for the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Naive per-item token scan: for every distinct surface and every start
/// position, compare token slices. Returns `(start, end, surface, categories)`.
pub fn naive_scan(items: &[(String, String)], tokens: &[String]) -> Vec<(usize, usize, String, BTreeSet<String>)> {
    let mut by_surface: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for (surface, cat) in items {
        by_surface.entry(surface).or_default().insert(cat.clone());
    }
    let mut out = Vec::new();
    for (surface, cats) in by_surface {
        let pat: Vec<&str> = surface.split(' ').collect();
        if pat.len() > tokens.len() {
            continue;
        }
        for start in 0..=tokens.len() - pat.len() {
            if (0..pat.len()).all(|k| tokens[start + k] == pat[k]) {
                out.push((start, start + pat.len(), surface.to_owned(), cats.clone()));
            }
        }
    }
    out.sort();
    out
}

/// Confusion counts by brute force: for each category, walk every example
/// and test membership with linear search.
pub fn confusion_oracle(pred: &[Vec<String>], gold: &[Vec<String>], categories: &[String]) -> Vec<(f64, f64, f64)> {
    categories
        .iter()
        .map(|c| {
            let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
            for (p, g) in pred.iter().zip(gold) {
                let in_p = p.iter().any(|x| x == c);
                let in_g = g.iter().any(|x| x == c);
                match (in_p, in_g) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            let p = if tp + fp == 0 {
                0.0
            } else {
                tp as f64 / (tp + fp) as f64
            };
            let r = if tp + fn_ == 0 {
                0.0
            } else {
                tp as f64 / (tp + fn_) as f64
            };
            let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            (p, r, f)
        })
        .collect()
}

const SYLLABLES: [&str; 24] = [
    "ba", "be", "bi", "bo", "ca", "ce", "da", "de", "fa", "fi", "ga", "go", "la", "le", "ma", "mi", "na", "no", "pa",
    "pe", "ra", "ri", "ta", "tu",
];

/// Distinct pseudo-words; `prefix` keeps different vocabularies disjoint.
pub fn words(rng: &mut ChaCha8Rng, prefix: &str, n: usize) -> Vec<String> {
    let mut set = BTreeSet::new();
    while set.len() < n {
        let len = rng.random_range(2..=3);
        let w: String = (0..len).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
        set.insert(format!("{prefix}{w}"));
    }
    let mut v: Vec<String> = set.into_iter().collect();
    // Deterministic but not alphabetical.
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
    v
}

pub const ABLATION_CATEGORIES: [&str; 8] = [
    "alegria", "tristeza", "raiva", "medo", "amor", "saudade", "inveja", "surpresa",
];

/// Synthetic weak-supervision corpus: each category owns a few lexical
/// items (the dominant signal) and a context vocabulary that shows up in
/// its documents only some of the time (partial signal); the rest is
/// shared filler.
pub struct SyntheticCorpus {
    pub schema_tsv: String,
    pub lexicon_tsv: String,
    /// JSON-lines raw stream.
    pub stream: String,
    /// JSON-lines `{id, labels}` with each document's true categories.
    pub annotations: String,
    pub documents: usize,
}

pub struct SyntheticParams {
    pub documents: usize,
    pub items_per_category: usize,
    pub context_words_per_category: usize,
    pub filler_words: usize,
    /// Probability a non-item token is drawn from the category's context vocabulary.
    pub context_rate: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Probability of a second category in the same document.
    pub second_category_rate: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            documents: 5_000,
            items_per_category: 6,
            context_words_per_category: 15,
            filler_words: 300,
            context_rate: 0.15,
            min_tokens: 8,
            max_tokens: 12,
            second_category_rate: 0.1,
        }
    }
}

pub fn synthetic_corpus(params: &SyntheticParams, seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cats = ABLATION_CATEGORIES;
    let items: Vec<Vec<String>> = cats
        .iter()
        .enumerate()
        .map(|(i, _)| words(&mut rng, &format!("l{i}"), params.items_per_category))
        .collect();
    let context: Vec<Vec<String>> = cats
        .iter()
        .enumerate()
        .map(|(i, _)| words(&mut rng, &format!("k{i}"), params.context_words_per_category))
        .collect();
    let filler = words(&mut rng, "f", params.filler_words);

    let mut schema_tsv = String::new();
    let mut lexicon_tsv = String::new();
    for (i, c) in cats.iter().enumerate() {
        let _ = writeln!(schema_tsv, "{c}\t{c}\tsynthetic");
        for w in &items[i] {
            let _ = writeln!(lexicon_tsv, "{w}\t{c}");
        }
    }

    let mut stream = String::new();
    let mut annotations = String::new();
    for d in 0..params.documents {
        let mut doc_cats = vec![rng.random_range(0..cats.len())];
        if rng.random_bool(params.second_category_rate) {
            let other = (doc_cats[0] + rng.random_range(1..cats.len())) % cats.len();
            doc_cats.push(other);
        }
        let n = rng.random_range(params.min_tokens..=params.max_tokens);
        let mut toks: Vec<String> = (0..n)
            .map(|_| {
                let c = *doc_cats.choose(&mut rng).unwrap();
                if rng.random_bool(params.context_rate) {
                    context[c].choose(&mut rng).unwrap().clone()
                } else {
                    filler.choose(&mut rng).unwrap().clone()
                }
            })
            .collect();
        for &c in &doc_cats {
            let pos = rng.random_range(0..=toks.len());
            toks.insert(pos, items[c].choose(&mut rng).unwrap().clone());
        }
        let id = format!("d{d:06}");
        let text = toks.join(" ");
        let _ = writeln!(stream, "{{\"id\":\"{id}\",\"text\":\"{text}\"}}");
        let labels: BTreeSet<&str> = doc_cats.iter().map(|&c| cats[c]).collect();
        let labels: Vec<String> = labels.iter().map(|l| format!("\"{l}\"")).collect();
        let _ = writeln!(annotations, "{{\"id\":\"{id}\",\"labels\":[{}]}}", labels.join(","));
    }
    SyntheticCorpus {
        schema_tsv,
        lexicon_tsv,
        stream,
        annotations,
        documents: params.documents,
    }
}

/// Writes `{id, labels}` lines from `truth` for exactly the ids in the
/// bundle's blank gold file, as an annotator would.
pub fn annotate_gold(bundle_dir: &Path, truth: &Path, dest: &Path) {
    let gold_ids: BTreeSet<String> = std::fs::read_to_string(bundle_dir.join("gold_blank.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["id"]
                .as_str()
                .unwrap()
                .to_owned()
        })
        .collect();
    let mut out = String::new();
    for line in std::fs::read_to_string(truth).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if gold_ids.contains(v["id"].as_str().unwrap()) {
            out.push_str(line);
            out.push('\n');
        }
    }
    std::fs::write(dest, out).unwrap();
}

impl SyntheticCorpus {
    pub fn write(&self, dir: &Path) {
        std::fs::create_dir_all(dir).unwrap();
        std::fs::write(dir.join("schema.tsv"), &self.schema_tsv).unwrap();
        std::fs::write(dir.join("lexicon.tsv"), &self.lexicon_tsv).unwrap();
        std::fs::write(dir.join("stream.jsonl"), &self.stream).unwrap();
        std::fs::write(dir.join("truth.jsonl"), &self.annotations).unwrap();
    }
}

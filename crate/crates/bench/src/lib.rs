//! Synthetic workloads shared by the benchmarks.

use std::path::Path;

use emocorpus::ingest::{normalize_text, NormalizeOptions, RawDocument};
use emocorpus::lexicon::{ItemKind, Lexicon, Schema};
use emocorpus::NormalizedDocument;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn vocabulary(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i:05}")).collect()
}

/// Lexicon of `items` surfaces of one to three vocabulary words, spread
/// over the bundled schema.
pub fn lexicon(vocab: &[String], items: usize, seed: u64) -> Lexicon {
    let schema = Schema::default_pt();
    let cats: Vec<String> = schema.ids().map(str::to_owned).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tsv = String::new();
    for _ in 0..items {
        let len = rng.random_range(1..=3);
        let words: Vec<&str> = (0..len).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect();
        tsv.push_str(&words.join(" "));
        tsv.push('\t');
        tsv.push_str(cats.choose(&mut rng).unwrap());
        tsv.push('\n');
    }
    let mut lex = Lexicon::new(schema);
    lex.add_from_str(&tsv, Path::new("bench"), ItemKind::Base)
        .expect("generated lexicon is valid");
    lex
}

pub fn token_docs(vocab: &[String], docs: usize, len: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..docs)
        .map(|_| (0..len).map(|_| vocab.choose(&mut rng).unwrap().clone()).collect())
        .collect()
}

pub fn normalized_docs(tokens: &[Vec<String>]) -> Vec<NormalizedDocument> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            normalize_text(
                &RawDocument::new(format!("b{i}"), t.join(" ")),
                NormalizeOptions::default(),
            )
        })
        .collect()
}

/// Baseline: compare every surface at every position.
pub fn naive_count(surfaces: &[Vec<&str>], tokens: &[String]) -> usize {
    let mut n = 0;
    for pat in surfaces {
        for s in 0..tokens.len() {
            if s + pat.len() <= tokens.len() && (0..pat.len()).all(|k| tokens[s + k] == pat[k]) {
                n += 1;
            }
        }
    }
    n
}

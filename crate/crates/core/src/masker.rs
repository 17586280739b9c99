//! Lexical-item masking: replaces matched items with `[MASK]` to build the
//! NoMask / 30Mask / FullMask training variants.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::derive_seed;
use crate::labeler::{LabeledExample, MatchSpan, Provenance};
use crate::text::{tokenize, MASK_TOKEN};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedExample {
    pub id: String,
    pub text: String,
    pub labels: BTreeSet<String>,
    pub spans: Vec<MatchSpan>,
    pub provenance: Provenance,
    pub masked_text: String,
    pub mask_applied: bool,
}

impl MaskedExample {
    fn unmasked(ex: &LabeledExample) -> Self {
        Self {
            id: ex.id.clone(),
            text: ex.text.clone(),
            labels: ex.labels.clone(),
            spans: ex.spans.clone(),
            provenance: ex.provenance.clone(),
            masked_text: ex.text.clone(),
            mask_applied: false,
        }
    }

    /// The text a model should train on.
    pub fn training_text(&self) -> &str {
        &self.masked_text
    }
}

/// Merges overlapping token ranges. Adjacent ranges stay separate.
fn merged_ranges(spans: &[MatchSpan]) -> Vec<(usize, usize)> {
    let mut ranges: Vec<(usize, usize)> = spans.iter().map(|s| (s.token_start, s.token_end)).collect();
    ranges.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(ranges.len());
    for (s, e) in ranges {
        match merged.last_mut() {
            Some(last) if s < last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
}

/// Replaces every span's token range with a single `[MASK]`, leaving all
/// other characters of the text untouched.
pub fn mask_example(ex: &LabeledExample) -> Result<MaskedExample> {
    let tokens = tokenize(&ex.text);
    for span in &ex.spans {
        if span.token_start >= span.token_end || span.token_end > tokens.len() {
            return Err(Error::SpanOutOfBounds {
                id: ex.id.clone(),
                start: span.token_start,
                end: span.token_end,
                len: tokens.len(),
            });
        }
    }
    let mut masked = String::with_capacity(ex.text.len());
    let mut cursor = 0;
    for (s, e) in merged_ranges(&ex.spans) {
        let from = tokens[s].start;
        let to = tokens[e - 1].end;
        masked.push_str(&ex.text[cursor..from]);
        masked.push_str(MASK_TOKEN);
        cursor = to;
    }
    masked.push_str(&ex.text[cursor..]);

    let mut out = MaskedExample::unmasked(ex);
    out.masked_text = masked;
    out.mask_applied = true;
    Ok(out)
}

/// Number of examples to mask out of `count`. Floors, with a small
/// tolerance so that e.g. `0.3 * 10` is 3 despite float error.
pub fn mask_quota(fraction: f64, count: usize) -> usize {
    ((fraction * count as f64) + 1e-9).floor().min(count as f64) as usize
}

/// Per-category stratified masking: for each category, `floor(fraction *
/// n_c)` of the examples carrying it are chosen through a permutation
/// seeded by `(seed, category)`. An example chosen through any of its
/// categories is masked once, entirely.
pub fn mask_corpus(examples: &[LabeledExample], fraction: f64, seed: u64) -> Result<Vec<MaskedExample>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("mask fraction {fraction} outside [0, 1]")));
    }
    let selected = select_for_masking(examples, fraction, seed);
    examples
        .par_iter()
        .zip(selected.par_iter())
        .map(|(ex, &sel)| {
            if sel {
                mask_example(ex)
            } else {
                Ok(MaskedExample::unmasked(ex))
            }
        })
        .collect()
}

fn select_for_masking(examples: &[LabeledExample], fraction: f64, seed: u64) -> Vec<bool> {
    let mut selected = vec![false; examples.len()];
    let categories: BTreeSet<&str> = examples
        .iter()
        .flat_map(|e| e.labels.iter().map(String::as_str))
        .collect();
    for cat in categories {
        let mut members: Vec<usize> = examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.labels.contains(cat))
            .map(|(i, _)| i)
            .collect();
        let quota = mask_quota(fraction, members.len());
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("mask:{cat}")));
        members.shuffle(&mut rng);
        for &i in &members[..quota] {
            selected[i] = true;
        }
    }
    selected
}


/// Display name of a masking variant: `NoMask`, `FullMask`, or e.g. `30Mask`.
pub fn variant_name(fraction: f64) -> String {
    if fraction <= 0.0 {
        "NoMask".to_owned()
    } else if fraction >= 1.0 {
        "FullMask".to_owned()
    } else {
        format!("{}Mask", (fraction * 100.0).round() as u32)
    }
}

#[cfg(test)]
mod name_tests {
    #[test]
    fn variant_names() {
        assert_eq!(super::variant_name(0.0), "NoMask");
        assert_eq!(super::variant_name(0.3), "30Mask");
        assert_eq!(super::variant_name(1.0), "FullMask");
    }
}

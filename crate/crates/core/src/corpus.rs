//! Dataset bundles: deduplication, gold-standard extraction, annotation
//! import, per-category statistics and on-disk layout.
//!
//! Bundle directory:
//!
//! ```text
//! train.jsonl            labeled training examples
//! gold_blank.jsonl       {id, text} held out for annotation
//! gold_annotated.jsonl   {id, text, labels} (only once annotations are imported)
//! build_meta.json        seed, lexicon hash, sizes, per-category counts
//! stats.tsv              per-category counts of the training set
//! ```
//!
//! Every list is kept sorted by id so exports are byte-stable.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::derive_seed;
use crate::io::{read_json, read_jsonl, write_json, write_jsonl, write_string};
use crate::labeler::LabeledExample;
use crate::lexicon::Schema;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldBlank {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnnotated {
    pub id: String,
    pub text: String,
    pub labels: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: String,
    pub labels: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleSizes {
    pub input: usize,
    pub duplicates_removed: usize,
    pub train: usize,
    pub gold: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildMeta {
    pub seed: u64,
    pub lexicon_hash: String,
    pub sizes: BundleSizes,
    pub per_category: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub input_hashes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetBundle {
    pub train: Vec<LabeledExample>,
    pub gold_blank: Vec<GoldBlank>,
    pub gold_annotated: Option<Vec<GoldAnnotated>>,
    pub build_meta: BuildMeta,
}

/// Collapses examples with identical normalized text to their first
/// occurrence. Returns the survivors and the number removed.
pub fn dedupe(examples: Vec<LabeledExample>) -> (Vec<LabeledExample>, usize) {
    let before = examples.len();
    let mut seen = HashSet::with_capacity(before);
    let kept: Vec<LabeledExample> = examples.into_iter().filter(|e| seen.insert(e.text.clone())).collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// Draws `gold_size` examples uniformly at random (seeded) as the gold
/// set with labels stripped; the rest become the training set.
pub fn split_gold(examples: Vec<LabeledExample>, gold_size: usize, seed: u64) -> Result<DatasetBundle> {
    if gold_size > examples.len() {
        return Err(Error::GoldTooLarge {
            requested: gold_size,
            available: examples.len(),
        });
    }
    let input = examples.len();
    let lexicon_hash = examples
        .first()
        .map(|e| e.provenance.lexicon_hash.clone())
        .unwrap_or_default();

    let mut order: Vec<usize> = (0..input).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, "gold")));
    let mut in_gold = vec![false; input];
    for &i in &order[..gold_size] {
        in_gold[i] = true;
    }

    let mut train = Vec::with_capacity(input - gold_size);
    let mut gold_blank = Vec::with_capacity(gold_size);
    for (ex, gold) in examples.into_iter().zip(in_gold) {
        if gold {
            gold_blank.push(GoldBlank {
                id: ex.id,
                text: ex.text,
            });
        } else {
            train.push(ex);
        }
    }
    train.sort_by(|a, b| a.id.cmp(&b.id));
    gold_blank.sort_by(|a, b| a.id.cmp(&b.id));

    let per_category = label_counts(train.iter().map(|e| &e.labels));
    Ok(DatasetBundle {
        build_meta: BuildMeta {
            seed,
            lexicon_hash,
            sizes: BundleSizes {
                input,
                duplicates_removed: 0,
                train: train.len(),
                gold: gold_blank.len(),
            },
            per_category,
            input_hashes: BTreeMap::new(),
        },
        train,
        gold_blank,
        gold_annotated: None,
    })
}

fn label_counts<'a>(labels: impl IntoIterator<Item = &'a BTreeSet<String>>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for set in labels {
        for l in set {
            *counts.entry(l.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Result of merging an annotation file into a bundle.
#[derive(Debug, Clone)]
pub struct AnnotationImport {
    pub bundle: DatasetBundle,
    /// Gold ids without an annotation, sorted.
    pub missing: Vec<String>,
}

pub fn import_gold_annotations(bundle: DatasetBundle, path: &Path, schema: &Schema) -> Result<AnnotationImport> {
    let annotations: Vec<Annotation> = read_jsonl(path)?;
    apply_annotations(bundle, annotations, schema)
}

pub fn apply_annotations(
    mut bundle: DatasetBundle,
    annotations: Vec<Annotation>,
    schema: &Schema,
) -> Result<AnnotationImport> {
    let texts: HashMap<&str, &str> = bundle
        .gold_blank
        .iter()
        .map(|g| (g.id.as_str(), g.text.as_str()))
        .collect();
    let mut annotated: BTreeMap<String, GoldAnnotated> = BTreeMap::new();
    for a in annotations {
        let Some(text) = texts.get(a.id.as_str()) else {
            return Err(Error::UnknownId(a.id));
        };
        if let Some(bad) = a.labels.iter().find(|l| !schema.contains(l)) {
            return Err(Error::UnknownLabel(bad.clone()));
        }
        if annotated.contains_key(&a.id) {
            return Err(Error::DuplicateId(a.id));
        }
        annotated.insert(
            a.id.clone(),
            GoldAnnotated {
                id: a.id,
                text: (*text).to_owned(),
                labels: a.labels,
            },
        );
    }
    let missing: Vec<String> = bundle
        .gold_blank
        .iter()
        .filter(|g| !annotated.contains_key(&g.id))
        .map(|g| g.id.clone())
        .collect();
    bundle.gold_annotated = Some(annotated.into_values().collect());
    Ok(AnnotationImport { bundle, missing })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    /// Schema order.
    pub counts: Vec<(String, usize)>,
    pub total_examples: usize,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

/// Example counts per schema category. Multi-label examples count once
/// toward each of their categories.
pub fn category_stats<'a>(labels: impl IntoIterator<Item = &'a BTreeSet<String>>, schema: &Schema) -> CategoryStats {
    let mut total_examples = 0;
    let mut tally: HashMap<&str, usize> = schema.ids().map(|id| (id, 0)).collect();
    for set in labels {
        total_examples += 1;
        for l in set {
            match tally.get_mut(l.as_str()) {
                Some(c) => *c += 1,
                None => log::warn!("label `{l}` not in schema, not counted"),
            }
        }
    }
    let counts: Vec<(String, usize)> = schema.ids().map(|id| (id.to_owned(), tally[id])).collect();
    let min = counts.iter().map(|c| c.1).min().unwrap_or(0);
    let max = counts.iter().map(|c| c.1).max().unwrap_or(0);
    let mean = counts.iter().map(|c| c.1).sum::<usize>() as f64 / counts.len().max(1) as f64;
    CategoryStats {
        counts,
        total_examples,
        min,
        max,
        mean,
    }
}

impl CategoryStats {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("category\tcount\n");
        for (id, n) in &self.counts {
            let _ = writeln!(out, "{id}\t{n}");
        }
        let _ = writeln!(out, "#total\t{}", self.total_examples);
        let _ = writeln!(out, "#min\t{}", self.min);
        let _ = writeln!(out, "#max\t{}", self.max);
        let _ = writeln!(out, "#mean\t{:.4}", self.mean);
        out
    }

    /// Aligned plain-text table for terminals.
    pub fn to_table(&self) -> String {
        let width = self
            .counts
            .iter()
            .map(|c| c.0.chars().count())
            .max()
            .unwrap_or(8)
            .max(8);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>8}", "category", "examples");
        for (id, n) in &self.counts {
            let _ = writeln!(out, "{id:<width$}  {n:>8}");
        }
        let _ = writeln!(out, "{:<width$}  {:>8}", "total", self.total_examples);
        let _ = writeln!(out, "{:<width$}  {:>8}", "min", self.min);
        let _ = writeln!(out, "{:<width$}  {:>8}", "max", self.max);
        let _ = writeln!(out, "{:<width$}  {:>8.2}", "mean", self.mean);
        out
    }
}

pub const TRAIN_FILE: &str = "train.jsonl";
pub const GOLD_BLANK_FILE: &str = "gold_blank.jsonl";
pub const GOLD_ANNOTATED_FILE: &str = "gold_annotated.jsonl";
pub const BUILD_META_FILE: &str = "build_meta.json";
pub const STATS_FILE: &str = "stats.tsv";

impl DatasetBundle {
    pub fn write_dir(&self, dir: &Path, schema: &Schema) -> Result<()> {
        let mut train: Vec<&LabeledExample> = self.train.iter().collect();
        train.sort_by(|a, b| a.id.cmp(&b.id));
        write_jsonl(&dir.join(TRAIN_FILE), train)?;
        let mut gold: Vec<&GoldBlank> = self.gold_blank.iter().collect();
        gold.sort_by(|a, b| a.id.cmp(&b.id));
        write_jsonl(&dir.join(GOLD_BLANK_FILE), gold)?;
        let annotated_path = dir.join(GOLD_ANNOTATED_FILE);
        match &self.gold_annotated {
            Some(ann) => {
                let mut ann: Vec<&GoldAnnotated> = ann.iter().collect();
                ann.sort_by(|a, b| a.id.cmp(&b.id));
                write_jsonl(&annotated_path, ann)?;
            }
            None if annotated_path.exists() => {
                std::fs::remove_file(&annotated_path).map_err(|e| Error::io(&annotated_path, e))?;
            }
            None => {}
        }
        write_json(&dir.join(BUILD_META_FILE), &self.build_meta)?;
        let stats = category_stats(self.train.iter().map(|e| &e.labels), schema);
        write_string(&dir.join(STATS_FILE), &stats.to_tsv())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let annotated_path = dir.join(GOLD_ANNOTATED_FILE);
        let gold_annotated = if annotated_path.exists() {
            Some(read_jsonl(&annotated_path)?)
        } else {
            None
        };
        Ok(Self {
            train: read_jsonl(&dir.join(TRAIN_FILE))?,
            gold_blank: read_jsonl(&dir.join(GOLD_BLANK_FILE))?,
            gold_annotated,
            build_meta: read_json(&dir.join(BUILD_META_FILE))?,
        })
    }
}

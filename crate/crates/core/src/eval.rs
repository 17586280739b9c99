//! Multi-label evaluation (per-category and macro precision/recall/F1)
//! and the three-way masking ablation.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetBundle, GoldAnnotated};
use crate::error::{Error, Result};
use crate::hashing::derive_seed;
use crate::lexicon::Schema;
use crate::masker::{mask_corpus, variant_name};
use crate::model::{build_rows, featurize, train, LinearModel, TrainConfig, DEFAULT_THRESHOLD};

/// Which categories enter the macro average.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroPolicy {
    /// Only categories with at least one gold example.
    #[default]
    SupportedOnly,
    AllCategories,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub categories: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub model_id: String,
    pub dataset_id: String,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_category: Vec<CategoryMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: MacroMetrics,
    pub meta: RunMeta,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Example-level multi-label precision, recall and F1 per schema category.
pub fn per_category_prf(
    predictions: &[BTreeSet<String>],
    gold: &[BTreeSet<String>],
    schema: &Schema,
    policy: MacroPolicy,
) -> Result<EvalReport> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    for set in predictions.iter().chain(gold) {
        if let Some(bad) = set.iter().find(|l| !schema.contains(l)) {
            return Err(Error::UnknownLabel(bad.clone()));
        }
    }

    let k = schema.len();
    let (mut tp, mut fp, mut fn_) = (vec![0usize; k], vec![0usize; k], vec![0usize; k]);
    for (pred, truth) in predictions.iter().zip(gold) {
        for l in pred {
            let c = schema.position(l).expect("validated");
            if truth.contains(l) {
                tp[c] += 1;
            } else {
                fp[c] += 1;
            }
        }
        for l in truth.difference(pred) {
            fn_[schema.position(l).expect("validated")] += 1;
        }
    }

    let per_category: Vec<CategoryMetrics> = schema
        .ids()
        .enumerate()
        .map(|(c, id)| {
            let precision = ratio(tp[c], tp[c] + fp[c]);
            let recall = ratio(tp[c], tp[c] + fn_[c]);
            CategoryMetrics {
                category: id.to_owned(),
                precision,
                recall,
                f1: f1_score(precision, recall),
                support: tp[c] + fn_[c],
                tp: tp[c],
                fp: fp[c],
                fn_: fn_[c],
            }
        })
        .collect();

    let included: Vec<&CategoryMetrics> = per_category
        .iter()
        .filter(|m| policy == MacroPolicy::AllCategories || m.support > 0)
        .collect();
    let n = included.len();
    let mean = |f: fn(&CategoryMetrics) -> f64| -> f64 {
        if n == 0 {
            0.0
        } else {
            included.iter().map(|m| f(m)).sum::<f64>() / n as f64
        }
    };
    let macro_avg = MacroMetrics {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        categories: n,
    };
    Ok(EvalReport {
        per_category,
        macro_avg,
        meta: RunMeta::default(),
    })
}

impl EvalReport {
    pub fn with_meta(mut self, meta: RunMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("category\tprecision\trecall\tf1\tsupport\n");
        for m in &self.per_category {
            let _ = writeln!(
                out,
                "{}\t{:.4}\t{:.4}\t{:.4}\t{}",
                m.category, m.precision, m.recall, m.f1, m.support
            );
        }
        let support: usize = self.per_category.iter().map(|m| m.support).sum();
        let _ = writeln!(
            out,
            "macro\t{:.4}\t{:.4}\t{:.4}\t{}",
            self.macro_avg.precision, self.macro_avg.recall, self.macro_avg.f1, support
        );
        out
    }
}

/// Scores a model on annotated gold examples.
pub fn evaluate_model(
    model: &LinearModel,
    gold: &[GoldAnnotated],
    schema: &Schema,
    threshold: f64,
    policy: MacroPolicy,
) -> Result<EvalReport> {
    let predictions: Vec<BTreeSet<String>> = gold
        .par_iter()
        .map(|g| featurize(&g.text, model.dim()).and_then(|x| model.predict_features(&x, threshold)))
        .map(|p| p.map(|p| p.decided))
        .collect::<Result<_>>()?;
    let truth: Vec<BTreeSet<String>> = gold.iter().map(|g| g.labels.clone()).collect();
    per_category_prf(&predictions, &truth, schema, policy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub fractions: Vec<f64>,
    pub train: TrainConfig,
    pub threshold: f64,
    pub seed: u64,
    pub macro_policy: MacroPolicy,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            fractions: vec![0.0, 0.3, 1.0],
            train: TrainConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            seed: 0,
            macro_policy: MacroPolicy::SupportedOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRun {
    pub variant: String,
    pub fraction: f64,
    pub masked_examples: usize,
    pub train_examples: usize,
    pub loss_trace: Vec<f64>,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub variant: String,
    pub baseline: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub gold_examples: usize,
    pub runs: Vec<VariantRun>,
    /// Macro differences of each later run against the first.
    pub deltas: Vec<Delta>,
}

impl AblationReport {
    pub fn run(&self, variant: &str) -> Option<&VariantRun> {
        self.runs.iter().find(|r| r.variant == variant)
    }

    /// Plain-text table: one row per variant with macro Precision, Recall
    /// and F1.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>9} {:>9} {:>9}", "Model", "Precision", "Recall", "F1");
        for r in &self.runs {
            let m = &r.report.macro_avg;
            let _ = writeln!(
                out,
                "{:<10} {:>9.4} {:>9.4} {:>9.4}",
                r.variant, m.precision, m.recall, m.f1
            );
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("variant\tfraction\tprecision\trecall\tf1\n");
        for r in &self.runs {
            let m = &r.report.macro_avg;
            let _ = writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}",
                r.variant, r.fraction, m.precision, m.recall, m.f1
            );
        }
        out
    }
}

/// Builds one masked training variant per fraction from the same corpus
/// and seed, trains identically configured models (concurrently), and
/// scores each on the same unmasked gold set.
pub fn ablation_run(bundle: &DatasetBundle, schema: &Schema, config: &AblationConfig) -> Result<AblationReport> {
    let gold = bundle.gold_annotated.as_deref().ok_or(Error::MissingGold)?;
    if gold.is_empty() {
        return Err(Error::MissingGold);
    }
    let mask_seed = derive_seed(config.seed, "mask");
    let runs: Vec<VariantRun> = config
        .fractions
        .par_iter()
        .map(|&fraction| {
            let variant = variant_name(fraction);
            let masked = mask_corpus(&bundle.train, fraction, mask_seed)?;
            let rows = build_rows(
                masked.iter().map(|m| (m.training_text(), &m.labels)),
                schema,
                config.train.dim,
            )?;
            let outcome = train(&rows, schema, config.train)?;
            let report = evaluate_model(&outcome.model, gold, schema, config.threshold, config.macro_policy)?
                .with_meta(RunMeta {
                    model_id: variant.clone(),
                    dataset_id: bundle.build_meta.lexicon_hash.clone(),
                    threshold: config.threshold,
                });
            Ok(VariantRun {
                variant,
                fraction,
                masked_examples: masked.iter().filter(|m| m.mask_applied).count(),
                train_examples: masked.len(),
                loss_trace: outcome.loss_trace,
                report,
            })
        })
        .collect::<Result<_>>()?;

    let deltas = match runs.split_first() {
        Some((base, rest)) => rest
            .iter()
            .map(|r| Delta {
                variant: r.variant.clone(),
                baseline: base.variant.clone(),
                precision: r.report.macro_avg.precision - base.report.macro_avg.precision,
                recall: r.report.macro_avg.recall - base.report.macro_avg.recall,
                f1: r.report.macro_avg.f1 - base.report.macro_avg.f1,
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(AblationReport {
        gold_examples: gold.len(),
        runs,
        deltas,
    })
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;

    fn schema() -> Schema {
        Schema::parse("amor\tA\ninveja\tI\nraiva\tR\n", Path::new("s")).unwrap()
    }

    fn sets(v: &[&[&str]]) -> Vec<BTreeSet<String>> {
        v.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect()
    }

    #[test]
    fn perfect_predictions() {
        let g = sets(&[&["amor"], &["inveja", "raiva"], &["raiva"]]);
        let r = per_category_prf(&g, &g, &schema(), MacroPolicy::SupportedOnly).unwrap();
        for m in &r.per_category {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.macro_avg.f1, 1.0);
    }

    #[test]
    fn hand_case_two_thirds() {
        // amor: TP=2 (ex 0,1), FP=1 (ex 2), FN=1 (ex 3)
        let pred = sets(&[&["amor"], &["amor"], &["amor"], &[]]);
        let gold = sets(&[&["amor"], &["amor"], &["raiva"], &["amor"]]);
        let r = per_category_prf(&pred, &gold, &schema(), MacroPolicy::SupportedOnly).unwrap();
        let amor = &r.per_category[0];
        assert_eq!((amor.tp, amor.fp, amor.fn_), (2, 1, 1));
        assert_eq!(amor.precision, 2.0 / 3.0);
        assert_eq!(amor.recall, 2.0 / 3.0);
        assert_eq!(amor.f1, 2.0 / 3.0);
    }

    #[test]
    fn zero_denominators_and_macro_policy() {
        let pred = sets(&[&["inveja"]]);
        let gold = sets(&[&["amor"]]);
        let r = per_category_prf(&pred, &gold, &schema(), MacroPolicy::SupportedOnly).unwrap();
        assert_eq!(r.macro_avg.categories, 1);
        assert_eq!(r.per_category[1].precision, 0.0);
        assert_eq!(r.per_category[2].f1, 0.0);
        let all = per_category_prf(&pred, &gold, &schema(), MacroPolicy::AllCategories).unwrap();
        assert_eq!(all.macro_avg.categories, 3);
    }

    #[test]
    fn errors() {
        let s = schema();
        assert!(matches!(
            per_category_prf(&sets(&[&[]]), &sets(&[]), &s, MacroPolicy::SupportedOnly),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            per_category_prf(&[], &[], &s, MacroPolicy::SupportedOnly),
            Err(Error::EmptyEvaluation)
        ));
        assert!(matches!(
            per_category_prf(&sets(&[&["medo"]]), &sets(&[&[]]), &s, MacroPolicy::SupportedOnly),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn tsv_has_macro_row() {
        let g = sets(&[&["amor"]]);
        let r = per_category_prf(&g, &g, &schema(), MacroPolicy::SupportedOnly).unwrap();
        let tsv = r.to_tsv();
        assert_eq!(tsv.lines().count(), 5);
        assert!(tsv.lines().last().unwrap().starts_with("macro\t1.0000"));
    }

    #[test]
    fn ablation_requires_gold() {
        let bundle = crate::corpus::split_gold(Vec::new(), 0, 0).unwrap();
        assert!(matches!(
            ablation_run(&bundle, &schema(), &AblationConfig::default()),
            Err(Error::MissingGold)
        ));
    }
}

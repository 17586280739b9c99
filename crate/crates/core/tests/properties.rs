use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use emocorpus::corpus::{category_stats, dedupe, split_gold};
use emocorpus::eval::{per_category_prf, MacroPolicy};
use emocorpus::ingest::{normalize_str, normalize_text, NormalizeOptions, RawDocument};
use emocorpus::labeler::{label_corpus, LabeledExample, LabelingConfig, LabelingPolicy, NEGATORS};
use emocorpus::lexicon::{ItemKind, Lexicon, Schema};
use emocorpus::masker::{mask_corpus, mask_quota};
use emocorpus::model::{LinearModel, TrainConfig};
use emocorpus::text::{is_emoji, token_strings, MASK_TOKEN};
use proptest::prelude::*;

const CATS: [&str; 4] = ["amor", "inveja", "raiva", "medo"];
const WORDS: [&str; 12] = [
    "feliz", "triste", "com", "raiva", "de", "você", "medo", "amo", "hoje", "eu", "não", "nem",
];

fn schema() -> Schema {
    Schema::parse("amor\tA\ninveja\tI\nraiva\tR\nmedo\tM\n", Path::new("s")).unwrap()
}

fn lexicon_from(items: &[(Vec<usize>, usize)]) -> Lexicon {
    let mut lex = Lexicon::new(schema());
    let text: String = items
        .iter()
        .map(|(ws, c)| {
            let surface: Vec<&str> = ws.iter().map(|&w| WORDS[w % 10]).collect();
            format!("{}\t{}\n", surface.join(" "), CATS[*c])
        })
        .collect();
    lex.add_from_str(&text, Path::new("gen"), ItemKind::Base).unwrap();
    lex
}

fn items_strategy() -> impl Strategy<Value = Vec<(Vec<usize>, usize)>> {
    prop::collection::vec((prop::collection::vec(0usize..10, 1..=3), 0usize..4), 1..20)
}

fn doc_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..WORDS.len(), 0..25)
}

fn docs_from(docs: &[Vec<usize>]) -> Vec<emocorpus::NormalizedDocument> {
    docs.iter()
        .enumerate()
        .map(|(i, d)| {
            let text: Vec<&str> = d.iter().map(|&w| WORDS[w]).collect();
            normalize_text(
                &RawDocument::new(format!("d{i:04}"), text.join(" ")),
                NormalizeOptions::default(),
            )
        })
        .collect()
}

/// Straight-line labeler: scan each surface at each position, reject on any
/// negator right before a hit, union the categories.
fn naive_label(lex: &Lexicon, tokens: &[String], window: usize) -> Option<BTreeSet<String>> {
    let mut labels = BTreeSet::new();
    for item in lex.items() {
        let pat: Vec<&str> = item.surface.split(' ').collect();
        for s in 0..tokens.len() {
            if s + pat.len() <= tokens.len() && (0..pat.len()).all(|k| tokens[s + k] == pat[k]) {
                if (s.saturating_sub(window)..s).any(|j| NEGATORS.contains(&tokens[j].as_str())) {
                    return None;
                }
                labels.insert(item.category_id.clone());
            }
        }
    }
    if labels.is_empty() {
        None
    } else {
        Some(labels)
    }
}

fn labeled(n: usize, label_sets: &[Vec<usize>]) -> Vec<LabeledExample> {
    let lex = lexicon_from(&[(vec![0], 0), (vec![1], 1), (vec![3], 2), (vec![6], 3)]);
    let matcher = lex.compile();
    let docs: Vec<_> = (0..n)
        .map(|i| {
            let cats = &label_sets[i % label_sets.len()];
            let mut words: Vec<&str> = cats.iter().map(|&c| ["feliz", "triste", "raiva", "medo"][c]).collect();
            let tag = format!("x{i}");
            words.push(&tag);
            let text = words.join(" ");
            normalize_text(&RawDocument::new(format!("e{i:05}"), text), NormalizeOptions::default())
        })
        .collect();
    label_corpus(&matcher, &docs, LabelingConfig::default()).0
}

fn label_sets_strategy() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0usize..4, 1..=2), 1..6)
}

proptest! {
    #[test]
    fn matcher_agrees_with_naive_labeler(items in items_strategy(), docs in prop::collection::vec(doc_strategy(), 1..30), window in 0usize..3) {
        let lex = lexicon_from(&items);
        let matcher = lex.compile();
        let docs = docs_from(&docs);
        let config = LabelingConfig { policy: LabelingPolicy::Union, negation_window: window };
        let (examples, stats) = label_corpus(&matcher, &docs, config);
        let expected: Vec<(String, BTreeSet<String>)> = docs
            .iter()
            .filter_map(|d| naive_label(&lex, &token_strings(&d.text), window).map(|l| (d.id.clone(), l)))
            .collect();
        let got: Vec<(String, BTreeSet<String>)> = examples.iter().map(|e| (e.id.clone(), e.labels.clone())).collect();
        prop_assert_eq!(got, expected);
        prop_assert_eq!(stats.input, stats.labeled + stats.discarded_negation + stats.unmatched);
    }

    #[test]
    fn labels_come_from_matched_spans(items in items_strategy(), docs in prop::collection::vec(doc_strategy(), 1..20)) {
        let lex = lexicon_from(&items);
        let matcher = lex.compile();
        let (examples, _) = label_corpus(&matcher, &docs_from(&docs), LabelingConfig::default());
        for ex in &examples {
            let tokens = ex.tokens();
            let from_spans: BTreeSet<String> = ex.spans.iter().flat_map(|s| s.category_ids.iter().cloned()).collect();
            prop_assert_eq!(&ex.labels, &from_spans);
            for s in &ex.spans {
                prop_assert_eq!(tokens[s.token_start..s.token_end].join(" "), s.surface.clone());
                for c in &s.category_ids {
                    prop_assert!(lex.contains(&s.surface, c));
                }
            }
            prop_assert_eq!(&ex.provenance.lexicon_hash, &lex.version());
        }
    }

    #[test]
    fn labeling_is_permutation_equivariant(items in items_strategy(), docs in prop::collection::vec(doc_strategy(), 1..20), rot in 0usize..20) {
        let matcher = lexicon_from(&items).compile();
        let docs = docs_from(&docs);
        let mut rotated = docs.clone();
        rotated.rotate_left(rot % docs.len());
        let key = |v: Vec<LabeledExample>| -> BTreeMap<String, LabeledExample> { v.into_iter().map(|e| (e.id.clone(), e)).collect() };
        let a = key(label_corpus(&matcher, &docs, LabelingConfig::default()).0);
        let b = key(label_corpus(&matcher, &rotated, LabelingConfig::default()).0);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn lexicon_order_does_not_change_version(items in items_strategy()) {
        let mut reversed = items.clone();
        reversed.reverse();
        let a = lexicon_from(&items);
        let b = lexicon_from(&reversed);
        prop_assert_eq!(a.version(), b.version());
        prop_assert_eq!(a.to_tsv(), b.to_tsv());
    }

    #[test]
    fn lexicon_parser_never_panics(content in "[a-zãé \\t\\n#]{0,200}") {
        let mut lex = Lexicon::new(schema());
        let _ = lex.add_from_str(&content, Path::new("fuzz"), ItemKind::Base);
    }

    #[test]
    fn normalization_is_idempotent(text in "[a-zA-ZÀ-ÿ0-9 #@_.:/!😀😢👍🏽]{0,60}") {
        let opts = NormalizeOptions::default();
        let once = normalize_str(&text, opts);
        prop_assert_eq!(normalize_str(&once, opts), once.clone());
    }

    #[test]
    fn normalization_keeps_emoji_and_drops_hashtags(text in "[a-z #😀😢❤]{0,60}") {
        let out = normalize_str(&text, NormalizeOptions::default());
        let emoji = |s: &str| -> Vec<char> { let mut v: Vec<char> = s.chars().filter(|&c| is_emoji(c)).collect(); v.sort_unstable(); v };
        prop_assert_eq!(emoji(&out), emoji(&text));
        let chars: Vec<char> = out.chars().collect();
        for w in chars.windows(2) {
            prop_assert!(!(w[0] == '#' && w[1].is_alphanumeric()), "hashtag survived in {:?}", out);
        }
    }

    #[test]
    fn masking_is_deterministic_and_label_preserving(sets in label_sets_strategy(), n in 1usize..120, fraction in 0.0f64..=1.0, seed in any::<u64>()) {
        let examples = labeled(n, &sets);
        let a = mask_corpus(&examples, fraction, seed).unwrap();
        let b = mask_corpus(&examples, fraction, seed).unwrap();
        prop_assert_eq!(&a, &b);
        for (m, e) in a.iter().zip(&examples) {
            prop_assert_eq!(&m.labels, &e.labels);
            prop_assert_eq!(&m.id, &e.id);
            if !m.mask_applied {
                prop_assert_eq!(&m.masked_text, &e.text);
            }
        }
        // Every category reaches its quota.
        let cats: BTreeSet<&String> = examples.iter().flat_map(|e| &e.labels).collect();
        for c in cats {
            let members: Vec<_> = a.iter().filter(|m| m.labels.contains(c)).collect();
            let masked = members.iter().filter(|m| m.mask_applied).count();
            prop_assert!(masked >= mask_quota(fraction, members.len()));
        }
    }

    #[test]
    fn full_masking_leaves_no_lexical_item(sets in label_sets_strategy(), n in 1usize..80) {
        let examples = labeled(n, &sets);
        let lex = lexicon_from(&[(vec![0], 0), (vec![1], 1), (vec![3], 2), (vec![6], 3)]);
        let matcher = lex.compile();
        for m in mask_corpus(&examples, 1.0, 1).unwrap() {
            prop_assert!(m.mask_applied);
            let tokens = token_strings(&m.masked_text);
            prop_assert!(tokens.iter().any(|t| t == MASK_TOKEN));
            prop_assert!(!matcher.is_match(&tokens));
        }
    }

    #[test]
    fn gold_split_partitions(sets in label_sets_strategy(), n in 1usize..150, gold_pct in 0usize..=100, seed in any::<u64>()) {
        let examples = labeled(n, &sets);
        let (examples, removed) = dedupe(examples);
        prop_assert_eq!(removed, 0);
        let gold_size = n * gold_pct / 100;
        let bundle = split_gold(examples.clone(), gold_size, seed).unwrap();
        prop_assert_eq!(bundle.gold_blank.len(), gold_size);
        prop_assert_eq!(bundle.train.len() + bundle.gold_blank.len(), n);
        let mut ids: Vec<&str> = bundle.train.iter().map(|e| e.id.as_str()).chain(bundle.gold_blank.iter().map(|g| g.id.as_str())).collect();
        ids.sort_unstable();
        let mut expected: Vec<&str> = examples.iter().map(|e| e.id.as_str()).collect();
        expected.sort_unstable();
        prop_assert_eq!(ids, expected);
        prop_assert_eq!(split_gold(examples, gold_size, seed).unwrap(), bundle);
    }

    #[test]
    fn stats_conserve_label_mass(sets in label_sets_strategy(), n in 1usize..100) {
        let examples = labeled(n, &sets);
        let stats = category_stats(examples.iter().map(|e| &e.labels), &schema());
        let total: usize = stats.counts.iter().map(|(_, c)| c).sum();
        prop_assert_eq!(total, examples.iter().map(|e| e.labels.len()).sum::<usize>());
        prop_assert_eq!(stats.total_examples, examples.len());
    }

    #[test]
    fn swapping_prediction_and_gold_swaps_precision_and_recall(
        pairs in prop::collection::vec((prop::collection::btree_set(0usize..4, 0..3), prop::collection::btree_set(0usize..4, 0..3)), 1..40)
    ) {
        let s = schema();
        let to = |set: &BTreeSet<usize>| -> BTreeSet<String> { set.iter().map(|&c| CATS[c].to_owned()).collect() };
        let pred: Vec<_> = pairs.iter().map(|(p, _)| to(p)).collect();
        let gold: Vec<_> = pairs.iter().map(|(_, g)| to(g)).collect();
        let a = per_category_prf(&pred, &gold, &s, MacroPolicy::AllCategories).unwrap();
        let b = per_category_prf(&gold, &pred, &s, MacroPolicy::AllCategories).unwrap();
        for (x, y) in a.per_category.iter().zip(&b.per_category) {
            prop_assert_eq!(x.precision, y.recall);
            prop_assert_eq!(x.recall, y.precision);
            prop_assert_eq!(x.f1, y.f1);
        }
        let supported = per_category_prf(&pred, &gold, &s, MacroPolicy::SupportedOnly).unwrap();
        let f1s: Vec<f64> = supported.per_category.iter().filter(|m| m.support > 0).map(|m| m.f1).collect();
        if !f1s.is_empty() {
            let lo = f1s.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = f1s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(supported.macro_avg.f1 >= lo - 1e-12 && supported.macro_avg.f1 <= hi + 1e-12);
        }
    }

    #[test]
    fn raising_threshold_never_adds_labels(bias in prop::collection::vec(-4.0f64..4.0, 4), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let config = TrainConfig { dim: 16, ..TrainConfig::default() };
        let mut model = LinearModel::zeros(&schema(), config).unwrap();
        model.biases = bias;
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = model.predict("amo você", lo);
        let b = model.predict("amo você", hi);
        prop_assert!(b.decided.is_subset(&a.decided));
    }
}

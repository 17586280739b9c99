//! Subcommand implementations. Each reads its inputs from a
//! [`PipelineConfig`] and writes everything under `config.out`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use emocorpus::corpus::{apply_annotations, import_gold_annotations, Annotation};
use emocorpus::eval::{evaluate_model, AblationConfig, AblationReport, EvalReport, RunMeta};
use emocorpus::hashing::{derive_seed, sha256_hex};
use emocorpus::ingest::{filter_originals, normalize_text, parse_raw_stream, NormalizeOptions};
use emocorpus::io::{read_jsonl, write_json, write_jsonl, write_string};
use emocorpus::labeler::{label_corpus, LabeledExample, LabelingConfig, LabelingStats};
use emocorpus::lexicon::{parse_conjugation_tables, ItemKind};
use emocorpus::masker::{mask_corpus, variant_name};
use emocorpus::model::{build_rows, train};
use emocorpus::{ablation_run, category_stats, dedupe, split_gold, CategoryStats, DatasetBundle, Lexicon, Schema};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

pub fn load_schema(cfg: &PipelineConfig) -> CliResult<Schema> {
    Ok(match &cfg.schema {
        Some(p) => Schema::load(p)?,
        None => Schema::default_pt(),
    })
}

fn read(path: &Path) -> CliResult<String> {
    Ok(emocorpus::io::read_to_string(path)?)
}

/// Loads the lexicon, then applies conjugation tables and curation when
/// configured.
pub fn build_lexicon(cfg: &PipelineConfig) -> CliResult<Lexicon> {
    let schema = load_schema(cfg)?;
    let path = cfg.require("lexicon", &cfg.lexicon)?;
    let mut lex = Lexicon::load_with_schema(path, schema)?;
    if let Some(tables) = &cfg.conjugations {
        lex.apply_conjugations(&parse_conjugation_tables(&read(tables)?, tables)?);
    }
    if let (Some(add), Some(rem)) = (&cfg.curation_additions, &cfg.curation_removals) {
        lex.add_from_str(&read(add)?, add, ItemKind::Slang)?;
        lex.remove_from_str(&read(rem)?, rem)?;
    }
    Ok(lex)
}

/// Content hashes of the configured input files, keyed by role.
fn input_hashes(cfg: &PipelineConfig, roles: &[&str]) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for &role in roles {
        let path = match role {
            "schema" => &cfg.schema,
            "lexicon" => &cfg.lexicon,
            "conjugations" => &cfg.conjugations,
            "curation_additions" => &cfg.curation_additions,
            "curation_removals" => &cfg.curation_removals,
            "raw_stream" => &cfg.raw_stream,
            "labeled" => &cfg.labeled,
            "gold_annotations" => &cfg.gold_annotations,
            other => return Err(CliError::Internal(format!("unknown input role {other}"))),
        };
        if let Some(p) = path {
            let bytes = std::fs::read(p).map_err(|e| emocorpus::Error::Io {
                path: p.clone(),
                source: e,
            })?;
            out.insert(role.to_owned(), sha256_hex(&bytes));
        }
    }
    Ok(out)
}

const LEXICON_INPUTS: [&str; 5] = [
    "schema",
    "lexicon",
    "conjugations",
    "curation_additions",
    "curation_removals",
];

#[derive(Debug, Clone, Serialize)]
pub struct LexiconSummary {
    pub seed: u64,
    pub lexicon_hash: String,
    pub schema_hash: String,
    pub items: usize,
    pub warnings: Vec<String>,
    pub input_hashes: BTreeMap<String, String>,
}

pub fn cmd_lexicon_build(cfg: &PipelineConfig) -> CliResult<LexiconSummary> {
    cfg.validate()?;
    let lex = build_lexicon(cfg)?;
    let dir = cfg.out.join("lexicon");
    write_string(&dir.join("lexicon.tsv"), &lex.to_tsv())?;
    write_string(&dir.join("schema.tsv"), &lex.schema().to_tsv())?;
    let summary = LexiconSummary {
        seed: cfg.seed,
        lexicon_hash: lex.version(),
        schema_hash: lex.schema().hash(),
        items: lex.len(),
        warnings: lex.warnings().iter().map(ToString::to_string).collect(),
        input_hashes: input_hashes(cfg, &LEXICON_INPUTS)?,
    };
    let mut report = format!(
        "lexicon {}\nitems {}\nwarnings {}\n",
        summary.lexicon_hash,
        summary.items,
        summary.warnings.len()
    );
    for w in &summary.warnings {
        report.push_str(w);
        report.push('\n');
    }
    write_string(&dir.join("report.txt"), &report)?;
    write_json(&dir.join("build_meta.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelSummary {
    pub seed: u64,
    pub lexicon_hash: String,
    pub records: usize,
    pub malformed: usize,
    pub originals: usize,
    pub stats: LabelingStats,
    pub input_hashes: BTreeMap<String, String>,
}

fn run_labeling(cfg: &PipelineConfig) -> CliResult<(Vec<LabeledExample>, LabelSummary)> {
    let lex = build_lexicon(cfg)?;
    let matcher = lex.compile();
    let stream = parse_raw_stream(cfg.require("raw_stream", &cfg.raw_stream)?)?;
    let records = stream.records;
    let malformed = stream.malformed();
    let originals = filter_originals(stream.documents);
    let opts = NormalizeOptions {
        remove_urls: cfg.remove_urls,
        remove_mentions: cfg.remove_mentions,
    };
    let docs: Vec<_> = originals.iter().map(|d| normalize_text(d, opts)).collect();
    let (examples, stats) = label_corpus(
        &matcher,
        &docs,
        LabelingConfig {
            policy: cfg.policy,
            negation_window: cfg.negation_window,
        },
    );
    let mut roles = LEXICON_INPUTS.to_vec();
    roles.push("raw_stream");
    let summary = LabelSummary {
        seed: cfg.seed,
        lexicon_hash: lex.version(),
        records,
        malformed,
        originals: docs.len(),
        stats,
        input_hashes: input_hashes(cfg, &roles)?,
    };
    Ok((examples, summary))
}

pub fn cmd_label(cfg: &PipelineConfig) -> CliResult<LabelSummary> {
    cfg.validate()?;
    let (examples, summary) = run_labeling(cfg)?;
    write_jsonl(&cfg.out.join("labeled.jsonl"), &examples)?;
    write_string(&cfg.out.join("label_stats.tsv"), &summary.stats.to_tsv())?;
    write_json(&cfg.out.join("label_meta.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantSummary {
    pub variant: String,
    pub fraction: f64,
    pub file: String,
    pub masked: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildSummary {
    pub bundle_dir: PathBuf,
    pub train: usize,
    pub gold: usize,
    pub duplicates_removed: usize,
    pub missing_annotations: Vec<String>,
    pub variants: Vec<VariantSummary>,
}

pub fn variant_file(fraction: f64) -> String {
    format!("{}.jsonl", variant_name(fraction).to_lowercase())
}

pub fn cmd_build(cfg: &PipelineConfig) -> CliResult<BuildSummary> {
    cfg.validate()?;
    let schema = load_schema(cfg)?;
    let mut hashes;
    let examples: Vec<LabeledExample> = match &cfg.labeled {
        Some(p) => {
            hashes = input_hashes(cfg, &["labeled"])?;
            read_jsonl(p)?
        }
        None => {
            let (examples, summary) = run_labeling(cfg)?;
            write_jsonl(&cfg.out.join("labeled.jsonl"), &examples)?;
            write_string(&cfg.out.join("label_stats.tsv"), &summary.stats.to_tsv())?;
            write_json(&cfg.out.join("label_meta.json"), &summary)?;
            hashes = summary.input_hashes;
            examples
        }
    };
    let (examples, removed) = dedupe(examples);
    let mut bundle = split_gold(examples, cfg.gold_size, cfg.seed)?;
    bundle.build_meta.sizes.duplicates_removed = removed;

    let mut missing = Vec::new();
    if let Some(ann) = &cfg.gold_annotations {
        let imported = import_gold_annotations(bundle, ann, &schema)?;
        bundle = imported.bundle;
        missing = imported.missing;
        hashes.extend(input_hashes(cfg, &["gold_annotations"])?);
    }
    bundle.build_meta.input_hashes = hashes;

    let dir = cfg.bundle_dir();
    bundle.write_dir(&dir, &schema)?;

    let mask_seed = derive_seed(cfg.seed, "mask");
    let mut variants = Vec::new();
    for &fraction in &cfg.mask_fractions {
        let masked = mask_corpus(&bundle.train, fraction, mask_seed)?;
        let file = variant_file(fraction);
        write_jsonl(&dir.join("variants").join(&file), &masked)?;
        variants.push(VariantSummary {
            variant: variant_name(fraction),
            fraction,
            masked: masked.iter().filter(|m| m.mask_applied).count(),
            file,
        });
    }
    write_json(&dir.join("variants").join("variants.json"), &variants)?;

    Ok(BuildSummary {
        bundle_dir: dir,
        train: bundle.train.len(),
        gold: bundle.gold_blank.len(),
        duplicates_removed: removed,
        missing_annotations: missing,
        variants,
    })
}

fn load_bundle_with_gold(cfg: &PipelineConfig, schema: &Schema) -> CliResult<DatasetBundle> {
    let mut bundle = DatasetBundle::read_dir(&cfg.bundle_dir())?;
    if bundle.gold_annotated.is_none() {
        if let Some(ann) = &cfg.gold_annotations {
            let annotations: Vec<Annotation> = read_jsonl(ann)?;
            bundle = apply_annotations(bundle, annotations, schema)?.bundle;
        }
    }
    if bundle.gold_annotated.is_none() {
        return Err(emocorpus::Error::MissingGold.into());
    }
    Ok(bundle)
}

#[derive(Debug, Clone, Serialize)]
struct RunRecord<'a> {
    seed: u64,
    train_seed: u64,
    variant: &'a str,
    fraction: f64,
    threshold: f64,
    train: &'a crate::config::TrainSection,
    bundle_build_meta: &'a emocorpus::corpus::BuildMeta,
    loss_trace: &'a [f64],
}

pub fn cmd_train_eval(cfg: &PipelineConfig, fraction: f64) -> CliResult<EvalReport> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CliError::Config(format!("variant fraction {fraction} outside [0, 1]")));
    }
    let schema = load_schema(cfg)?;
    let bundle = load_bundle_with_gold(cfg, &schema)?;
    let gold = bundle.gold_annotated.as_deref().unwrap_or_default();
    let variant = variant_name(fraction);

    let masked = mask_corpus(&bundle.train, fraction, derive_seed(cfg.seed, "mask"))?;
    let train_seed = derive_seed(cfg.seed, "train");
    let tc = cfg.train_config(train_seed);
    let rows = build_rows(masked.iter().map(|m| (m.training_text(), &m.labels)), &schema, tc.dim)?;
    let outcome = train(&rows, &schema, tc)?;
    let report = evaluate_model(&outcome.model, gold, &schema, cfg.threshold, cfg.macro_policy)?.with_meta(RunMeta {
        model_id: variant.clone(),
        dataset_id: bundle.build_meta.lexicon_hash.clone(),
        threshold: cfg.threshold,
    });

    let key = variant.to_lowercase();
    outcome
        .model
        .save(&cfg.out.join("models").join(format!("{key}.json")))?;
    let reports = cfg.out.join("reports");
    write_string(&reports.join(format!("{key}.tsv")), &report.to_tsv())?;
    write_json(&reports.join(format!("{key}.json")), &report)?;
    write_json(
        &reports.join(format!("{key}.build_meta.json")),
        &RunRecord {
            seed: cfg.seed,
            train_seed,
            variant: &variant,
            fraction,
            threshold: cfg.threshold,
            train: &cfg.train,
            bundle_build_meta: &bundle.build_meta,
            loss_trace: &outcome.loss_trace,
        },
    )?;
    Ok(report)
}

pub fn ablation_config(cfg: &PipelineConfig) -> AblationConfig {
    AblationConfig {
        fractions: cfg.mask_fractions.clone(),
        train: cfg.train_config(derive_seed(cfg.seed, "train")),
        threshold: cfg.threshold,
        seed: cfg.seed,
        macro_policy: cfg.macro_policy,
    }
}

pub fn cmd_ablate(cfg: &PipelineConfig) -> CliResult<AblationReport> {
    cfg.validate()?;
    let schema = load_schema(cfg)?;
    let bundle = load_bundle_with_gold(cfg, &schema)?;
    let acfg = ablation_config(cfg);
    let report = ablation_run(&bundle, &schema, &acfg)?;

    let dir = cfg.out.join("ablation");
    write_json(&dir.join("ablation.json"), &report)?;
    write_string(&dir.join("ablation.tsv"), &report.to_tsv())?;
    write_string(&dir.join("table.txt"), &report.to_table())?;
    for run in &report.runs {
        write_string(
            &dir.join(format!("{}.tsv", run.variant.to_lowercase())),
            &run.report.to_tsv(),
        )?;
    }
    #[derive(Serialize)]
    struct Meta<'a> {
        config: &'a AblationConfig,
        bundle_build_meta: &'a emocorpus::corpus::BuildMeta,
    }
    write_json(
        &dir.join("build_meta.json"),
        &Meta {
            config: &acfg,
            bundle_build_meta: &bundle.build_meta,
        },
    )?;
    Ok(report)
}

pub fn cmd_stats(cfg: &PipelineConfig, input: Option<&Path>) -> CliResult<CategoryStats> {
    cfg.validate()?;
    let schema = load_schema(cfg)?;
    let path = input.map(Path::to_path_buf).unwrap_or_else(|| cfg.labeled_path());
    let examples: Vec<LabeledExample> = read_jsonl(&path)?;
    let stats = category_stats(examples.iter().map(|e| &e.labels), &schema);
    write_string(&cfg.out.join("stats.tsv"), &stats.to_tsv())?;
    Ok(stats)
}

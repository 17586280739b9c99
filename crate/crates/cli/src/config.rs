//! Pipeline configuration: a TOML file whose every field can be
//! overridden from the command line.
//!
//! Relative paths inside the config file resolve against the file's own
//! directory; paths given as flags resolve against the working directory.

use std::path::{Path, PathBuf};

use emocorpus::eval::MacroPolicy;
use emocorpus::labeler::{LabelingPolicy, DEFAULT_NEGATION_WINDOW};
use emocorpus::model::{DEFAULT_DIM, DEFAULT_THRESHOLD};
use emocorpus::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_GOLD_SIZE: usize = 1773;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dim: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            dim: DEFAULT_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Category schema; the bundled 28-category schema when absent.
    pub schema: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub conjugations: Option<PathBuf>,
    pub curation_additions: Option<PathBuf>,
    pub curation_removals: Option<PathBuf>,
    pub raw_stream: Option<PathBuf>,
    /// Pre-labeled JSON-lines corpus; skips the labeling stage in `build`.
    pub labeled: Option<PathBuf>,
    pub bundle: Option<PathBuf>,
    pub gold_annotations: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub policy: LabelingPolicy,
    pub negation_window: usize,
    pub remove_urls: bool,
    pub remove_mentions: bool,
    pub mask_fractions: Vec<f64>,
    pub gold_size: usize,
    pub threshold: f64,
    pub macro_policy: MacroPolicy,
    pub train: TrainSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema: None,
            lexicon: None,
            conjugations: None,
            curation_additions: None,
            curation_removals: None,
            raw_stream: None,
            labeled: None,
            bundle: None,
            gold_annotations: None,
            out: PathBuf::from("out"),
            seed: 0,
            policy: LabelingPolicy::Union,
            negation_window: DEFAULT_NEGATION_WINDOW,
            remove_urls: true,
            remove_mentions: true,
            mask_fractions: vec![0.0, 0.3, 1.0],
            gold_size: DEFAULT_GOLD_SIZE,
            threshold: DEFAULT_THRESHOLD,
            macro_policy: MacroPolicy::SupportedOnly,
            train: TrainSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Core(emocorpus::Error::Io {
                path: path.to_owned(),
                source: e,
            })
        })?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_relative_to(base);
        Ok(cfg)
    }

    fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.schema,
            &mut self.lexicon,
            &mut self.conjugations,
            &mut self.curation_additions,
            &mut self.curation_removals,
            &mut self.raw_stream,
            &mut self.labeled,
            &mut self.bundle,
            &mut self.gold_annotations,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.out);
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            learning_rate: self.train.learning_rate,
            batch_size: self.train.batch_size,
            seed,
            dim: self.train.dim,
        }
    }

    pub fn bundle_dir(&self) -> PathBuf {
        self.bundle.clone().unwrap_or_else(|| self.out.join("bundle"))
    }

    pub fn labeled_path(&self) -> PathBuf {
        self.labeled.clone().unwrap_or_else(|| self.out.join("labeled.jsonl"))
    }

    /// Checks value ranges and that every configured input path exists.
    pub fn validate(&self) -> CliResult<()> {
        for (name, path) in [
            ("schema", &self.schema),
            ("lexicon", &self.lexicon),
            ("conjugations", &self.conjugations),
            ("curation_additions", &self.curation_additions),
            ("curation_removals", &self.curation_removals),
            ("raw_stream", &self.raw_stream),
            ("labeled", &self.labeled),
            ("gold_annotations", &self.gold_annotations),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(CliError::Config(format!("{name}: {} does not exist", p.display())));
                }
            }
        }
        if self.curation_additions.is_some() != self.curation_removals.is_some() {
            return Err(CliError::Config(
                "curation_additions and curation_removals must be given together".into(),
            ));
        }
        if let Some(f) = self.mask_fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(CliError::Config(format!("mask fraction {f} outside [0, 1]")));
        }
        if self.mask_fractions.is_empty() {
            return Err(CliError::Config("mask_fractions is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CliError::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if !self.train.dim.is_power_of_two() {
            return Err(CliError::Config(format!(
                "train.dim {} is not a power of two",
                self.train.dim
            )));
        }
        if self.train.batch_size == 0 {
            return Err(CliError::Config("train.batch_size must be positive".into()));
        }
        if !(self.train.learning_rate.is_finite() && self.train.learning_rate > 0.0) {
            return Err(CliError::Config("train.learning_rate must be positive".into()));
        }
        Ok(())
    }

    pub fn require<'a>(&self, name: &str, path: &'a Option<PathBuf>) -> CliResult<&'a Path> {
        path.as_deref()
            .ok_or_else(|| CliError::Config(format!("`{name}` is required for this command")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.gold_size, 1773);
        assert_eq!(c.threshold, 0.30);
        assert_eq!(c.train.epochs, 4);
        assert_eq!(c.mask_fractions, vec![0.0, 0.3, 1.0]);
        c.validate().unwrap();
    }

    #[test]
    fn toml_paths_resolve_against_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(
            &path,
            "lexicon = \"lex.tsv\"\nseed = 7\npolicy = \"collection_term\"\n[train]\nepochs = 2\n",
        )
        .unwrap();
        let c = PipelineConfig::from_toml_file(&path).unwrap();
        assert_eq!(c.lexicon.unwrap(), dir.path().join("lex.tsv"));
        assert_eq!(c.out, dir.path().join("out"));
        assert_eq!(c.seed, 7);
        assert_eq!(c.policy, LabelingPolicy::CollectionTerm);
        assert_eq!(c.train.epochs, 2);
        assert_eq!(c.train.batch_size, 32);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "sede = 1\n").unwrap();
        assert!(matches!(
            PipelineConfig::from_toml_file(&path),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn validation() {
        let mut c = PipelineConfig {
            lexicon: Some("/nonexistent/lex.tsv".into()),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.lexicon = None;
        c.mask_fractions = vec![0.0, 1.2];
        assert!(c.validate().is_err());
        c.mask_fractions = vec![0.3];
        c.train.dim = 1000;
        assert!(c.validate().is_err());
    }
}

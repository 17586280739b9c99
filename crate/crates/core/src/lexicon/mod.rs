//! Emotion lexicon: per-category lexical items, their conjugation
//! expansion and manual curation, and compilation into a matcher.
//!
//! All surfaces are stored in canonical form (see
//! [`crate::text::canonical_surface`]), which is the same form documents
//! are tokenized into before matching.

mod matcher;
mod schema;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{content_lines, read_to_string};
use crate::text::canonical_surface;

pub use matcher::{CompiledMatcher, Pattern, PatternMatch};
pub use schema::{EmotionCategory, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Base,
    Conjugation,
    Slang,
}

impl ItemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ItemKind::Base => "base",
            ItemKind::Conjugation => "conjugation",
            ItemKind::Slang => "slang",
        }
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ItemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "base" => Ok(ItemKind::Base),
            "conjugation" => Ok(ItemKind::Conjugation),
            "slang" => Ok(ItemKind::Slang),
            other => Err(format!("unknown item kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexicalItem {
    pub surface: String,
    pub category_id: String,
    pub kind: ItemKind,
    /// Free-text provenance, e.g. `lexicon.tsv:12`.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexiconWarning {
    DuplicateItem {
        origin: String,
        line: usize,
        surface: String,
        category_id: String,
    },
    MissingRemoval {
        surface: String,
        category_id: String,
    },
}

impl fmt::Display for LexiconWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexiconWarning::DuplicateItem {
                origin,
                line,
                surface,
                category_id,
            } => write!(
                f,
                "{origin}:{line}: duplicate item `{surface}` -> {category_id} dropped"
            ),
            LexiconWarning::MissingRemoval { surface, category_id } => {
                write!(f, "removal of absent item `{surface}` -> {category_id} ignored")
            }
        }
    }
}

/// A validated lexicon. Items are unique per `(surface, category_id)` and
/// kept in that order; the same surface may belong to several categories.
#[derive(Debug, Clone)]
pub struct Lexicon {
    schema: Schema,
    items: BTreeMap<(String, String), LexicalItem>,
    warnings: Vec<LexiconWarning>,
}

impl Lexicon {
    pub fn new(schema: Schema) -> Self {
        Self {
            schema,
            items: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    /// Loads a schema file and a lexicon file.
    pub fn load(path: &Path, schema_path: &Path) -> Result<Self> {
        let schema = Schema::load(schema_path)?;
        Self::load_with_schema(path, schema)
    }

    pub fn load_with_schema(path: &Path, schema: Schema) -> Result<Self> {
        let mut lex = Self::new(schema);
        lex.add_from_str(&read_to_string(path)?, path, ItemKind::Base)?;
        Ok(lex)
    }

    /// Parses `surface<TAB>category_id[<TAB>kind]` lines into the lexicon.
    /// Exact duplicates are dropped and recorded as warnings.
    pub fn add_from_str(&mut self, content: &str, origin: &Path, default_kind: ItemKind) -> Result<()> {
        for (line_no, line) in content_lines(content) {
            let fields: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!(
                        "expected `surface<TAB>category_id[<TAB>kind]`, got {} fields",
                        fields.len()
                    ),
                ));
            }
            let surface = canonical_surface(fields[0]);
            if surface.is_empty() {
                return Err(Error::parse(origin, line_no, "empty surface"));
            }
            let category_id = fields[1].trim();
            if !self.schema.contains(category_id) {
                return Err(Error::UnknownCategory {
                    path: origin.to_owned(),
                    line: line_no,
                    category: category_id.to_owned(),
                });
            }
            let kind = match fields.get(2) {
                Some(k) if !k.trim().is_empty() => k.parse().map_err(|e: String| Error::parse(origin, line_no, e))?,
                _ => default_kind,
            };
            let item = LexicalItem {
                surface,
                category_id: category_id.to_owned(),
                kind,
                source: format!("{}:{line_no}", origin.display()),
            };
            if let Some(dup) = self.insert(item) {
                self.warnings.push(LexiconWarning::DuplicateItem {
                    origin: origin.display().to_string(),
                    line: line_no,
                    surface: dup.surface,
                    category_id: dup.category_id,
                });
            }
        }
        Ok(())
    }

    /// Inserts an item; returns it back if the `(surface, category)` pair
    /// is already present.
    fn insert(&mut self, item: LexicalItem) -> Option<LexicalItem> {
        let key = (item.surface.clone(), item.category_id.clone());
        if self.items.contains_key(&key) {
            return Some(item);
        }
        self.items.insert(key, item);
        None
    }

    /// Adds every conjugated form of each lemma present in the lexicon,
    /// under the lemma's categories. Forms that are themselves lemmas are
    /// expanded too, so a second run adds nothing.
    pub fn expand_conjugations(mut self, tables_path: &Path) -> Result<Self> {
        let tables = parse_conjugation_tables(&read_to_string(tables_path)?, tables_path)?;
        self.apply_conjugations(&tables);
        Ok(self)
    }

    pub fn apply_conjugations(&mut self, tables: &ConjugationTables) {
        let mut frontier: Vec<(String, String)> = self.items.keys().cloned().collect();
        while !frontier.is_empty() {
            let mut added = Vec::new();
            for (surface, category_id) in frontier {
                let Some(forms) = tables.get(&surface) else {
                    continue;
                };
                for form in forms {
                    let item = LexicalItem {
                        surface: form.clone(),
                        category_id: category_id.clone(),
                        kind: ItemKind::Conjugation,
                        source: format!("conjugation of `{surface}`"),
                    };
                    if self.insert(item).is_none() {
                        added.push((form.clone(), category_id.clone()));
                    }
                }
            }
            frontier = added;
        }
    }

    /// Applies manual curation: `additions` uses the lexicon line format
    /// (kind defaults to slang), `removals` lists `surface<TAB>category_id`
    /// pairs. Removing an absent pair is a warning.
    pub fn merge_curation(mut self, additions: &Path, removals: &Path) -> Result<Self> {
        let add = read_to_string(additions)?;
        let rem = read_to_string(removals)?;
        self.add_from_str(&add, additions, ItemKind::Slang)?;
        self.remove_from_str(&rem, removals)?;
        Ok(self)
    }

    pub fn remove_from_str(&mut self, content: &str, origin: &Path) -> Result<()> {
        for (line_no, line) in content_lines(content) {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("expected `surface<TAB>category_id`, got {} fields", fields.len()),
                ));
            }
            let surface = canonical_surface(fields[0]);
            if surface.is_empty() {
                return Err(Error::parse(origin, line_no, "empty surface"));
            }
            let key = (surface, fields[1].trim().to_owned());
            if self.items.remove(&key).is_none() {
                self.warnings.push(LexiconWarning::MissingRemoval {
                    surface: key.0,
                    category_id: key.1,
                });
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn items(&self) -> impl Iterator<Item = &LexicalItem> {
        self.items.values()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn warnings(&self) -> &[LexiconWarning] {
        &self.warnings
    }

    pub fn contains(&self, surface: &str, category_id: &str) -> bool {
        self.items
            .contains_key(&(canonical_surface(surface), category_id.to_owned()))
    }

    /// Content hash over schema ids and `(surface, category, kind)` triples.
    /// Provenance notes and warnings do not contribute.
    pub fn version(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.schema.hash().as_bytes());
        h.update(b"\n");
        for item in self.items.values() {
            h.update(item.surface.as_bytes());
            h.update(b"\t");
            h.update(item.category_id.as_bytes());
            h.update(b"\t");
            h.update(item.kind.as_str().as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// Serializes the items back into the lexicon file format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for item in self.items.values() {
            out.push_str(&format!("{}\t{}\t{}\n", item.surface, item.category_id, item.kind));
        }
        out
    }

    pub fn compile(&self) -> CompiledMatcher {
        CompiledMatcher::new(self)
    }
}

/// Lemma to conjugated forms, all in canonical form.
pub type ConjugationTables = BTreeMap<String, BTreeSet<String>>;

pub fn parse_conjugation_tables(content: &str, origin: &Path) -> Result<ConjugationTables> {
    let mut tables = ConjugationTables::new();
    for (line_no, line) in content_lines(content) {
        let Some((lemma, forms)) = line.split_once('\t') else {
            return Err(Error::parse(origin, line_no, "expected `lemma<TAB>form1,form2,...`"));
        };
        let lemma = canonical_surface(lemma);
        if lemma.is_empty() {
            return Err(Error::parse(origin, line_no, "empty lemma"));
        }
        let forms: BTreeSet<String> = forms
            .split(',')
            .map(canonical_surface)
            .filter(|f| !f.is_empty())
            .collect();
        if forms.is_empty() {
            return Err(Error::parse(origin, line_no, format!("lemma `{lemma}` has no forms")));
        }
        tables.entry(lemma).or_default().extend(forms);
    }
    Ok(tables)
}

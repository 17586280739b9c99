use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{content_lines, read_to_string};

const DEFAULT_SCHEMA: &str = include_str!("../../data/schema_pt28.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionCategory {
    pub id: String,
    pub display_name: String,
    pub definition: String,
}

/// Ordered, validated set of emotion categories. Category order is the
/// column order used by models and reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    categories: Vec<EmotionCategory>,
    index: HashMap<String, usize>,
}

impl Schema {
    pub fn new(categories: Vec<EmotionCategory>) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::Schema("schema must contain at least one category".into()));
        }
        let mut index = HashMap::with_capacity(categories.len());
        for (i, cat) in categories.iter().enumerate() {
            validate_id(&cat.id)?;
            if index.insert(cat.id.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate category id `{}`", cat.id)));
            }
        }
        Ok(Self { categories, index })
    }

    /// The bundled 28-category Portuguese schema.
    pub fn default_pt() -> Self {
        Self::parse(DEFAULT_SCHEMA, Path::new("<default schema>")).expect("bundled schema is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, path)
    }

    pub fn parse(content: &str, origin: &Path) -> Result<Self> {
        let mut categories = Vec::new();
        for (line_no, line) in content_lines(content) {
            let fields: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!(
                        "expected `id<TAB>display_name<TAB>definition`, got {} fields",
                        fields.len()
                    ),
                ));
            }
            let id = fields[0].trim();
            validate_id(id).map_err(|e| Error::parse(origin, line_no, e.to_string()))?;
            categories.push(EmotionCategory {
                id: id.to_owned(),
                display_name: fields[1].trim().to_owned(),
                definition: fields.get(2).map(|d| d.trim().to_owned()).unwrap_or_default(),
            });
        }
        Self::new(categories).map_err(|e| match e {
            Error::Schema(msg) => Error::parse(origin, 0, msg),
            other => other,
        })
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn categories(&self) -> &[EmotionCategory] {
        &self.categories
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|c| c.id.as_str())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Hash over the ordered category ids; two schemas with the same ids in
    /// the same order are interchangeable for models.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for id in self.ids() {
            h.update(id.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for c in &self.categories {
            out.push_str(&format!("{}\t{}\t{}\n", c.id, c.display_name, c.definition));
        }
        out
    }
}

fn validate_id(id: &str) -> Result<()> {
    if id.is_empty() {
        return Err(Error::Schema("empty category id".into()));
    }
    if id.chars().any(char::is_whitespace) || id.chars().any(char::is_uppercase) {
        return Err(Error::Schema(format!(
            "category id `{id}` must be lowercase without whitespace"
        )));
    }
    Ok(())
}

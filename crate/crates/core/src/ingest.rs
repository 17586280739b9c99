//! Ingestion of pre-fetched post streams: parsing, originals-only
//! filtering, and text normalization.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_to_string;
use crate::text::{canonicalize, is_emoji, is_word_char};

/// Fraction of malformed records above which a stream is rejected.
pub const MAX_MALFORMED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub is_retweet: bool,
    #[serde(default)]
    pub is_reply: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collected_by_term: Option<String>,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            is_retweet: false,
            is_reply: false,
            created_at: None,
            collected_by_term: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedDocument {
    pub id: String,
    pub text: String,
    pub original_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collected_by_term: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RawStream {
    pub documents: Vec<RawDocument>,
    /// Non-blank lines read.
    pub records: usize,
    /// 1-based line numbers of skipped records.
    pub malformed_lines: Vec<usize>,
}

impl RawStream {
    pub fn malformed(&self) -> usize {
        self.malformed_lines.len()
    }
}

pub fn parse_raw_stream(path: &Path) -> Result<RawStream> {
    let content = read_to_string(path)?;
    parse_raw_str(&content, path)
}

/// Parses JSON-lines records. Lines that fail to parse, lack `id`/`text`,
/// have an empty id, or repeat an earlier id are skipped and counted.
pub fn parse_raw_str(content: &str, origin: &Path) -> Result<RawStream> {
    let mut stream = RawStream::default();
    let mut seen = HashSet::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        stream.records += 1;
        match serde_json::from_str::<RawDocument>(line) {
            Ok(doc) if !doc.id.is_empty() && seen.insert(doc.id.clone()) => stream.documents.push(doc),
            Ok(_) | Err(_) => {
                log::debug!("{}:{}: skipping malformed record", origin.display(), i + 1);
                stream.malformed_lines.push(i + 1);
            }
        }
    }
    if stream.records > 0 && stream.malformed() as f64 / stream.records as f64 > MAX_MALFORMED_FRACTION {
        return Err(Error::TooManyMalformed {
            path: origin.to_owned(),
            malformed: stream.malformed(),
            total: stream.records,
        });
    }
    Ok(stream)
}

/// Keeps original posts only: retweets and replies are dropped.
pub fn filter_originals(docs: impl IntoIterator<Item = RawDocument>) -> Vec<RawDocument> {
    docs.into_iter().filter(|d| !d.is_retweet && !d.is_reply).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeOptions {
    pub remove_urls: bool,
    pub remove_mentions: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            remove_urls: true,
            remove_mentions: true,
        }
    }
}

pub fn normalize_text(doc: &RawDocument, opts: NormalizeOptions) -> NormalizedDocument {
    NormalizedDocument {
        id: doc.id.clone(),
        text: normalize_str(&doc.text, opts),
        original_text: doc.text.clone(),
        collected_by_term: doc.collected_by_term.clone(),
    }
}

fn is_tag_char(c: char) -> bool {
    is_word_char(c) || c == '_'
}

const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

/// Lowercases, composes, strips hashtags (and optionally URLs and
/// mentions), and collapses whitespace. Emoji pass through untouched.
pub fn normalize_str(text: &str, opts: NormalizeOptions) -> String {
    let canon = canonicalize(text);
    let chars: Vec<(usize, char)> = canon.char_indices().collect();
    let mut out = String::with_capacity(canon.len());
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let next_is_tag = chars.get(i + 1).is_some_and(|&(_, n)| is_tag_char(n));
        let prev_is_word = i > 0 && is_tag_char(chars[i - 1].1);

        if (c == '#' || (c == '@' && opts.remove_mentions)) && next_is_tag {
            i += 1;
            while i < chars.len() && is_tag_char(chars[i].1) {
                i += 1;
            }
            out.push(' ');
        } else if opts.remove_urls && !prev_is_word && URL_PREFIXES.iter().any(|p| canon[pos..].starts_with(p)) {
            while i < chars.len() && !chars[i].1.is_whitespace() && !is_emoji(chars[i].1) {
                i += 1;
            }
            out.push(' ');
        } else {
            out.push(c);
            i += 1;
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

//! Tokenization, stop-word removal and lemmatization.
//!
//! The full pipeline is always `tokenize -> remove_stopwords -> lemmatize`.
//! Lexicon features read the tokenized stream only; term features read the
//! output of the full pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assets;
use crate::corpus::Post;
use crate::error::{Error, Result};

/// Suffix rules never shorten a word to fewer than this many characters.
pub const MIN_STEM_CHARS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSequence {
    pub source_post_id: String,
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(source_post_id: impl Into<String>, tokens: Vec<String>) -> Self {
        Self {
            source_post_id: source_post_id.into(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub stopwords: BTreeSet<String>,
    pub lemma_table: BTreeMap<String, String>,
    /// Keyed by `"w1 w2"`.
    pub bigram_merges: BTreeMap<String, String>,
    /// Tried in order; the first suffix that matches wins.
    pub suffix_rules: Vec<(String, String)>,
    pub lowercase: bool,
    pub strip_punctuation: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            stopwords: BTreeSet::new(),
            lemma_table: BTreeMap::new(),
            bigram_merges: BTreeMap::new(),
            suffix_rules: Vec::new(),
            lowercase: true,
            strip_punctuation: true,
        }
    }
}

impl PreprocessConfig {
    /// Bundled English stop-word list and lemma table.
    pub fn bundled() -> Self {
        let mut cfg = Self {
            stopwords: parse_stopwords(assets::STOPWORDS),
            ..Self::default()
        };
        cfg.add_lemmas(assets::LEMMAS)
            .expect("bundled lemma table parses");
        cfg
    }

    /// Missing paths fall back to the bundled files.
    pub fn from_files(stopwords: Option<&Path>, lemmas: Option<&Path>) -> Result<Self> {
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let stop_src = match stopwords {
            Some(p) => read(p)?,
            None => assets::STOPWORDS.to_owned(),
        };
        let lemma_src = match lemmas {
            Some(p) => read(p)?,
            None => assets::LEMMAS.to_owned(),
        };
        let mut cfg = Self {
            stopwords: parse_stopwords(&stop_src),
            ..Self::default()
        };
        cfg.add_lemmas(&lemma_src)?;
        Ok(cfg)
    }

    /// Parse `lemmas.tsv` content into this config.
    ///
    /// * `surface<TAB>lemma` adds a table entry,
    /// * `w1 w2<TAB>lemma` adds a bigram merge,
    /// * `*suffix<TAB>replacement` appends a suffix rule (replacement may be empty).
    pub fn add_lemmas(&mut self, src: &str) -> Result<()> {
        for (i, raw) in src.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (surface, lemma) = line.split_once('\t').ok_or_else(|| {
                Error::Preprocess(format!("lemmas line {}: expected surface<TAB>lemma", i + 1))
            })?;
            let surface = surface.trim().to_lowercase();
            let lemma = lemma.trim().to_lowercase();
            if let Some(suffix) = surface.strip_prefix('*') {
                if suffix.is_empty() {
                    return Err(Error::Preprocess(format!(
                        "lemmas line {}: empty suffix",
                        i + 1
                    )));
                }
                self.suffix_rules.push((suffix.to_owned(), lemma));
                continue;
            }
            if lemma.is_empty() || lemma.chars().any(char::is_whitespace) {
                return Err(Error::Preprocess(format!(
                    "lemmas line {}: lemma must be a single non-empty token",
                    i + 1
                )));
            }
            let words: Vec<&str> = surface.split_whitespace().collect();
            match words.as_slice() {
                [w] => {
                    self.lemma_table.insert((*w).to_owned(), lemma);
                }
                [a, b] => {
                    self.bigram_merges.insert(format!("{a} {b}"), lemma);
                }
                _ => {
                    return Err(Error::Preprocess(format!(
                        "lemmas line {}: surface must be one or two words",
                        i + 1
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn tokenize(&self, post_id: &str, text: &str) -> TokenSequence {
        let tokens = text
            .split_whitespace()
            .filter_map(|raw| {
                let normalized: String = raw
                    .chars()
                    .map(|c| if c == '\u{2019}' { '\'' } else { c })
                    .collect();
                let core = if self.strip_punctuation {
                    normalized.trim_matches(|c: char| !c.is_alphanumeric())
                } else {
                    normalized.as_str()
                };
                if core.is_empty() {
                    return None;
                }
                Some(if self.lowercase {
                    core.to_lowercase()
                } else {
                    core.to_owned()
                })
            })
            .collect();
        TokenSequence::new(post_id, tokens)
    }

    fn lemma_of(&self, token: &str) -> String {
        if let Some(l) = self.lemma_table.get(token) {
            return l.clone();
        }
        for (suffix, replacement) in &self.suffix_rules {
            if let Some(stem) = token.strip_suffix(suffix.as_str()) {
                if stem.chars().count() >= MIN_STEM_CHARS {
                    return format!("{stem}{replacement}");
                }
            }
        }
        token.to_owned()
    }
}

/// Tokenize with default options (lowercase, edge punctuation stripped).
pub fn tokenize(text: &str) -> Vec<String> {
    PreprocessConfig::default().tokenize("", text).tokens
}

pub fn parse_stopwords(src: &str) -> BTreeSet<String> {
    src.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn remove_stopwords(tokens: &TokenSequence, stoplist: &BTreeSet<String>) -> TokenSequence {
    TokenSequence::new(
        tokens.source_post_id.clone(),
        tokens
            .tokens
            .iter()
            .filter(|t| !stoplist.contains(t.as_str()))
            .cloned()
            .collect(),
    )
}

/// Per-token lemma lookup (table first, then suffix rules), followed by
/// bigram merges. A bigram is matched on the surface pair first and on the
/// lemma pair second; a merge consumes both tokens.
pub fn lemmatize(tokens: &TokenSequence, config: &PreprocessConfig) -> TokenSequence {
    let surface = &tokens.tokens;
    let lemmas: Vec<String> = surface.iter().map(|t| config.lemma_of(t)).collect();
    let mut out = Vec::with_capacity(lemmas.len());
    let mut i = 0;
    while i < lemmas.len() {
        if i + 1 < lemmas.len() && !config.bigram_merges.is_empty() {
            let merged = config
                .bigram_merges
                .get(&format!("{} {}", surface[i], surface[i + 1]))
                .or_else(|| {
                    config
                        .bigram_merges
                        .get(&format!("{} {}", lemmas[i], lemmas[i + 1]))
                });
            if let Some(m) = merged {
                out.push(m.clone());
                i += 2;
                continue;
            }
        }
        out.push(lemmas[i].clone());
        i += 1;
    }
    TokenSequence::new(tokens.source_post_id.clone(), out)
}

pub fn preprocess_post(post: &Post, config: &PreprocessConfig) -> TokenSequence {
    let tokens = config.tokenize(&post.id, &post.text);
    let kept = remove_stopwords(&tokens, &config.stopwords);
    lemmatize(&kept, config)
}

//! Labeled post collections, class distributions and stratified fold plans.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// One post. `label` is absent for posts awaiting prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl Post {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<&str>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label: label.map(str::to_owned),
            meta: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// Guess from the file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(CorpusFormat::Csv),
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::Corpus(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// An ordered, validated collection of posts.
///
/// `labels` holds the two class names in ascending order when any post is
/// labeled, and is empty for a fully unlabeled collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    posts: Vec<Post>,
    labels: Vec<String>,
}

impl Corpus {
    /// Validates ids, texts and the two-label invariant.
    pub fn new(posts: Vec<Post>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut labels = BTreeSet::new();
        for (i, post) in posts.iter().enumerate() {
            if post.text.trim().is_empty() {
                return Err(Error::Corpus(format!("empty text at record {}", i + 1)));
            }
            if !seen.insert(post.id.as_str()) {
                return Err(Error::Corpus(format!(
                    "duplicate id {:?} at record {}",
                    post.id,
                    i + 1
                )));
            }
            if let Some(label) = &post.label {
                labels.insert(label.clone());
            }
        }
        check_label_set(&labels)?;
        Ok(Self {
            posts,
            labels: labels.into_iter().collect(),
        })
    }

    /// Like [`Corpus::new`] but without the two-label requirement. Used for
    /// prediction inputs, which may be unlabeled or single-class.
    pub fn unchecked_labels(posts: Vec<Post>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, post) in posts.iter().enumerate() {
            if post.text.trim().is_empty() {
                return Err(Error::Corpus(format!("empty text at record {}", i + 1)));
            }
            if !seen.insert(post.id.as_str()) {
                return Err(Error::Corpus(format!("duplicate id {:?}", post.id)));
            }
        }
        let labels: BTreeSet<String> = posts.iter().filter_map(|p| p.label.clone()).collect();
        Ok(Self {
            posts,
            labels: labels.into_iter().collect(),
        })
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// Label of every post, failing on the first unlabeled one.
    pub fn label_vector(&self) -> Result<Vec<String>> {
        self.posts
            .iter()
            .map(|p| {
                p.label
                    .clone()
                    .ok_or_else(|| Error::Corpus(format!("post {:?} is unlabeled", p.id)))
            })
            .collect()
    }

    /// The sub-corpus at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            posts: indices.iter().map(|&i| self.posts[i].clone()).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for post in &self.posts {
            out.push_str(&serde_json::to_string(post)?);
            out.push('\n');
        }
        Ok(out)
    }
}

fn check_label_set(labels: &BTreeSet<String>) -> Result<()> {
    match labels.len() {
        0 | 2 => Ok(()),
        1 => Err(Error::Corpus(format!(
            "only one class label present ({}); a labeled corpus needs exactly two",
            labels.iter().next().unwrap()
        ))),
        _ => Err(Error::Corpus(format!(
            "expected two class labels, found {}: {}",
            labels.len(),
            labels.iter().cloned().collect::<Vec<_>>().join(", ")
        ))),
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    id: serde_json::Value,
    text: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    meta: BTreeMap<String, serde_json::Value>,
}

fn json_scalar(v: serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s,
        other => other.to_string(),
    }
}

/// Parse posts without validating the corpus invariants.
pub fn parse_posts(content: &str, format: CorpusFormat) -> Result<Vec<Post>> {
    match format {
        CorpusFormat::Jsonl => parse_jsonl(content),
        CorpusFormat::Csv => parse_csv(content),
    }
}

fn parse_jsonl(content: &str) -> Result<Vec<Post>> {
    let mut posts = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let record = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: JsonRecord = serde_json::from_str(line)
            .map_err(|e| Error::Corpus(format!("malformed record {record}: {e}")))?;
        if raw.text.trim().is_empty() {
            return Err(Error::Corpus(format!("empty text at record {record}")));
        }
        posts.push(Post {
            id: json_scalar(raw.id),
            text: raw.text,
            label: raw.label.filter(|l| !l.trim().is_empty()),
            meta: raw
                .meta
                .into_iter()
                .map(|(k, v)| (k, json_scalar(v)))
                .collect(),
        });
    }
    Ok(posts)
}

fn parse_csv(content: &str) -> Result<Vec<Post>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(content.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = col("id").ok_or_else(|| Error::Corpus("csv header lacks an id column".into()))?;
    let text_col =
        col("text").ok_or_else(|| Error::Corpus("csv header lacks a text column".into()))?;
    let label_col = col("label");

    let mut posts = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let record = i + 1;
        let row = row.map_err(|e| Error::Corpus(format!("malformed record {record}: {e}")))?;
        let text = row
            .get(text_col)
            .ok_or_else(|| Error::Corpus(format!("malformed record {record}: missing text")))?;
        if text.trim().is_empty() {
            return Err(Error::Corpus(format!("empty text at record {record}")));
        }
        let id = row
            .get(id_col)
            .ok_or_else(|| Error::Corpus(format!("malformed record {record}: missing id")))?;
        let label = label_col
            .and_then(|c| row.get(c))
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_owned);
        posts.push(Post {
            id: id.to_owned(),
            text: text.to_owned(),
            label,
            meta: BTreeMap::new(),
        });
    }
    Ok(posts)
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Corpus::new(parse_posts(&content, format)?)
}

/// Per-class `(count, fraction)`.
pub fn label_distribution(corpus: &Corpus) -> Result<BTreeMap<String, (usize, f64)>> {
    let labels = corpus.label_vector()?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let n = corpus.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(l, c)| (l, (c, c as f64 / n)))
        .collect())
}

/// Fold assignment for cross-validation. `folds[i]` is the fold of the
/// `i`-th post of the corpus the plan was built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub loo: bool,
    pub seed: u64,
    pub ids: Vec<String>,
    pub folds: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id).map(|i| self.folds[i])
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len())
            .filter(|&i| self.folds[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len())
            .filter(|&i| self.folds[i] != fold)
            .collect()
    }

    /// True when the plan was built for exactly this post order.
    pub fn covers(&self, corpus: &Corpus) -> bool {
        self.ids.len() == corpus.len()
            && self.ids.iter().zip(corpus.posts()).all(|(a, p)| *a == p.id)
    }
}

/// Stratified k-fold plan.
///
/// Posts of each class (classes in ascending name order) are shuffled with
/// [`SplitMix64`] seeded by `seed`, the per-class lists are concatenated, and
/// the `j`-th post of the concatenation goes to fold `j mod k`. Each fold then
/// holds `floor` or `ceil` of `total(c)/k` posts of every class `c`, and
/// `k == n` yields leave-one-out.
pub fn split_stratified(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldPlan> {
    let n = corpus.len();
    if k < 2 {
        return Err(Error::Corpus(format!(
            "fold count must be at least 2, got {k}"
        )));
    }
    if k > n {
        return Err(Error::Corpus(format!(
            "fold count {k} exceeds corpus size {n}"
        )));
    }
    let labels = corpus.label_vector()?;
    let mut rng = SplitMix64::new(seed);
    let mut order = Vec::with_capacity(n);
    for class in corpus.labels() {
        let mut members: Vec<usize> = (0..n).filter(|&i| &labels[i] == class).collect();
        rng.shuffle(&mut members);
        order.extend(members);
    }
    let mut folds = vec![0; n];
    for (j, &i) in order.iter().enumerate() {
        folds[i] = j % k;
    }
    Ok(FoldPlan {
        k,
        loo: k == n,
        seed,
        ids: corpus.posts().iter().map(|p| p.id.clone()).collect(),
        folds,
    })
}

pub fn leave_one_out(corpus: &Corpus, seed: u64) -> Result<FoldPlan> {
    split_stratified(corpus, corpus.len(), seed)
}

//! Term features: vocabulary with document frequencies, tf-idf weighting and
//! chi-squared term/class selection.
//!
//! IDF is the plain ratio `n_docs / df` unless [`IdfMode::Log`] is requested.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{format_value, FeatureMatrix, Provenance};
use crate::preprocess::TokenSequence;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyWire {
    terms: Vec<String>,
    df: Vec<usize>,
    n_docs: usize,
}

/// Retained terms with their document frequency over the documents the
/// vocabulary was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyWire", into = "VocabularyWire")]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    n_docs: usize,
    index: HashMap<String, usize>,
}

impl TryFrom<VocabularyWire> for Vocabulary {
    type Error = Error;

    fn try_from(w: VocabularyWire) -> Result<Self> {
        Vocabulary::from_parts(w.terms, w.df, w.n_docs)
    }
}

impl From<Vocabulary> for VocabularyWire {
    fn from(v: Vocabulary) -> Self {
        VocabularyWire {
            terms: v.terms,
            df: v.df,
            n_docs: v.n_docs,
        }
    }
}

impl Vocabulary {
    pub fn from_parts(terms: Vec<String>, df: Vec<usize>, n_docs: usize) -> Result<Self> {
        if terms.len() != df.len() {
            return Err(Error::Terms("terms and df differ in length".into()));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Terms(format!("duplicate term {t:?}")));
            }
            if df[i] == 0 || df[i] > n_docs {
                return Err(Error::Terms(format!(
                    "df({t}) = {} outside 1..={n_docs}",
                    df[i]
                )));
            }
        }
        Ok(Self {
            terms,
            df,
            n_docs,
            index,
        })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.index.get(term).map(|&i| self.df[i])
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    /// The sub-vocabulary at `cols`, in that order. Document frequencies are
    /// unchanged.
    pub fn restrict(&self, cols: &[usize]) -> Vocabulary {
        Vocabulary::from_parts(
            cols.iter().map(|&c| self.terms[c].clone()).collect(),
            cols.iter().map(|&c| self.df[c]).collect(),
            self.n_docs,
        )
        .expect("restriction of a valid vocabulary")
    }
}

/// Terms with `df >= min_df`, ordered by df descending then term ascending.
pub fn build_vocabulary(docs: &[TokenSequence], min_df: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Terms(
            "cannot build a vocabulary from an empty corpus".into(),
        ));
    }
    if min_df == 0 {
        return Err(Error::Terms("min_df must be at least 1".into()));
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let distinct: BTreeSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, c)| c >= min_df).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_parts(
        kept.iter().map(|(t, _)| (*t).to_owned()).collect(),
        kept.iter().map(|&(_, c)| c).collect(),
        docs.len(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdfMode {
    /// `n_docs / df`
    #[default]
    Raw,
    /// `1 + ln(n_docs / df)`
    Log,
}

impl std::str::FromStr for IdfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(IdfMode::Raw),
            "log" => Ok(IdfMode::Log),
            other => Err(Error::Config(format!("unknown idf mode {other:?}"))),
        }
    }
}

impl IdfMode {
    pub fn weight(self, tf: usize, df: usize, n_docs: usize) -> Result<f64> {
        if df == 0 {
            return Err(Error::Terms(
                "df is 0: term is not in the vocabulary".into(),
            ));
        }
        if df > n_docs {
            return Err(Error::Terms(format!(
                "df {df} exceeds document count {n_docs}"
            )));
        }
        let ratio = n_docs as f64 / df as f64;
        let idf = match self {
            IdfMode::Raw => ratio,
            IdfMode::Log => 1.0 + ratio.ln(),
        };
        Ok(tf as f64 * idf)
    }
}

/// `tf * (n_docs / df)`, with no logarithm.
pub fn tfidf_weight(tf: usize, df: usize, n_docs: usize) -> Result<f64> {
    IdfMode::Raw.weight(tf, df, n_docs)
}

/// Sorted `(column, weight)` pairs; only terms with `tf > 0` appear.
pub type SparseRow = Vec<(usize, f64)>;

pub fn featurize_tfidf(tokens: &TokenSequence, vocab: &Vocabulary, idf: IdfMode) -> SparseRow {
    let mut tf: HashMap<usize, usize> = HashMap::new();
    for t in &tokens.tokens {
        if let Some(i) = vocab.index_of(t) {
            *tf.entry(i).or_default() += 1;
        }
    }
    let mut row: SparseRow = tf
        .into_iter()
        .map(|(i, c)| {
            let w = idf
                .weight(c, vocab.df[i], vocab.n_docs)
                .expect("vocabulary df is in range");
            (i, w)
        })
        .collect();
    row.sort_by_key(|&(i, _)| i);
    row
}

/// Posts-by-terms matrix stored row-wise as sparse rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDocMatrix {
    pub row_ids: Vec<String>,
    pub terms: Vec<String>,
    pub rows: Vec<SparseRow>,
}

impl TermDocMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row]
            .binary_search_by_key(&col, |&(c, _)| c)
            .map_or(0.0, |k| self.rows[row][k].1)
    }

    /// Keep `cols`, renumbered to their position in `cols`.
    pub fn restrict(&self, cols: &[usize]) -> TermDocMatrix {
        let remap: HashMap<usize, usize> = cols.iter().enumerate().map(|(n, &o)| (o, n)).collect();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut out: SparseRow = r
                    .iter()
                    .filter_map(|&(c, w)| remap.get(&c).map(|&n| (n, w)))
                    .collect();
                out.sort_by_key(|&(c, _)| c);
                out
            })
            .collect();
        TermDocMatrix {
            row_ids: self.row_ids.clone(),
            terms: cols.iter().map(|&c| self.terms[c].clone()).collect(),
            rows,
        }
    }

    pub fn to_dense(&self) -> FeatureMatrix {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut dense = vec![0.0; self.n_terms()];
                for &(c, w) in r {
                    dense[c] = w;
                }
                dense
            })
            .collect();
        FeatureMatrix::from_rows(
            self.row_ids.clone(),
            self.terms.clone(),
            Provenance::Term,
            rows,
        )
        .expect("dense conversion preserves shape")
    }

    /// Coordinate text `row,term,value`, one line per stored entry.
    pub fn write_coo<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "term", "value"])?;
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                w.write_record([i.to_string(), self.terms[c].clone(), format_value(v)])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn tfidf_matrix(docs: &[TokenSequence], vocab: &Vocabulary, idf: IdfMode) -> TermDocMatrix {
    TermDocMatrix {
        row_ids: docs.iter().map(|d| d.source_post_id.clone()).collect(),
        terms: vocab.terms.clone(),
        rows: docs
            .iter()
            .map(|d| featurize_tfidf(d, vocab, idf))
            .collect(),
    }
}

/// Columns with the largest mean weight over all rows.
///
/// With the plain-ratio IDF a term's total weight is `n_docs` times its
/// average tf in the posts containing it, so ties are common; they fall to
/// the number of posts containing the term (descending), then the term name.
pub fn top_by_mean_tfidf(matrix: &TermDocMatrix, n: usize) -> Vec<usize> {
    let mut mass = vec![0.0; matrix.n_terms()];
    let mut present = vec![0usize; matrix.n_terms()];
    for r in &matrix.rows {
        for &(c, w) in r {
            mass[c] += w;
            present[c] += 1;
        }
    }
    let rows = matrix.n_rows().max(1) as f64;
    let mut cols: Vec<usize> = (0..matrix.n_terms()).collect();
    cols.sort_by(|&a, &b| {
        (mass[b] / rows)
            .total_cmp(&(mass[a] / rows))
            .then_with(|| present[b].cmp(&present[a]))
            .then_with(|| matrix.terms[a].cmp(&matrix.terms[b]))
    });
    cols.truncate(n);
    cols
}

/// Post counts for one term and one class `l`:
///
/// * `p`: posts of class `l` containing the term
/// * `q`: posts containing the term outside class `l`
/// * `m`: posts of class `l` without the term
/// * `n`: posts outside class `l` without the term
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub d: u64,
    pub p: u64,
    pub q: u64,
    pub m: u64,
    pub n: u64,
}

impl Contingency {
    pub fn new(d: u64, p: u64, q: u64, m: u64, n: u64) -> Result<Self> {
        let c = Self { d, p, q, m, n };
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        if self.p + self.q + self.m + self.n != self.d {
            return Err(Error::Terms(format!(
                "contingency cells {}+{}+{}+{} do not sum to D = {}",
                self.p, self.q, self.m, self.n, self.d
            )));
        }
        Ok(())
    }
}

/// `D (PN - MQ)^2 / ((P+M)(Q+N)(P+Q)(M+N))`, or 0 when a marginal is empty.
pub fn chi_squared(c: &Contingency) -> Result<f64> {
    c.check()?;
    let (p, q, m, n) = (c.p as u128, c.q as u128, c.m as u128, c.n as u128);
    let den = (p + m) * (q + n) * (p + q) * (m + n);
    if den == 0 {
        return Ok(0.0);
    }
    let diff = (p * n).abs_diff(m * q);
    let num = c.d as u128 * diff * diff;
    Ok(num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiEntry {
    pub term: String,
    /// Column in the matrix the selection was computed on.
    pub column: usize,
    pub chi2: f64,
    pub predicted_class: String,
}

/// Terms ordered by chi-squared descending, then term ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSelection {
    pub entries: Vec<ChiEntry>,
}

impl ChiSelection {
    pub fn terms(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.term.as_str()).collect()
    }

    /// `term,chi_squared,predicted_class`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term", "chi_squared", "predicted_class"])?;
        for e in &self.entries {
            w.write_record([
                e.term.clone(),
                format_value(e.chi2),
                e.predicted_class.clone(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Score every term by chi-squared on document presence and keep the top
/// `k`.
///
/// The statistic is computed against the first label in ascending order; for
/// two classes the value is the same either way. A term is attributed to the
/// designated class when its observed presence there is at least the
/// expected `n_class * (P+Q) / D`, and to the other class otherwise.
pub fn select_top_chi(matrix: &TermDocMatrix, labels: &[String], k: usize) -> Result<ChiSelection> {
    if labels.len() != matrix.n_rows() {
        return Err(Error::Terms(format!(
            "{} rows but {} labels",
            matrix.n_rows(),
            labels.len()
        )));
    }
    let classes: BTreeSet<&String> = labels.iter().collect();
    if classes.len() != 2 {
        return Err(Error::Terms(format!(
            "chi-squared selection needs two classes, found {}",
            classes.len()
        )));
    }
    if k == 0 || k > matrix.n_terms() {
        return Err(Error::Terms(format!(
            "k = {k} outside 1..={}",
            matrix.n_terms()
        )));
    }
    let mut it = classes.into_iter();
    let designated = it.next().unwrap().clone();
    let other = it.next().unwrap().clone();

    let d = matrix.n_rows() as u64;
    let n_designated = labels.iter().filter(|l| **l == designated).count() as u64;
    let mut present_in = vec![0u64; matrix.n_terms()];
    let mut present_out = vec![0u64; matrix.n_terms()];
    for (row, label) in matrix.rows.iter().zip(labels) {
        for &(c, w) in row {
            if w > 0.0 {
                if *label == designated {
                    present_in[c] += 1;
                } else {
                    present_out[c] += 1;
                }
            }
        }
    }
    let mut entries = Vec::with_capacity(matrix.n_terms());
    for c in 0..matrix.n_terms() {
        let p = present_in[c];
        let q = present_out[c];
        let cont = Contingency::new(d, p, q, n_designated - p, d - n_designated - q)?;
        let chi2 = chi_squared(&cont)?;
        // p >= n_designated * (p + q) / d, kept in integers.
        let predicted_class = if p * d >= n_designated * (p + q) {
            designated.clone()
        } else {
            other.clone()
        };
        entries.push(ChiEntry {
            term: matrix.terms[c].clone(),
            column: c,
            chi2,
            predicted_class,
        });
    }
    entries.sort_by(|a, b| b.chi2.total_cmp(&a.chi2).then_with(|| a.term.cmp(&b.term)));
    entries.truncate(k);
    Ok(ChiSelection { entries })
}

/// Restrict to the selected terms (in selection order) and multiply each
/// weight by the term's chi-squared value. Rows are not renormalized; terms
/// with chi-squared 0 end up with no stored entries.
pub fn weight_by_chi(matrix: &TermDocMatrix, selection: &ChiSelection) -> TermDocMatrix {
    let cols: Vec<usize> = selection.entries.iter().map(|e| e.column).collect();
    let mut out = matrix.restrict(&cols);
    for row in &mut out.rows {
        row.retain_mut(|(c, w)| {
            *w *= selection.entries[*c].chi2;
            *w > 0.0
        });
    }
    out
}

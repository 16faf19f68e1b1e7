//! Category-lexicon features: the percentage of a post's tokens that fall in
//! each word category, and the ranking of categories by how far apart the
//! two class means sit.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{format_value, FeatureMatrix, Provenance};
use crate::preprocess::TokenSequence;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    Literal(String),
    Prefix(String),
}

impl Pattern {
    pub fn parse(raw: &str) -> std::result::Result<Self, String> {
        let lower = raw.to_lowercase();
        match lower.find('*') {
            None if lower.is_empty() => Err("empty pattern".into()),
            None => Ok(Pattern::Literal(lower)),
            Some(pos) if pos + 1 != lower.len() => {
                Err(format!("wildcard must be the final character in {raw:?}"))
            }
            Some(0) => Err(format!("pattern {raw:?} has no prefix before the wildcard")),
            Some(pos) => Ok(Pattern::Prefix(lower[..pos].to_owned())),
        }
    }

    pub fn matches(&self, token: &str) -> bool {
        match self {
            Pattern::Literal(w) => token == w,
            Pattern::Prefix(p) => token.starts_with(p.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub parent: Option<String>,
    pub patterns: Vec<Pattern>,
}

/// A validated category hierarchy. Categories keep their declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Category>", into = "Vec<Category>")]
pub struct CategoryLexicon {
    categories: Vec<Category>,
    /// For each category: itself, then its ancestors.
    closure: Vec<Vec<usize>>,
    literal_index: HashMap<String, Vec<usize>>,
    prefixes: Vec<(String, usize)>,
}

impl TryFrom<Vec<Category>> for CategoryLexicon {
    type Error = Error;

    fn try_from(categories: Vec<Category>) -> Result<Self> {
        Self::new(categories)
    }
}

impl From<CategoryLexicon> for Vec<Category> {
    fn from(lex: CategoryLexicon) -> Self {
        lex.categories
    }
}

impl CategoryLexicon {
    pub fn new(categories: Vec<Category>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, c) in categories.iter().enumerate() {
            if index.insert(c.name.clone(), i).is_some() {
                return Err(Error::Lexicon(format!("duplicate category {:?}", c.name)));
            }
        }
        let mut parent_of = vec![None; categories.len()];
        for (i, c) in categories.iter().enumerate() {
            if let Some(p) = &c.parent {
                let pi = *index.get(p).ok_or_else(|| {
                    Error::Lexicon(format!("category {:?} has unknown parent {p:?}", c.name))
                })?;
                parent_of[i] = Some(pi);
            }
        }
        let mut closure = Vec::with_capacity(categories.len());
        for i in 0..categories.len() {
            let mut chain = vec![i];
            let mut cur = parent_of[i];
            while let Some(p) = cur {
                if chain.contains(&p) {
                    return Err(Error::Lexicon(format!(
                        "parent cycle through {:?}",
                        categories[i].name
                    )));
                }
                chain.push(p);
                cur = parent_of[p];
            }
            closure.push(chain);
        }
        let mut literal_index: HashMap<String, Vec<usize>> = HashMap::new();
        let mut prefixes = Vec::new();
        for (i, c) in categories.iter().enumerate() {
            for p in &c.patterns {
                match p {
                    Pattern::Literal(w) if w.is_empty() => {
                        return Err(Error::Lexicon(format!("empty pattern in {:?}", c.name)))
                    }
                    Pattern::Prefix(s) if s.is_empty() => {
                        return Err(Error::Lexicon(format!("empty pattern in {:?}", c.name)))
                    }
                    Pattern::Literal(w) => literal_index.entry(w.clone()).or_default().push(i),
                    Pattern::Prefix(s) => prefixes.push((s.clone(), i)),
                }
            }
        }
        Ok(Self {
            categories,
            closure,
            literal_index,
            prefixes,
        })
    }

    /// Parse the line-oriented `.lex` format.
    pub fn parse(src: &str) -> Result<Self> {
        let mut categories: Vec<Category> = Vec::new();
        let mut decl_line: HashMap<String, usize> = HashMap::new();
        for (i, raw) in src.lines().enumerate() {
            let line_no = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let syntax = |msg: String| Error::LexiconSyntax { line: line_no, msg };
            if content.starts_with([' ', '\t']) {
                let cat = categories
                    .last_mut()
                    .ok_or_else(|| syntax("pattern line before any category header".into()))?;
                for word in content.split_whitespace() {
                    let pat = Pattern::parse(word).map_err(syntax)?;
                    if !cat.patterns.contains(&pat) {
                        cat.patterns.push(pat);
                    }
                }
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            let (name, parent) = match words.as_slice() {
                ["category", name] => (*name, None),
                ["category", name, "parent", parent] => (*name, Some(*parent)),
                _ => {
                    return Err(syntax(format!(
                        "expected `category <name> [parent <name>]`, found {:?}",
                        content.trim()
                    )))
                }
            };
            if let Some(first) = decl_line.insert(name.to_owned(), line_no) {
                return Err(syntax(format!(
                    "duplicate category {name:?} (first declared on line {first})"
                )));
            }
            categories.push(Category {
                name: name.to_owned(),
                parent: parent.map(str::to_owned),
                patterns: Vec::new(),
            });
        }
        for c in &categories {
            if let Some(p) = &c.parent {
                if !decl_line.contains_key(p) {
                    return Err(Error::LexiconSyntax {
                        line: decl_line[&c.name],
                        msg: format!("category {:?} names unknown parent {p:?}", c.name),
                    });
                }
            }
        }
        Self::new(categories)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&src)
    }

    /// The bundled demo lexicon.
    pub fn demo() -> Self {
        Self::parse(crate::assets::DEMO_LEXICON).expect("bundled lexicon parses")
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn names(&self) -> Vec<String> {
        self.categories.iter().map(|c| c.name.clone()).collect()
    }

    pub fn pattern_count(&self) -> usize {
        self.categories.iter().map(|c| c.patterns.len()).sum()
    }

    fn matched_indices(&self, token: &str) -> BTreeSet<usize> {
        let mut direct: Vec<usize> = self.literal_index.get(token).cloned().unwrap_or_default();
        direct.extend(
            self.prefixes
                .iter()
                .filter(|(p, _)| token.starts_with(p.as_str()))
                .map(|&(_, i)| i),
        );
        direct
            .into_iter()
            .flat_map(|i| self.closure[i].iter().copied())
            .collect()
    }

    /// Every category the token counts toward, ancestors included.
    pub fn match_token(&self, token: &str) -> BTreeSet<String> {
        self.matched_indices(token)
            .into_iter()
            .map(|i| self.categories[i].name.clone())
            .collect()
    }

    /// Per-category percentages for one post, in [`CategoryLexicon::names`] order.
    pub fn featurize(&self, tokens: &TokenSequence) -> Result<FeatureVector> {
        if tokens.is_empty() {
            return Err(Error::Lexicon(format!(
                "cannot featurize empty post {:?}",
                tokens.source_post_id
            )));
        }
        let mut counts = vec![0usize; self.categories.len()];
        for t in &tokens.tokens {
            for i in self.matched_indices(t) {
                counts[i] += 1;
            }
        }
        Ok(FeatureVector {
            post_id: tokens.source_post_id.clone(),
            names: self.names(),
            counts,
            token_count: tokens.len(),
        })
    }
}

pub fn load_lexicon(path: &Path) -> Result<CategoryLexicon> {
    CategoryLexicon::load(path)
}

pub fn match_token(lexicon: &CategoryLexicon, token: &str) -> BTreeSet<String> {
    lexicon.match_token(token)
}

pub fn featurize_lexicon(
    tokens: &TokenSequence,
    lexicon: &CategoryLexicon,
) -> Result<FeatureVector> {
    lexicon.featurize(tokens)
}

/// Category match counts for one post. Percentages are derived on demand so
/// each value is exactly `100 * count / token_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub post_id: String,
    pub names: Vec<String>,
    pub counts: Vec<usize>,
    pub token_count: usize,
}

impl FeatureVector {
    pub fn values(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| 100.0 * c as f64 / self.token_count as f64)
            .collect()
    }

    pub fn value(&self, category: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == category)?;
        Some(100.0 * self.counts[i] as f64 / self.token_count as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub feature: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub abs_gap: f64,
}

/// Features ordered by `|mean_a - mean_b|` descending, name ascending on ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub class_a: String,
    pub class_b: String,
    pub entries: Vec<RankEntry>,
}

impl FeatureRanking {
    pub fn features(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.feature.as_str()).collect()
    }

    /// `feature,mean_<a>,mean_<b>,abs_gap`
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "feature".to_owned(),
            format!("mean_{}", self.class_a),
            format!("mean_{}", self.class_b),
            "abs_gap".to_owned(),
        ])?;
        for e in &self.entries {
            w.write_record([
                e.feature.clone(),
                format_value(e.mean_a),
                format_value(e.mean_b),
                format_value(e.abs_gap),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Rank columns by the gap between class means. `class_a` is the first of
/// the two labels in ascending order.
pub fn rank_by_mean_gap(matrix: &FeatureMatrix, labels: &[String]) -> Result<FeatureRanking> {
    if matrix.n_rows() != labels.len() {
        return Err(Error::Lexicon(format!(
            "{} rows but {} labels",
            matrix.n_rows(),
            labels.len()
        )));
    }
    let classes: BTreeSet<&String> = labels.iter().collect();
    if classes.len() != 2 {
        return Err(Error::Lexicon(format!(
            "ranking needs exactly two classes, found {}",
            classes.len()
        )));
    }
    let mut it = classes.into_iter();
    let class_a = it.next().unwrap().clone();
    let class_b = it.next().unwrap().clone();
    let n_a = labels.iter().filter(|l| **l == class_a).count() as f64;
    let n_b = labels.len() as f64 - n_a;

    let mut entries: Vec<RankEntry> = (0..matrix.n_cols())
        .map(|j| {
            let (mut sum_a, mut sum_b) = (0.0, 0.0);
            for (row, label) in matrix.rows().zip(labels) {
                if *label == class_a {
                    sum_a += row[j];
                } else {
                    sum_b += row[j];
                }
            }
            let mean_a = sum_a / n_a;
            let mean_b = sum_b / n_b;
            RankEntry {
                feature: matrix.feature_names[j].clone(),
                mean_a,
                mean_b,
                abs_gap: (mean_a - mean_b).abs(),
            }
        })
        .collect();
    entries.sort_by(|x, y| {
        y.abs_gap
            .total_cmp(&x.abs_gap)
            .then_with(|| x.feature.cmp(&y.feature))
    });
    Ok(FeatureRanking {
        class_a,
        class_b,
        entries,
    })
}

/// Keep the top `k` ranked columns, in ranking order.
pub fn select_features(
    matrix: &FeatureMatrix,
    ranking: &FeatureRanking,
    k: usize,
) -> Result<FeatureMatrix> {
    if k == 0 || k > matrix.n_cols() {
        return Err(Error::Lexicon(format!(
            "feature count {k} outside 1..={}",
            matrix.n_cols()
        )));
    }
    let cols = ranked_columns(matrix, ranking, k)?;
    Ok(matrix.select_columns(&cols))
}

/// Column indices of the top `k` ranked features, resolved by name.
pub fn ranked_columns(
    matrix: &FeatureMatrix,
    ranking: &FeatureRanking,
    k: usize,
) -> Result<Vec<usize>> {
    ranking
        .entries
        .iter()
        .take(k)
        .map(|e| {
            matrix
                .feature_names
                .iter()
                .position(|n| *n == e.feature)
                .ok_or_else(|| {
                    Error::Lexicon(format!("ranked feature {:?} not in matrix", e.feature))
                })
        })
        .collect()
}

/// Percentages for many posts over every lexicon category. Posts with no
/// tokens become all-zero rows.
pub fn lexicon_matrix(lexicon: &CategoryLexicon, posts: &[TokenSequence]) -> FeatureMatrix {
    let names = lexicon.names();
    let rows = posts
        .iter()
        .map(|t| match lexicon.featurize(t) {
            Ok(fv) => fv.values(),
            Err(_) => vec![0.0; names.len()],
        })
        .collect();
    FeatureMatrix::from_rows(
        posts.iter().map(|t| t.source_post_id.clone()).collect(),
        names,
        Provenance::Lexicon,
        rows,
    )
    .expect("one value per category")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::tokenize;

    fn tokens(text: &str) -> TokenSequence {
        TokenSequence::new("p", tokenize(text))
    }

    const MINI: &str = "\
category affective
category negemo parent affective
    hate* evil
category anger parent negemo
    hate* yell*
category death
    murder* die
";

    #[test]
    fn demo_lexicon_shape() {
        let lex = CategoryLexicon::demo();
        let with_patterns = lex
            .categories()
            .iter()
            .filter(|c| !c.patterns.is_empty())
            .count();
        assert_eq!(with_patterns, 15);
        assert_eq!(lex.categories().len(), 20);
        assert!(lex.pattern_count() >= 300, "{}", lex.pattern_count());
    }

    #[test]
    fn wildcard_and_closure() {
        let lex = CategoryLexicon::parse(MINI).unwrap();
        assert_eq!(
            lex.match_token("murdered"),
            BTreeSet::from(["death".to_owned()])
        );
        assert!(lex.match_token("flower").is_empty());
        let hate: Vec<String> = lex.match_token("hate").into_iter().collect();
        assert_eq!(hate, ["affective", "anger", "negemo"]);
    }

    #[test]
    fn demo_hierarchy_closure() {
        let lex = CategoryLexicon::demo();
        let hate = lex.match_token("hate");
        for c in ["anger", "negemo", "affective"] {
            assert!(hate.contains(c), "{hate:?}");
        }
        assert!(lex.match_token("abused").contains("negemo"));
        assert!(lex.match_token("murdered").contains("death"));
    }

    #[test]
    fn duplicate_category_line_number() {
        let src = "category anger\n    mad\ncategory anger\n    rage\n";
        match CategoryLexicon::parse(src).unwrap_err() {
            Error::LexiconSyntax { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_lexicons() {
        assert!(CategoryLexicon::parse("category a parent nope\n    x\n").is_err());
        let err = CategoryLexicon::parse("category a\n    ab*c\n").unwrap_err();
        assert!(matches!(err, Error::LexiconSyntax { line: 2, .. }));
        assert!(CategoryLexicon::parse("    orphan\n").is_err());
        assert!(CategoryLexicon::parse("category a\n    *\n").is_err());
        assert!(CategoryLexicon::parse("categry a\n").is_err());
        assert!(CategoryLexicon::parse("category a parent b\ncategory b parent a\n").is_err());
    }

    #[test]
    fn serde_rebuilds_indices() {
        let lex = CategoryLexicon::demo();
        let json = serde_json::to_string(&lex).unwrap();
        let back: CategoryLexicon = serde_json::from_str(&json).unwrap();
        assert_eq!(back.match_token("hate"), lex.match_token("hate"));
    }

    #[test]
    fn posemo_worked_example() {
        let lex = CategoryLexicon::demo();
        let fv = lex
            .featurize(&tokens(
                "Please view, share and is possible donate.  We appreciate your support!",
            ))
            .unwrap();
        assert_eq!(fv.token_count, 11);
        assert_eq!(format!("{:.2}", fv.value("posemo").unwrap()), "36.36");
        assert_eq!(format!("{:.2}", fv.value("focuspresent").unwrap()), "36.36");
        assert_eq!(format!("{:.2}", fv.value("you").unwrap()), "9.09");
        assert_eq!(fv.value("negemo"), Some(0.0));
        assert_eq!(fv.value("shehe"), Some(0.0));
        assert_eq!(fv.value("body"), Some(0.0));
    }

    #[test]
    fn anger_twenty_percent() {
        let lex = CategoryLexicon::parse(MINI).unwrap();
        let fv = lex
            .featurize(&tokens("i yell and he yelled back at me all night"))
            .unwrap();
        assert_eq!(fv.token_count, 10);
        assert_eq!(fv.value("anger"), Some(20.0));
        assert_eq!(fv.value("death"), Some(0.0));
    }

    #[test]
    fn empty_post_rejected() {
        let lex = CategoryLexicon::demo();
        let err = lex.featurize(&tokens("")).unwrap_err();
        assert!(err.to_string().contains("cannot featurize empty post"));
    }

    fn table_iv_fixture() -> (FeatureMatrix, Vec<String>) {
        // Class means: i 3.15/2.02, shehe 10.98/0.39, you 0.59/4.01.
        let rows = vec![
            vec![3.0, 10.0, 0.59],
            vec![3.3, 11.96, 0.59],
            vec![2.02, 0.39, 4.0],
            vec![2.02, 0.39, 4.02],
        ];
        let m = FeatureMatrix::from_rows(
            (0..4).map(|i| i.to_string()).collect(),
            vec!["i".into(), "shehe".into(), "you".into()],
            Provenance::Lexicon,
            rows,
        )
        .unwrap();
        let labels = ["abuse", "abuse", "advice", "advice"]
            .map(String::from)
            .to_vec();
        (m, labels)
    }

    #[test]
    fn ranking_matches_hand_means() {
        let (m, labels) = table_iv_fixture();
        let r = rank_by_mean_gap(&m, &labels).unwrap();
        assert_eq!(r.features(), ["shehe", "you", "i"]);
        let shehe = &r.entries[0];
        assert!((shehe.mean_a - 10.98).abs() < 1e-12);
        assert!((shehe.mean_b - 0.39).abs() < 1e-12);
        assert!((r.entries[2].abs_gap - 1.13).abs() < 1e-12);
        let top = select_features(&m, &r, 1).unwrap();
        assert_eq!(top.feature_names, ["shehe"]);
    }

    #[test]
    fn ties_fall_back_to_name_order() {
        let m = FeatureMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec!["zeta".into(), "alpha".into(), "mid".into()],
            Provenance::Lexicon,
            vec![vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]],
        )
        .unwrap();
        let r = rank_by_mean_gap(&m, &["x".to_owned(), "y".to_owned()]).unwrap();
        assert_eq!(r.features(), ["alpha", "mid", "zeta"]);
        let all = select_features(&m, &r, 3).unwrap();
        assert_eq!(all.feature_names, ["alpha", "mid", "zeta"]);
        assert!(select_features(&m, &r, 0).is_err());
        assert!(select_features(&m, &r, 4).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let (m, _) = table_iv_fixture();
        assert!(rank_by_mean_gap(&m, &vec!["a".to_owned(); 4]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn values_are_counts(words in proptest::collection::vec("[a-z]{1,8}", 1..30)) {
                let lex = CategoryLexicon::demo();
                let mut toks = words.clone();
                toks.extend(["hate".to_owned(), "you".to_owned(), "murdered".to_owned()]);
                let fv = lex.featurize(&TokenSequence::new("p", toks)).unwrap();
                for (v, &c) in fv.values().iter().zip(&fv.counts) {
                    prop_assert!((0.0..=100.0).contains(v));
                    let back = v * fv.token_count as f64 / 100.0;
                    prop_assert!((back - c as f64).abs() < 1e-9);
                }
                for t in &words {
                    let m = lex.match_token(t);
                    for cat in lex.categories() {
                        if let (true, Some(p)) = (m.contains(&cat.name), &cat.parent) {
                            prop_assert!(m.contains(p));
                        }
                    }
                }
            }

            #[test]
            fn ranking_ignores_row_order(
                rows in proptest::collection::vec(proptest::collection::vec(0.0f64..50.0, 4), 4..20),
                seed: u64,
            ) {
                let n = rows.len();
                let labels: Vec<String> = (0..n)
                    .map(|i| if i % 2 == 0 { "a" } else { "b" }.to_owned())
                    .collect();
                let m = FeatureMatrix::from_raw(rows).unwrap();
                let base = rank_by_mean_gap(&m, &labels).unwrap();
                let mut perm: Vec<usize> = (0..n).collect();
                crate::rng::SplitMix64::new(seed).shuffle(&mut perm);
                let shuffled = m.select_rows(&perm);
                let shuffled_labels: Vec<String> = perm.iter().map(|&i| labels[i].clone()).collect();
                let other = rank_by_mean_gap(&shuffled, &shuffled_labels).unwrap();
                prop_assert_eq!(base.features(), other.features());
            }
        }
    }
}

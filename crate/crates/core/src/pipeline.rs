//! Featurizer, optional PCA and classifier fitted as one unit.
//!
//! Everything learned from data (vocabulary, document frequencies, the
//! lexicon ranking, the chi-squared selection, PCA and the classifier) comes
//! from the posts handed to [`PipelineSpec::fit`] and nothing else.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Post};
use crate::error::{Error, Result};
use crate::lexicon::{
    lexicon_matrix, rank_by_mean_gap, ranked_columns, CategoryLexicon, FeatureRanking,
};
use crate::matrix::FeatureMatrix;
use crate::models::{
    self, pca_fit, pca_transform, ClassifierKind, ClassifierModel, ClassifierSpec, Metric,
    NbVariant, PcaModel, PcaTarget,
};
use crate::preprocess::{preprocess_post, PreprocessConfig, TokenSequence};
use crate::terms::{
    build_vocabulary, select_top_chi, tfidf_matrix, top_by_mean_tfidf, weight_by_chi, ChiSelection,
    IdfMode, Vocabulary,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconSpec {
    pub lexicon: CategoryLexicon,
    pub top_k: usize,
    /// Count categories over the stop-word-filtered, lemmatized stream
    /// instead of the raw tokens.
    pub preprocessed: bool,
}

impl LexiconSpec {
    pub fn new(lexicon: CategoryLexicon) -> Self {
        Self {
            lexicon,
            top_k: 15,
            preprocessed: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TermSpec {
    pub min_df: usize,
    pub tfidf_top: usize,
    pub chi_top: usize,
    pub idf: IdfMode,
    pub chi_weighting: bool,
}

impl Default for TermSpec {
    fn default() -> Self {
        Self {
            min_df: 2,
            tfidf_top: 300,
            chi_top: 250,
            idf: IdfMode::Raw,
            chi_weighting: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeaturizerSpec {
    Lexicon(LexiconSpec),
    Terms(TermSpec),
}

impl FeaturizerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            FeaturizerSpec::Lexicon(_) => "lexicon",
            FeaturizerSpec::Terms(_) => "terms",
        }
    }

    /// PCA setting used when none is given: on (95% variance) for lexicon
    /// features, off for terms.
    pub fn default_pca(&self) -> Option<PcaTarget> {
        match self {
            FeaturizerSpec::Lexicon(_) => Some(PcaTarget::Variance(0.95)),
            FeaturizerSpec::Terms(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub preprocess: PreprocessConfig,
    pub featurizer: FeaturizerSpec,
    pub pca: Option<PcaTarget>,
    pub classifier: ClassifierSpec,
}

impl PipelineSpec {
    /// Bundled preprocessing, the featurizer's default PCA setting and
    /// default hyperparameters.
    pub fn new(featurizer: FeaturizerSpec, kind: ClassifierKind, seed: u64) -> Self {
        Self {
            preprocess: PreprocessConfig::bundled(),
            pca: featurizer.default_pca(),
            featurizer,
            classifier: ClassifierSpec::with_defaults(kind, seed),
        }
    }

    /// Short descriptor such as `terms+nb` or `lexicon+pca+svm`.
    pub fn describe(&self) -> String {
        let pca = if self.pca.is_some() { "+pca" } else { "" };
        format!("{}{pca}+{}", self.featurizer.name(), self.classifier.kind)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.featurizer {
            FeaturizerSpec::Lexicon(l) if l.top_k == 0 => {
                return Err(Error::Pipeline("lexicon top_k must be positive".into()))
            }
            FeaturizerSpec::Terms(t) if t.min_df == 0 || t.tfidf_top == 0 || t.chi_top == 0 => {
                return Err(Error::Pipeline(
                    "min_df, tfidf_top and chi_top must be positive".into(),
                ))
            }
            _ => {}
        }
        match self.pca {
            Some(PcaTarget::Variance(v)) if !(v > 0.0 && v <= 1.0) => {
                return Err(Error::Pipeline(format!(
                    "pca variance target {v} outside (0, 1]"
                )))
            }
            Some(PcaTarget::Components(0)) => {
                return Err(Error::Pipeline(
                    "pca component count must be positive".into(),
                ))
            }
            _ => {}
        }
        self.classifier.validate()
    }

    /// Classifier spec with unset kNN metric and NB variant filled in:
    /// cosine and multinomial for term features fed straight to the
    /// classifier, Euclidean and Gaussian otherwise.
    pub fn resolved_classifier(&self) -> ClassifierSpec {
        let mut spec = self.classifier.clone();
        let raw_terms = matches!(self.featurizer, FeaturizerSpec::Terms(_)) && self.pca.is_none();
        let h = &mut spec.hyper;
        h.knn_metric.get_or_insert(if raw_terms {
            Metric::Cosine
        } else {
            Metric::Euclidean
        });
        h.nb_variant.get_or_insert(if raw_terms {
            NbVariant::Multinomial
        } else {
            NbVariant::Gaussian
        });
        spec
    }

    fn tokens(&self, posts: &[Post], raw: bool) -> Vec<TokenSequence> {
        posts
            .iter()
            .map(|p| {
                if raw {
                    self.preprocess.tokenize(&p.id, &p.text)
                } else {
                    preprocess_post(p, &self.preprocess)
                }
            })
            .collect()
    }

    /// Fit on a labeled corpus.
    pub fn fit(&self, corpus: &Corpus) -> Result<FittedPipeline> {
        self.validate()?;
        let y = corpus.label_vector()?;
        let featurizer = match &self.featurizer {
            FeaturizerSpec::Lexicon(spec) => {
                let docs = self.tokens(corpus.posts(), !spec.preprocessed);
                let full = lexicon_matrix(&spec.lexicon, &docs);
                let ranking = rank_by_mean_gap(&full, &y)?;
                if spec.top_k > full.n_cols() {
                    return Err(Error::Pipeline(format!(
                        "top_k {} exceeds the {} lexicon categories",
                        spec.top_k,
                        full.n_cols()
                    )));
                }
                let columns = ranked_columns(&full, &ranking, spec.top_k)?;
                FittedFeaturizer::Lexicon { ranking, columns }
            }
            FeaturizerSpec::Terms(spec) => {
                let docs = self.tokens(corpus.posts(), false);
                let vocabulary = build_vocabulary(&docs, spec.min_df)?;
                if vocabulary.is_empty() {
                    return Err(Error::Pipeline(format!(
                        "no training term reaches min_df {}",
                        spec.min_df
                    )));
                }
                let tfidf = tfidf_matrix(&docs, &vocabulary, spec.idf);
                let top_columns = top_by_mean_tfidf(&tfidf, spec.tfidf_top);
                let reduced = tfidf.restrict(&top_columns);
                let k = spec.chi_top.min(reduced.n_terms());
                let selection = select_top_chi(&reduced, &y, k)?;
                FittedFeaturizer::Terms {
                    vocabulary,
                    top_columns,
                    selection,
                }
            }
        };
        let features = featurize_posts(self, &featurizer, corpus.posts())?;
        let (pca, features) = match self.pca {
            Some(target) => {
                let pca = pca_fit(&features, target)?;
                let out = pca_transform(&pca, &features)?;
                (Some(pca), out)
            }
            None => (None, features),
        };
        let model = models::train(&self.resolved_classifier(), &features, &y)?;
        Ok(FittedPipeline {
            spec: self.clone(),
            labels: [corpus.labels()[0].clone(), corpus.labels()[1].clone()],
            featurizer,
            pca,
            model,
        })
    }
}

fn featurize_posts(
    pipeline: &PipelineSpec,
    featurizer: &FittedFeaturizer,
    posts: &[Post],
) -> Result<FeatureMatrix> {
    match (&pipeline.featurizer, featurizer) {
        (FeaturizerSpec::Lexicon(spec), FittedFeaturizer::Lexicon { columns, .. }) => {
            let docs = pipeline.tokens(posts, !spec.preprocessed);
            Ok(lexicon_matrix(&spec.lexicon, &docs).select_columns(columns))
        }
        (
            FeaturizerSpec::Terms(spec),
            FittedFeaturizer::Terms {
                vocabulary,
                top_columns,
                selection,
            },
        ) => {
            let docs = pipeline.tokens(posts, false);
            let reduced = tfidf_matrix(&docs, vocabulary, spec.idf).restrict(top_columns);
            let out = if spec.chi_weighting {
                weight_by_chi(&reduced, selection)
            } else {
                let cols: Vec<usize> = selection.entries.iter().map(|e| e.column).collect();
                reduced.restrict(&cols)
            };
            Ok(out.to_dense())
        }
        _ => Err(Error::Pipeline(
            "fitted featurizer does not match the pipeline spec".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedFeaturizer {
    Lexicon {
        ranking: FeatureRanking,
        /// Columns of the full category matrix kept, in ranking order.
        columns: Vec<usize>,
    },
    Terms {
        /// Every training term reaching `min_df`.
        vocabulary: Vocabulary,
        /// Vocabulary indices kept by the mean tf-idf cut.
        top_columns: Vec<usize>,
        /// Chi-squared selection over the `top_columns` matrix.
        selection: ChiSelection,
    },
}

/// A fitted pipeline. Serializes to a self-contained JSON document that
/// [`FittedPipeline::predict`] can run from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub spec: PipelineSpec,
    pub labels: [String; 2],
    pub featurizer: FittedFeaturizer,
    pub pca: Option<PcaModel>,
    pub model: ClassifierModel,
}

impl FittedPipeline {
    pub fn ranking(&self) -> Option<&FeatureRanking> {
        match &self.featurizer {
            FittedFeaturizer::Lexicon { ranking, .. } => Some(ranking),
            FittedFeaturizer::Terms { .. } => None,
        }
    }

    pub fn selection(&self) -> Option<&ChiSelection> {
        match &self.featurizer {
            FittedFeaturizer::Terms { selection, .. } => Some(selection),
            FittedFeaturizer::Lexicon { .. } => None,
        }
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        match &self.featurizer {
            FittedFeaturizer::Terms { vocabulary, .. } => Some(vocabulary),
            FittedFeaturizer::Lexicon { .. } => None,
        }
    }

    /// Names of the selected features, in selection order.
    pub fn selected_features(&self) -> Vec<String> {
        match &self.featurizer {
            FittedFeaturizer::Lexicon { ranking, columns } => ranking.entries[..columns.len()]
                .iter()
                .map(|e| e.feature.clone())
                .collect(),
            FittedFeaturizer::Terms { selection, .. } => {
                selection.entries.iter().map(|e| e.term.clone()).collect()
            }
        }
    }

    /// Selected feature values before PCA.
    pub fn featurize(&self, posts: &[Post]) -> Result<FeatureMatrix> {
        featurize_posts(&self.spec, &self.featurizer, posts)
    }

    /// Rows as the classifier sees them.
    pub fn transform(&self, posts: &[Post]) -> Result<FeatureMatrix> {
        let features = self.featurize(posts)?;
        match &self.pca {
            Some(pca) => pca_transform(pca, &features),
            None => Ok(features),
        }
    }

    pub fn predict(&self, posts: &[Post]) -> Result<Vec<String>> {
        let x = self.transform(posts)?;
        x.rows()
            .map(|r| self.model.predict(r).map(str::to_owned))
            .collect()
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        models::to_json_bytes(self)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let p: FittedPipeline = serde_json::from_slice(bytes)
            .map_err(|e| Error::Pipeline(format!("corrupt pipeline file: {e}")))?;
        let model = &p.model;
        if model.labels != p.labels {
            return Err(Error::Pipeline(
                "model labels differ from pipeline labels".into(),
            ));
        }
        if model.kind() != p.spec.classifier.kind {
            return Err(Error::Pipeline(format!(
                "model is {} but the pipeline names {}",
                model.kind(),
                p.spec.classifier.kind
            )));
        }
        let width = match &p.pca {
            Some(pca) => pca.k,
            None => p.selected_features().len(),
        };
        if model.n_features() != width {
            return Err(Error::Pipeline(format!(
                "featurizer yields {width} features but the model expects {}",
                model.n_features()
            )));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::corpus::{parse_posts, CorpusFormat};

    fn demo() -> Corpus {
        Corpus::new(parse_posts(assets::DEMO_CORPUS, CorpusFormat::Jsonl).unwrap()).unwrap()
    }

    fn terms(kind: ClassifierKind) -> PipelineSpec {
        PipelineSpec::new(FeaturizerSpec::Terms(TermSpec::default()), kind, 1)
    }

    #[test]
    fn auto_selected_variants() {
        let s = terms(ClassifierKind::Nb).resolved_classifier();
        assert_eq!(s.hyper.nb_variant, Some(NbVariant::Multinomial));
        assert_eq!(s.hyper.knn_metric, Some(Metric::Cosine));
        let lex = PipelineSpec::new(
            FeaturizerSpec::Lexicon(LexiconSpec::new(CategoryLexicon::demo())),
            ClassifierKind::Knn,
            1,
        );
        let s = lex.resolved_classifier();
        assert_eq!(s.hyper.nb_variant, Some(NbVariant::Gaussian));
        assert_eq!(s.hyper.knn_metric, Some(Metric::Euclidean));
        assert_eq!(lex.describe(), "lexicon+pca+knn");
    }

    #[test]
    fn round_trip_predicts_identically() {
        let corpus = demo();
        for kind in ClassifierKind::ALL {
            for spec in [
                terms(kind),
                PipelineSpec::new(
                    FeaturizerSpec::Lexicon(LexiconSpec::new(CategoryLexicon::demo())),
                    kind,
                    3,
                ),
            ] {
                let fitted = spec.fit(&corpus).unwrap();
                let bytes = fitted.to_json().unwrap();
                let back = FittedPipeline::from_json(&bytes).unwrap();
                assert_eq!(back.to_json().unwrap(), bytes);
                assert_eq!(
                    back.predict(corpus.posts()).unwrap(),
                    fitted.predict(corpus.posts()).unwrap()
                );
            }
        }
    }

    #[test]
    fn vocabulary_comes_from_training_posts_only() {
        let corpus = demo();
        let train: Vec<usize> = (0..corpus.len()).filter(|i| i % 4 != 0).collect();
        let fitted = terms(ClassifierKind::Nb)
            .fit(&corpus.subset(&train))
            .unwrap();
        let mut held_out: Vec<Post> = (0..corpus.len())
            .filter(|i| i % 4 == 0)
            .map(|i| corpus.posts()[i].clone())
            .collect();
        for p in &mut held_out {
            p.text.push_str(" zzsentinel zzsentinel");
        }
        let before = fitted.vocabulary().unwrap().len();
        fitted.predict(&held_out).unwrap();
        assert_eq!(fitted.vocabulary().unwrap().len(), before);
        assert!(!fitted.vocabulary().unwrap().contains("zzsentinel"));
    }

    #[test]
    fn invalid_specs() {
        let mut s = terms(ClassifierKind::Svm);
        s.pca = Some(PcaTarget::Variance(1.5));
        assert!(s.fit(&demo()).is_err());
        let mut s = terms(ClassifierKind::Svm);
        s.featurizer = FeaturizerSpec::Terms(TermSpec {
            chi_top: 0,
            ..TermSpec::default()
        });
        assert!(s.validate().is_err());
    }
}

use std::path::Path;

use intentkit::corpus::{
    label_distribution, leave_one_out, load_corpus, split_stratified, Corpus, CorpusFormat, Post,
};
use intentkit::evaluate::{confusion, cross_validate, fit_fold};
use intentkit::lexicon::CategoryLexicon;
use intentkit::models::ClassifierKind;
use intentkit::pipeline::{FeaturizerSpec, LexiconSpec, PipelineSpec, TermSpec};
use intentkit::preprocess::{preprocess_post, PreprocessConfig};
use intentkit::rng::SplitMix64;
use intentkit::synth::{generate, SynthSpec};

fn demo() -> Corpus {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus.jsonl");
    load_corpus(&p, CorpusFormat::Jsonl).unwrap()
}

fn lexicon_svm(seed: u64) -> PipelineSpec {
    PipelineSpec::new(
        FeaturizerSpec::Lexicon(LexiconSpec::new(CategoryLexicon::demo())),
        ClassifierKind::Svm,
        seed,
    )
}

#[test]
fn demo_corpus_shape() {
    let corpus = demo();
    assert_eq!(corpus.len(), 40);
    let dist = label_distribution(&corpus).unwrap();
    assert_eq!(dist["abuse"].0, 18);
    assert_eq!(dist["advice"].0, 22);
}

#[test]
fn demo_first_post_tokens() {
    let corpus = demo();
    let t = preprocess_post(&corpus.posts()[0], &PreprocessConfig::bundled());
    assert_eq!(t.source_post_id, "d01");
    assert_eq!(
        t.tokens,
        ["please", "reach", "local", "shelter", "help", "stay", "safe"]
    );
}

#[test]
fn demo_lexicon_svm_accuracy() {
    let corpus = demo();
    let plan = split_stratified(&corpus, 10, 42).unwrap();
    let report = cross_validate(&lexicon_svm(42), &corpus, &plan, "abuse", true).unwrap();
    assert!(
        report.micro.accuracy >= 0.90,
        "accuracy {}",
        report.micro.accuracy
    );
    assert_eq!(report.pooled.total(), 40);
}

/// Leave-one-out equals a hand-written loop that trains on n - 1 posts and
/// predicts the held-out one.
#[test]
fn leave_one_out_matches_brute_force() {
    let corpus = generate(&SynthSpec {
        n_posts: 10,
        balance: 0.5,
        seed: 5,
        ..SynthSpec::default()
    })
    .unwrap();
    let spec = PipelineSpec::new(
        FeaturizerSpec::Terms(TermSpec {
            min_df: 1,
            ..TermSpec::default()
        }),
        ClassifierKind::Knn,
        3,
    );
    let plan = leave_one_out(&corpus, 3).unwrap();
    assert_eq!(plan.k, 10);
    let report = cross_validate(&spec, &corpus, &plan, "abuse", false).unwrap();

    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    for held in 0..corpus.len() {
        let fold = plan.folds[held];
        let train: Vec<usize> = (0..corpus.len()).filter(|&i| i != held).collect();
        let mut s = spec.clone();
        s.classifier.seed = 3 + fold as u64;
        let fitted = s.fit(&corpus.subset(&train)).unwrap();
        let post = &corpus.posts()[held];
        predicted.push(
            fitted
                .predict(std::slice::from_ref(post))
                .unwrap()
                .remove(0),
        );
        truth.push(post.label.clone().unwrap());
    }
    assert_eq!(
        report.pooled,
        confusion(&truth, &predicted, "abuse").unwrap()
    );
    for f in &report.folds {
        assert_eq!(f.ids.len(), 1);
        let i = corpus
            .posts()
            .iter()
            .position(|p| p.id == f.ids[0])
            .unwrap();
        assert_eq!(f.predicted[0], predicted[i]);
    }
}

/// Predictions depend only on the training split, not on the order in
/// which test posts are presented.
#[test]
fn test_fold_order_is_irrelevant() {
    let corpus = generate(&SynthSpec {
        n_posts: 80,
        seed: 8,
        ..SynthSpec::default()
    })
    .unwrap();
    let plan = split_stratified(&corpus, 4, 8).unwrap();
    let mut rng = SplitMix64::new(99);
    for spec in [
        lexicon_svm(8),
        PipelineSpec::new(
            FeaturizerSpec::Terms(TermSpec::default()),
            ClassifierKind::Nb,
            8,
        ),
    ] {
        for fold in 0..plan.k {
            let fitted = fit_fold(&spec, &corpus, &plan, fold).unwrap();
            let test: Vec<Post> = plan
                .test_indices(fold)
                .iter()
                .map(|&i| corpus.posts()[i].clone())
                .collect();
            let straight = fitted.predict(&test).unwrap();
            let mut order: Vec<usize> = (0..test.len()).collect();
            rng.shuffle(&mut order);
            let shuffled: Vec<Post> = order.iter().map(|&i| test[i].clone()).collect();
            let got = fitted.predict(&shuffled).unwrap();
            for (j, &i) in order.iter().enumerate() {
                assert_eq!(got[j], straight[i]);
            }
        }
    }
}

#[test]
fn folds_that_lose_a_class_are_reported() {
    let mut posts: Vec<Post> = (0..6)
        .map(|i| Post::new(format!("a{i}"), "hit hurt", Some("abuse")))
        .collect();
    posts.push(Post::new("b0", "hope love", Some("advice")));
    posts.push(Post::new("b1", "hope love", Some("advice")));
    let corpus = Corpus::new(posts).unwrap();
    let plan = split_stratified(&corpus, 2, 1).unwrap();
    // Each advice post lands in a different fold, so both folds still train on
    // two classes; with leave-one-out every fold does too. A single-advice
    // corpus cannot.
    assert!(cross_validate(&lexicon_svm(1), &corpus, &plan, "abuse", false).is_ok());
    let mut one = corpus.posts().to_vec();
    one.pop();
    let corpus = Corpus::new(one).unwrap();
    let plan = leave_one_out(&corpus, 1).unwrap();
    let err = cross_validate(&lexicon_svm(1), &corpus, &plan, "abuse", false)
        .unwrap_err()
        .to_string();
    assert!(err.contains("class"), "{err}");
}

//! Train each classifier on the same lexicon features, score a held-out
//! split, and round-trip one model through its JSON form.

use intentkit::corpus::split_stratified;
use intentkit::lexicon::{lexicon_matrix, CategoryLexicon};
use intentkit::matrix::FeatureMatrix;
use intentkit::models::{load_model, save_model, train, ClassifierKind, ClassifierSpec};
use intentkit::preprocess::{tokenize, TokenSequence};
use intentkit::synth::{generate, SynthSpec};

fn main() -> intentkit::Result<()> {
    let corpus = generate(&SynthSpec {
        n_posts: 300,
        signal_fraction: 0.05,
        ..SynthSpec::default()
    })?;
    let docs: Vec<TokenSequence> = corpus
        .posts()
        .iter()
        .map(|p| TokenSequence::new(p.id.clone(), tokenize(&p.text)))
        .collect();
    let x = lexicon_matrix(&CategoryLexicon::demo(), &docs);
    let y = corpus.label_vector()?;

    // Hold out one fold of five.
    let plan = split_stratified(&corpus, 5, 1)?;
    let (train_idx, test_idx) = (plan.train_indices(0), plan.test_indices(0));
    let x_train: FeatureMatrix = x.select_rows(&train_idx);
    let y_train: Vec<String> = train_idx.iter().map(|&i| y[i].clone()).collect();

    for kind in ClassifierKind::ALL {
        let model = train(&ClassifierSpec::with_defaults(kind, 7), &x_train, &y_train)?;
        let mut correct = 0;
        for &i in &test_idx {
            if model.predict(x.row(i))? == y[i] {
                correct += 1;
            }
        }
        let bytes = save_model(&model)?;
        let reloaded = load_model(&bytes)?;
        let same = test_idx
            .iter()
            .all(|&i| reloaded.predict(x.row(i)).ok() == model.predict(x.row(i)).ok());
        println!(
            "{kind:<4} held-out accuracy {correct}/{}  model json {} bytes, reload agrees: {same}",
            test_idx.len(),
            bytes.len()
        );
    }
    Ok(())
}

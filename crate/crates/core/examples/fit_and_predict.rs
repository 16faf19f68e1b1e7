//! Fit a full pipeline on the demo corpus, save it, load it back and label
//! new posts.

use std::path::Path;

use intentkit::corpus::{load_corpus, CorpusFormat, Post};
use intentkit::lexicon::CategoryLexicon;
use intentkit::models::ClassifierKind;
use intentkit::pipeline::{FeaturizerSpec, FittedPipeline, LexiconSpec, PipelineSpec};

fn main() -> intentkit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus.jsonl");
    let corpus = load_corpus(&path, CorpusFormat::Jsonl)?;
    let spec = PipelineSpec::new(
        FeaturizerSpec::Lexicon(LexiconSpec::new(CategoryLexicon::demo())),
        ClassifierKind::Svm,
        42,
    );
    let fitted = spec.fit(&corpus)?;
    println!("{} using {:?}", spec.describe(), fitted.selected_features());

    let json = fitted.to_json()?;
    let loaded = FittedPipeline::from_json(&json)?;
    let posts = [
        Post::new("n1", "He screamed at me and I am scared to go home", None),
        Post::new(
            "n2",
            "Thank you all for the kind support, we are hopeful",
            None,
        ),
    ];
    for (post, label) in posts.iter().zip(loaded.predict(&posts)?) {
        println!("{label:<7} {}", post.text);
    }
    Ok(())
}

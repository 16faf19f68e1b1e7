//! Principal components of the demo corpus lexicon features.

use std::path::Path;

use intentkit::corpus::{load_corpus, CorpusFormat};
use intentkit::lexicon::{lexicon_matrix, CategoryLexicon};
use intentkit::models::pca::{pca_fit, pca_transform, PcaTarget};
use intentkit::preprocess::{tokenize, TokenSequence};

fn main() -> intentkit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus.jsonl");
    let corpus = load_corpus(&path, CorpusFormat::Jsonl)?;
    let docs: Vec<TokenSequence> = corpus
        .posts()
        .iter()
        .map(|p| TokenSequence::new(p.id.clone(), tokenize(&p.text)))
        .collect();
    let x = lexicon_matrix(&CategoryLexicon::demo(), &docs);

    let model = pca_fit(&x, PcaTarget::Variance(0.95))?;
    println!(
        "{} features -> {} components for 95% of the variance",
        x.n_cols(),
        model.k
    );
    let mut cumulative = 0.0;
    for (i, r) in model.explained_ratio().iter().enumerate().take(model.k) {
        cumulative += r;
        println!(
            "  PC{:<2} {:6.2}%  cumulative {:6.2}%",
            i + 1,
            100.0 * r,
            100.0 * cumulative
        );
    }

    let scores = pca_transform(&model, &x)?;
    println!("\nfirst two scores per post:");
    for (i, post) in corpus.posts().iter().enumerate().take(6) {
        let row = scores.row(i);
        println!(
            "  {} {:<7} {:8.3} {:8.3}",
            post.id,
            post.label.as_deref().unwrap_or("?"),
            row[0],
            row[1]
        );
    }
    Ok(())
}

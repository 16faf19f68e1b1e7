//! Build a tf-idf matrix for the demo corpus, keep the terms with the largest
//! mean weight, then rank them by chi-squared dependence on the label.

use std::path::Path;

use intentkit::corpus::{load_corpus, CorpusFormat};
use intentkit::preprocess::{preprocess_post, PreprocessConfig};
use intentkit::terms::{
    build_vocabulary, chi_squared, select_top_chi, tfidf_matrix, top_by_mean_tfidf, Contingency,
    IdfMode,
};

fn main() -> intentkit::Result<()> {
    // One table by hand: 40 posts, the term occurs in 12 of 18 abuse posts
    // and 2 of 22 advice posts.
    let c = Contingency::new(40, 12, 2, 6, 20)?;
    println!("chi2 for a single 2x2 table: {:.4}", chi_squared(&c)?);

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus.jsonl");
    let corpus = load_corpus(&path, CorpusFormat::Jsonl)?;
    let config = PreprocessConfig::bundled();
    let docs: Vec<_> = corpus
        .posts()
        .iter()
        .map(|p| preprocess_post(p, &config))
        .collect();
    let vocab = build_vocabulary(&docs, 2)?;
    let m = tfidf_matrix(&docs, &vocab, IdfMode::Raw);
    let top = top_by_mean_tfidf(&m, 300);
    let m = m.restrict(&top);
    println!(
        "{} terms with df >= 2, {} kept after the tf-idf cut",
        vocab.len(),
        m.n_terms()
    );

    let selection = select_top_chi(&m, &corpus.label_vector()?, 10.min(m.n_terms()))?;
    println!("\n{:<12} {:>8}  class", "term", "chi2");
    for e in &selection.entries {
        println!("{:<12} {:>8.4}  {}", e.term, e.chi2, e.predicted_class);
    }
    Ok(())
}

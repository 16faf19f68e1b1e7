//! Category percentages for one post, then the demo corpus ranked by the gap
//! between the per-class means.

use std::path::Path;

use intentkit::corpus::{load_corpus, CorpusFormat};
use intentkit::lexicon::{lexicon_matrix, rank_by_mean_gap, CategoryLexicon};
use intentkit::preprocess::{tokenize, TokenSequence};

fn main() -> intentkit::Result<()> {
    let lexicon = CategoryLexicon::demo();
    let text = "Please view, share and is possible donate.  We appreciate your support!";
    let tokens = TokenSequence::new("example", tokenize(text));
    let fv = lexicon.featurize(&tokens)?;
    println!("{text}\n{} tokens", fv.token_count);
    for (name, pct) in fv.names.iter().zip(fv.values()) {
        if pct > 0.0 {
            println!("  {name:<14} {pct:6.2}%");
        }
    }

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus.jsonl");
    let corpus = load_corpus(&path, CorpusFormat::Jsonl)?;
    let docs: Vec<TokenSequence> = corpus
        .posts()
        .iter()
        .map(|p| TokenSequence::new(p.id.clone(), tokenize(&p.text)))
        .collect();
    let matrix = lexicon_matrix(&lexicon, &docs);
    let ranking = rank_by_mean_gap(&matrix, &corpus.label_vector()?)?;
    println!(
        "\nTop categories on the demo corpus ({} vs {}):",
        ranking.class_a, ranking.class_b
    );
    for e in ranking.entries.iter().take(8) {
        println!(
            "  {:<14} {:6.2} {:6.2}  gap {:5.2}",
            e.feature, e.mean_a, e.mean_b, e.abs_gap
        );
    }
    Ok(())
}

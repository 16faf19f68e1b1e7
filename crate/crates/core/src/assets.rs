//! Files bundled into the binary. The same files live under `data/`.

pub const STOPWORDS: &str = include_str!("../data/stopwords.txt");
pub const LEMMAS: &str = include_str!("../data/lemmas.tsv");
pub const DEMO_LEXICON: &str = include_str!("../data/demo.lex");
pub const DEMO_CORPUS: &str = include_str!("../data/demo_corpus.jsonl");

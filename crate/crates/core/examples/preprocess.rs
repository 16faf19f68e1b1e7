//! Tokenize, drop stop words and lemmatize a few posts with the bundled
//! resources.
//!
//!     cargo run --example preprocess -- "I was so scared when he yelled"

use intentkit::corpus::Post;
use intentkit::preprocess::{preprocess_post, tokenize, PreprocessConfig};

fn main() {
    let mut texts: Vec<String> = std::env::args().skip(1).collect();
    if texts.is_empty() {
        texts = vec![
            "He hit me again last night and I was too afraid to call anyone.".into(),
            "Please view, share and is possible donate.  We appreciate your support!".into(),
            "She kept screaming, I'm not going back there.".into(),
        ];
    }
    let config = PreprocessConfig::bundled();
    for (i, text) in texts.iter().enumerate() {
        let post = Post::new(format!("p{}", i + 1), text.as_str(), None);
        println!("{text}");
        println!("  raw:          {:?}", tokenize(text));
        println!(
            "  preprocessed: {:?}",
            preprocess_post(&post, &config).tokens
        );
    }
}

//! Generate a synthetic two-class corpus and print a few posts.
//!
//!     cargo run --example synthetic_corpus -- 0.3

use intentkit::corpus::label_distribution;
use intentkit::synth::{generate, SynthSpec};

fn main() -> intentkit::Result<()> {
    let signal = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("signal fraction"))
        .unwrap_or(0.6);
    let spec = SynthSpec {
        signal_fraction: signal,
        ..SynthSpec::default()
    };
    let corpus = generate(&spec)?;
    for (label, (n, share)) in label_distribution(&corpus)? {
        println!("{label:<8} {n:4} ({:.1}%)", 100.0 * share);
    }
    for p in corpus.posts().iter().take(5) {
        println!("{} [{}] {}", p.id, p.label.as_deref().unwrap_or(""), p.text);
    }
    Ok(())
}

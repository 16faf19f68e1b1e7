//! Synthetic labeled corpora for demos and regression runs.
//!
//! Each post of class `c` takes `round(signal_fraction * len)` tokens from
//! the keyword pool of `c` and fills the rest from a shared vocabulary of
//! pronounceable pseudo-words, then the token order is shuffled.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::assets;
use crate::corpus::{Corpus, Post};
use crate::error::{Error, Result};
use crate::lexicon::CategoryLexicon;
use crate::preprocess::parse_stopwords;
use crate::rng::SplitMix64;

const ABUSE_POOL: &[&str] = &[
    "hit",
    "punched",
    "kicked",
    "slapped",
    "choked",
    "screamed",
    "yelled",
    "beaten",
    "bruises",
    "blood",
    "bleeding",
    "rape",
    "assault",
    "afraid",
    "terrified",
    "scared",
    "hate",
    "cruel",
    "violent",
    "abusive",
    "threatened",
    "kill",
    "murder",
    "dead",
    "funeral",
    "pain",
    "hospital",
    "injured",
    "trauma",
    "attacked",
];

const ADVICE_POOL: &[&str] = &[
    "love",
    "hope",
    "share",
    "support",
    "trust",
    "help",
    "thank",
    "happy",
    "proud",
    "kind",
    "care",
    "strong",
    "safe",
    "good",
    "wonderful",
    "beautiful",
    "bless",
    "encourage",
    "glad",
    "grateful",
    "brave",
    "courage",
    "peace",
    "smile",
    "inspire",
    "generous",
    "friend",
    "plan",
    "tomorrow",
    "welcome",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_posts: usize,
    /// Fraction of posts in the first class.
    pub balance: f64,
    pub labels: [String; 2],
    pub pools: [Vec<String>; 2],
    pub noise_vocab: usize,
    pub tokens_min: usize,
    pub tokens_max: usize,
    pub signal_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_posts: 400,
            balance: 0.45,
            labels: ["abuse".into(), "advice".into()],
            pools: [
                ABUSE_POOL.iter().map(|s| s.to_string()).collect(),
                ADVICE_POOL.iter().map(|s| s.to_string()).collect(),
            ],
            noise_vocab: 200,
            tokens_min: 8,
            tokens_max: 20,
            signal_fraction: 0.6,
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.labels[0] == self.labels[1] {
            return bad("the two class labels must differ".into());
        }
        if self.pools.iter().any(Vec::is_empty) {
            return bad("both keyword pools must be non-empty".into());
        }
        let a: BTreeSet<&String> = self.pools[0].iter().collect();
        let shared: Vec<&str> = self.pools[1]
            .iter()
            .filter(|w| a.contains(w))
            .map(String::as_str)
            .collect();
        if !shared.is_empty() {
            return bad(format!("keyword pools overlap: {}", shared.join(", ")));
        }
        if !(0.0..=1.0).contains(&self.signal_fraction) {
            return bad(format!(
                "signal fraction {} outside [0, 1]",
                self.signal_fraction
            ));
        }
        if self.tokens_min == 0 || self.tokens_min > self.tokens_max {
            return bad(format!(
                "token range {}..={} is empty or starts at 0",
                self.tokens_min, self.tokens_max
            ));
        }
        let n_first = self.class_counts()[0];
        if n_first == 0 || n_first == self.n_posts {
            return bad(format!(
                "{} posts at balance {} leave a class empty",
                self.n_posts, self.balance
            ));
        }
        if self.noise_vocab == 0 && self.signal_fraction < 1.0 {
            return bad("noise vocabulary is empty but signal fraction is below 1".into());
        }
        Ok(())
    }

    /// Posts per class: `round(n * balance)` and the rest.
    pub fn class_counts(&self) -> [usize; 2] {
        let a = (self.n_posts as f64 * self.balance)
            .round()
            .clamp(0.0, self.n_posts as f64) as usize;
        [a, self.n_posts - a]
    }
}

/// `count` distinct consonant-vowel pseudo-words that are neither stop words
/// nor matched by any category of the demo lexicon.
pub fn noise_words(count: usize, rng: &mut SplitMix64) -> Vec<String> {
    const CONSONANTS: &[u8] = b"bdfgklmnprtvz";
    const VOWELS: &[u8] = b"aeiou";
    let lexicon = CategoryLexicon::demo();
    let stop = parse_stopwords(assets::STOPWORDS);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = 2 + rng.below(2) as usize;
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(CONSONANTS[rng.below(CONSONANTS.len() as u64) as usize] as char);
            w.push(VOWELS[rng.below(VOWELS.len() as u64) as usize] as char);
        }
        if stop.contains(&w) || !lexicon.match_token(&w).is_empty() || !seen.insert(w.clone()) {
            continue;
        }
        out.push(w);
    }
    out
}

pub fn generate(spec: &SynthSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let noise = noise_words(spec.noise_vocab, &mut rng);
    let [n_a, n_b] = spec.class_counts();
    let mut classes: Vec<usize> = std::iter::repeat_n(0, n_a)
        .chain(std::iter::repeat_n(1, n_b))
        .collect();
    rng.shuffle(&mut classes);

    let width = spec.n_posts.to_string().len().max(4);
    let mut posts = Vec::with_capacity(spec.n_posts);
    for (i, &c) in classes.iter().enumerate() {
        let len = rng.range_inclusive(spec.tokens_min as u64, spec.tokens_max as u64) as usize;
        let n_signal = (spec.signal_fraction * len as f64).round() as usize;
        let pool = &spec.pools[c];
        let mut tokens: Vec<&str> = Vec::with_capacity(len);
        for _ in 0..n_signal {
            tokens.push(&pool[rng.below(pool.len() as u64) as usize]);
        }
        for _ in n_signal..len {
            tokens.push(&noise[rng.below(noise.len() as u64) as usize]);
        }
        rng.shuffle(&mut tokens);
        posts.push(Post::new(
            format!("s{:0width$}", i + 1),
            tokens.join(" "),
            Some(&spec.labels[c]),
        ));
    }
    Corpus::new(posts)
}

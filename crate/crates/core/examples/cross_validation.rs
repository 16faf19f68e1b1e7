//! Ten-fold stratified cross-validation of both featurizers on a synthetic
//! corpus, with per-fold and pooled metrics.

use intentkit::corpus::split_stratified;
use intentkit::evaluate::{cross_validate, percent};
use intentkit::lexicon::CategoryLexicon;
use intentkit::models::ClassifierKind;
use intentkit::pipeline::{FeaturizerSpec, LexiconSpec, PipelineSpec, TermSpec};
use intentkit::synth::{generate, SynthSpec};

fn main() -> intentkit::Result<()> {
    let corpus = generate(&SynthSpec {
        signal_fraction: 0.05,
        ..SynthSpec::default()
    })?;
    let plan = split_stratified(&corpus, 10, 42)?;
    let specs = [
        PipelineSpec::new(
            FeaturizerSpec::Lexicon(LexiconSpec::new(CategoryLexicon::demo())),
            ClassifierKind::Svm,
            42,
        ),
        PipelineSpec::new(
            FeaturizerSpec::Terms(TermSpec::default()),
            ClassifierKind::Nb,
            42,
        ),
    ];
    for spec in &specs {
        let report = cross_validate(spec, &corpus, &plan, "abuse", true)?;
        println!("{}", report.pipeline);
        for f in &report.folds {
            println!(
                "  fold {:>2}  n={:>2}  acc {:>5}%  F {:>5}%",
                f.fold,
                f.ids.len(),
                percent(f.metrics.accuracy),
                percent(f.metrics.f_measure)
            );
        }
        let m = &report.micro;
        println!(
            "  pooled    P {}%  R {}%  F {}%  acc {}%  ({:.0} ms)\n",
            percent(m.precision),
            percent(m.recall),
            percent(m.f_measure),
            percent(m.accuracy),
            report.timings.total_ms
        );
    }
    Ok(())
}

//! Confusion counts, precision/recall/F-measure/accuracy, Cohen's kappa and
//! cross-validated evaluation of a pipeline.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FoldPlan};
use crate::error::{Error, Result};
use crate::pipeline::{FittedPipeline, PipelineSpec};

/// Counts relative to one designated positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same predictions scored with the other class as positive.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

pub fn confusion(y_true: &[String], y_pred: &[String], positive: &str) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Eval(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Eval("no predictions to score".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t == positive, p == positive) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Which metrics had a zero denominator and were reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degenerate {
    pub precision: bool,
    pub recall: bool,
    pub f_measure: bool,
}

impl Degenerate {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f_measure
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub accuracy: f64,
    pub degenerate: Degenerate,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricSet {
    let (precision, dp) = ratio(cm.tp, cm.tp + cm.fp);
    let (recall, dr) = ratio(cm.tp, cm.tp + cm.fn_);
    let (f_measure, df) = if precision + recall > 0.0 {
        (2.0 * precision * recall / (precision + recall), false)
    } else {
        (0.0, true)
    };
    let (accuracy, _) = ratio(cm.tp + cm.tn, cm.total());
    MetricSet {
        precision,
        recall,
        f_measure,
        accuracy,
        degenerate: Degenerate {
            precision: dp,
            recall: dr,
            f_measure: df,
        },
    }
}

/// Unweighted mean of each metric over `sets`. A flag is set when it is set
/// in any input.
pub fn macro_average(sets: &[MetricSet]) -> MetricSet {
    let n = sets.len().max(1) as f64;
    let mean = |f: fn(&MetricSet) -> f64| sets.iter().map(f).sum::<f64>() / n;
    MetricSet {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f_measure: mean(|m| m.f_measure),
        accuracy: mean(|m| m.accuracy),
        degenerate: Degenerate {
            precision: sets.iter().any(|m| m.degenerate.precision),
            recall: sets.iter().any(|m| m.degenerate.recall),
            f_measure: sets.iter().any(|m| m.degenerate.f_measure),
        },
    }
}

/// `(p_o - p_e) / (1 - p_e)`. When chance agreement is already 1 (both
/// annotators used the same single label throughout) the result is 1.
pub fn cohen_kappa(a: &[String], b: &[String]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Eval(format!(
            "annotations differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Eval("no annotations to compare".into()));
    }
    let n = a.len() as f64;
    let universe: BTreeSet<&String> = a.iter().chain(b).collect();
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let p_e: f64 = universe
        .iter()
        .map(|c| {
            let pa = a.iter().filter(|x| x == c).count() as f64 / n;
            let pb = b.iter().filter(|x| x == c).count() as f64 / n;
            pa * pb
        })
        .sum();
    if p_e >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub ids: Vec<String>,
    pub truth: Vec<String>,
    pub predicted: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    /// Features kept by this fold's featurizer, in selection order.
    pub selected_features: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: f64,
    pub fold_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pipeline: String,
    pub spec: PipelineSpec,
    pub positive: String,
    pub seed: u64,
    pub k: usize,
    pub loo: bool,
    pub folds: Vec<FoldResult>,
    /// Sum of the fold matrices.
    pub pooled: ConfusionMatrix,
    /// Metrics of the pooled counts.
    pub micro: MetricSet,
    /// Mean of the per-fold metrics.
    #[serde(rename = "macro")]
    pub macro_: MetricSet,
    pub timings: Timings,
}

impl EvalReport {
    /// Copy with timings cleared, for comparing two runs.
    pub fn without_timings(&self) -> Self {
        Self {
            timings: Timings::default(),
            ..self.clone()
        }
    }

    /// All predictions keyed by post id, in corpus order.
    pub fn predictions(&self, plan: &FoldPlan) -> Vec<(String, String)> {
        let mut out: Vec<(usize, String, String)> = self
            .folds
            .iter()
            .flat_map(|f| {
                f.ids.iter().zip(&f.predicted).map(|(id, p)| {
                    let pos = plan.ids.iter().position(|x| x == id).unwrap_or(usize::MAX);
                    (pos, id.clone(), p.clone())
                })
            })
            .collect();
        out.sort();
        out.into_iter().map(|(_, id, p)| (id, p)).collect()
    }

    /// Header plus one row per fold and an `ALL` row with the pooled
    /// counts. Metrics are percentages with one decimal.
    pub fn write_csv<W: Write>(&self, out: W, with_header: bool) -> Result<()> {
        write_report_rows(std::slice::from_ref(self), out, with_header)
    }
}

pub const REPORT_COLUMNS: [&str; 10] = [
    "pipeline",
    "fold",
    "Precision",
    "Recall",
    "F-Measure",
    "Accuracy",
    "tp",
    "fp",
    "fn",
    "tn",
];

pub fn percent(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn metric_row(pipeline: &str, fold: &str, m: &MetricSet, cm: &ConfusionMatrix) -> Vec<String> {
    vec![
        pipeline.to_owned(),
        fold.to_owned(),
        percent(m.precision),
        percent(m.recall),
        percent(m.f_measure),
        percent(m.accuracy),
        cm.tp.to_string(),
        cm.fp.to_string(),
        cm.fn_.to_string(),
        cm.tn.to_string(),
    ]
}

pub fn write_report_rows<W: Write>(
    reports: &[EvalReport],
    out: W,
    with_header: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if with_header {
        w.write_record(REPORT_COLUMNS)?;
    }
    for r in reports {
        for f in &r.folds {
            w.write_record(metric_row(
                &r.pipeline,
                &f.fold.to_string(),
                &f.metrics,
                &f.confusion,
            ))?;
        }
        w.write_record(metric_row(&r.pipeline, "ALL", &r.micro, &r.pooled))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// `"abuse"` when it is one of the corpus labels, else the first label.
pub fn default_positive(corpus: &Corpus) -> Option<&str> {
    let labels = corpus.labels();
    labels
        .iter()
        .find(|l| *l == "abuse")
        .or_else(|| labels.first())
        .map(String::as_str)
}

/// Fit the pipeline on the training split of `fold`. The classifier seed is
/// offset by the fold index.
pub fn fit_fold(
    spec: &PipelineSpec,
    corpus: &Corpus,
    plan: &FoldPlan,
    fold: usize,
) -> Result<FittedPipeline> {
    let train_idx = plan.train_indices(fold);
    let train = corpus.subset(&train_idx);
    let classes: BTreeSet<&str> = train
        .posts()
        .iter()
        .filter_map(|p| p.label.as_deref())
        .collect();
    if classes.len() != 2 {
        return Err(Error::Eval(format!(
            "fold {fold}: training split holds {} class(es) ({})",
            classes.len(),
            classes.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    let mut spec = spec.clone();
    spec.classifier.seed = spec.classifier.seed.wrapping_add(fold as u64);
    spec.fit(&train)
        .map_err(|e| Error::Eval(format!("fold {fold}: {e}")))
}

fn run_fold(
    spec: &PipelineSpec,
    corpus: &Corpus,
    plan: &FoldPlan,
    fold: usize,
    positive: &str,
) -> Result<(FoldResult, f64)> {
    let start = Instant::now();
    let fitted = fit_fold(spec, corpus, plan, fold)?;
    let test_idx = plan.test_indices(fold);
    let test = corpus.subset(&test_idx);
    let truth = test.label_vector()?;
    let predicted = fitted.predict(test.posts())?;
    let cm = confusion(&truth, &predicted, positive)?;
    let result = FoldResult {
        fold,
        n_train: corpus.len() - test_idx.len(),
        ids: test.posts().iter().map(|p| p.id.clone()).collect(),
        truth,
        predicted,
        confusion: cm,
        metrics: metrics(&cm),
        selected_features: fitted.selected_features(),
    };
    Ok((result, start.elapsed().as_secs_f64() * 1e3))
}

/// Cross-validate `spec` over the folds of `plan`. Results are merged in fold
/// order, so running folds in parallel gives the same report as running them
/// one by one.
pub fn cross_validate(
    spec: &PipelineSpec,
    corpus: &Corpus,
    plan: &FoldPlan,
    positive: &str,
    parallel: bool,
) -> Result<EvalReport> {
    if !plan.covers(corpus) {
        return Err(Error::Eval(
            "fold plan was built for a different corpus".into(),
        ));
    }
    if !corpus.labels().iter().any(|l| l == positive) {
        return Err(Error::Eval(format!(
            "positive class {positive:?} is not one of {:?}",
            corpus.labels()
        )));
    }
    spec.validate()?;
    let start = Instant::now();
    let n_folds = plan.folds.iter().max().map_or(0, |m| m + 1);
    let run = |f: usize| run_fold(spec, corpus, plan, f, positive);
    let results: Vec<(FoldResult, f64)> = if parallel {
        (0..n_folds)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?
    } else {
        (0..n_folds).map(run).collect::<Result<_>>()?
    };
    let (folds, fold_ms): (Vec<FoldResult>, Vec<f64>) = results.into_iter().unzip();
    let pooled: ConfusionMatrix = folds.iter().map(|f| f.confusion).sum();
    let per_fold: Vec<MetricSet> = folds.iter().map(|f| f.metrics).collect();
    Ok(EvalReport {
        pipeline: spec.describe(),
        spec: spec.clone(),
        positive: positive.to_owned(),
        seed: plan.seed,
        k: plan.k,
        loo: plan.loo,
        micro: metrics(&pooled),
        macro_: macro_average(&per_fold),
        pooled,
        folds,
        timings: Timings {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            fold_ms,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hand_counted_confusion() {
        let cm = confusion(&v(&["a", "a", "b", "b"]), &v(&["a", "b", "b", "b"]), "a").unwrap();
        assert_eq!((cm.tp, cm.fn_, cm.fp, cm.tn), (1, 1, 0, 2));
        let other = confusion(&v(&["a", "a", "b", "b"]), &v(&["a", "b", "b", "b"]), "b").unwrap();
        assert_eq!(other, cm.swapped());
        assert!(confusion(&v(&["a"]), &v(&[]), "a").is_err());
    }

    #[test]
    fn hand_metrics() {
        let m = metrics(&ConfusionMatrix {
            tp: 3,
            fp: 1,
            fn_: 1,
            tn: 5,
        });
        assert_eq!(
            (m.precision, m.recall, m.f_measure, m.accuracy),
            (0.75, 0.75, 0.75, 0.8)
        );
        let perfect = metrics(&ConfusionMatrix {
            tp: 5,
            fp: 0,
            fn_: 0,
            tn: 5,
        });
        assert_eq!(perfect.f_measure, 1.0);
        assert!(!perfect.degenerate.any());
    }

    #[test]
    fn degenerate_flags() {
        let m = metrics(&ConfusionMatrix {
            tp: 0,
            fp: 0,
            fn_: 0,
            tn: 4,
        });
        assert_eq!(m.precision, 0.0);
        assert!(m.degenerate.precision && m.degenerate.recall && m.degenerate.f_measure);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn table_scale_f_measure() {
        // P 0.97 and R 0.96 round to an F-measure of 96%.
        let f: f64 = 2.0 * 0.97 * 0.96 / (0.97 + 0.96);
        assert!((f - 0.965).abs() < 1e-3);
        assert_eq!(percent(f).as_str()[..2], *"96");
    }

    #[test]
    fn kappa_fixtures() {
        let a = v(&["x", "x", "y", "y"]);
        assert_eq!(cohen_kappa(&a, &a).unwrap(), 1.0);
        assert_eq!(cohen_kappa(&a, &v(&["x", "y", "x", "y"])).unwrap(), 0.0);
        assert_eq!(cohen_kappa(&v(&["x", "x"]), &v(&["x", "x"])).unwrap(), 1.0);
        assert!(cohen_kappa(&a, &a[..3]).is_err());
    }

    proptest! {
        #[test]
        fn f_is_harmonic_mean(tp in 0usize..50, fp in 0usize..50, fn_ in 0usize..50, tn in 0usize..50) {
            prop_assume!(tp + fp + fn_ + tn > 0);
            let m = metrics(&ConfusionMatrix { tp, fp, fn_, tn });
            if m.precision + m.recall > 0.0 {
                let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                prop_assert!((m.f_measure - h).abs() < 1e-12);
            }
            prop_assert_eq!(m.accuracy, (tp + tn) as f64 / (tp + fp + fn_ + tn) as f64);
        }

        #[test]
        fn kappa_in_range(pairs in proptest::collection::vec((0u8..3, 0u8..3), 1..40)) {
            let a: Vec<String> = pairs.iter().map(|p| p.0.to_string()).collect();
            let b: Vec<String> = pairs.iter().map(|p| p.1.to_string()).collect();
            let k = cohen_kappa(&a, &b).unwrap();
            prop_assert!((-1.0..=1.0).contains(&k));
            if a.iter().collect::<BTreeSet<_>>().len() > 1 {
                prop_assert_eq!(cohen_kappa(&a, &a).unwrap(), 1.0);
            }
        }
    }
}

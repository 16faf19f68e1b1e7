//! PCA and the four classifiers behind one train/predict contract.
//!
//! Labels are sorted ascending when a model is trained; the first label is
//! class 0 internally and the `+1` side of the SVM.

pub mod knn;
pub mod nb;
pub mod pca;
pub mod svm;
pub mod tree;

use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub use knn::{KnnModel, Metric};
pub use nb::{NbModel, NbVariant};
pub use pca::{pca_fit, pca_transform, PcaModel, PcaTarget};
pub use svm::SvmModel;
pub use tree::Node;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    Nb,
    Dt,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Svm,
        ClassifierKind::Nb,
        ClassifierKind::Dt,
        ClassifierKind::Knn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Nb => "nb",
            ClassifierKind::Dt => "dt",
            ClassifierKind::Knn => "knn",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(ClassifierKind::Svm),
            "nb" => Ok(ClassifierKind::Nb),
            "dt" => Ok(ClassifierKind::Dt),
            "knn" => Ok(ClassifierKind::Knn),
            other => Err(Error::Config(format!("unknown classifier {other:?}"))),
        }
    }
}

/// Hyperparameters for every classifier kind. Only the fields of the chosen
/// kind are read. `knn_metric` and `nb_variant` left unset mean Euclidean
/// and Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub knn_k: usize,
    pub knn_metric: Option<Metric>,
    pub nb_variant: Option<NbVariant>,
    pub nb_alpha: f64,
    pub nb_var_floor: f64,
    pub dt_max_depth: usize,
    pub dt_min_leaf: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            svm_lambda: 1e-3,
            svm_epochs: 200,
            knn_k: 5,
            knn_metric: None,
            nb_variant: None,
            nb_alpha: 1.0,
            nb_var_floor: 1e-6,
            dt_max_depth: 12,
            dt_min_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub hyper: Hyperparams,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, hyper: Hyperparams, seed: u64) -> Result<Self> {
        let spec = Self { kind, hyper, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_defaults(kind: ClassifierKind, seed: u64) -> Self {
        Self {
            kind,
            hyper: Hyperparams::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.hyper;
        let bad = |m: String| Err(Error::Model(m));
        match self.kind {
            ClassifierKind::Svm if !(h.svm_lambda > 0.0 && h.svm_lambda.is_finite()) => {
                bad(format!("svm lambda must be positive, got {}", h.svm_lambda))
            }
            ClassifierKind::Svm if h.svm_epochs == 0 => bad("svm epochs must be positive".into()),
            ClassifierKind::Knn if h.knn_k == 0 => bad("knn k must be positive".into()),
            ClassifierKind::Nb if h.nb_alpha.is_nan() || h.nb_alpha <= 0.0 => {
                bad(format!("nb alpha must be positive, got {}", h.nb_alpha))
            }
            ClassifierKind::Nb if h.nb_var_floor.is_nan() || h.nb_var_floor <= 0.0 => bad(format!(
                "nb variance floor must be positive, got {}",
                h.nb_var_floor
            )),
            ClassifierKind::Dt if h.dt_max_depth == 0 || h.dt_min_leaf == 0 => {
                bad("dt max depth and min leaf must be positive".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub n_features: usize,
    pub root: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Svm(SvmModel),
    Nb(NbModel),
    Dt(TreeModel),
    Knn(KnnModel),
}

/// A trained classifier together with its two label names.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub labels: [String; 2],
    pub params: ModelParams,
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        match self.params {
            ModelParams::Svm(_) => ClassifierKind::Svm,
            ModelParams::Nb(_) => ClassifierKind::Nb,
            ModelParams::Dt(_) => ClassifierKind::Dt,
            ModelParams::Knn(_) => ClassifierKind::Knn,
        }
    }

    pub fn n_features(&self) -> usize {
        match &self.params {
            ModelParams::Svm(m) => m.weights.len(),
            ModelParams::Nb(m) => m.n_features(),
            ModelParams::Dt(m) => m.n_features,
            ModelParams::Knn(m) => m.rows.first().map_or(0, Vec::len),
        }
    }

    /// Class index (0 or 1) for one feature row.
    pub fn predict_index(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features() {
            return Err(Error::Model(format!(
                "model expects {} features, got {}",
                self.n_features(),
                x.len()
            )));
        }
        Ok(match &self.params {
            ModelParams::Svm(m) => usize::from(m.decision(x) < 0.0),
            ModelParams::Nb(m) => m.predict(x),
            ModelParams::Dt(m) => m.root.predict(x),
            ModelParams::Knn(m) => m.predict(x),
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<&str> {
        Ok(&self.labels[self.predict_index(x)?])
    }
}

fn encode_labels(y: &[String]) -> Result<([String; 2], Vec<usize>)> {
    let classes: BTreeSet<&String> = y.iter().collect();
    if classes.len() != 2 {
        return Err(Error::Model(format!(
            "training needs exactly two classes, found {}",
            classes.len()
        )));
    }
    let mut it = classes.into_iter();
    let labels = [it.next().unwrap().clone(), it.next().unwrap().clone()];
    let idx = y.iter().map(|l| usize::from(*l == labels[1])).collect();
    Ok((labels, idx))
}

pub fn train(spec: &ClassifierSpec, x: &FeatureMatrix, y: &[String]) -> Result<ClassifierModel> {
    spec.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::Model(format!(
            "{} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if x.has_nan() {
        return Err(Error::Model(
            "training matrix contains NaN or infinite values".into(),
        ));
    }
    let (labels, classes) = encode_labels(y)?;
    let rows: Vec<&[f64]> = x.rows().collect();
    let h = &spec.hyper;
    let params = match spec.kind {
        ClassifierKind::Svm => {
            let targets: Vec<f64> = classes
                .iter()
                .map(|&c| if c == 0 { 1.0 } else { -1.0 })
                .collect();
            let p = svm::SvmParams {
                lambda: h.svm_lambda,
                epochs: h.svm_epochs,
            };
            ModelParams::Svm(svm::train(&rows, &targets, p, spec.seed).0)
        }
        ClassifierKind::Nb => ModelParams::Nb(match h.nb_variant.unwrap_or(NbVariant::Gaussian) {
            NbVariant::Gaussian => nb::fit_gaussian(&rows, &classes, h.nb_var_floor),
            NbVariant::Multinomial => nb::fit_multinomial(&rows, &classes, h.nb_alpha)?,
        }),
        ClassifierKind::Dt => ModelParams::Dt(TreeModel {
            n_features: x.n_cols(),
            root: tree::fit(
                &rows,
                &classes,
                tree::TreeParams {
                    max_depth: h.dt_max_depth,
                    min_leaf: h.dt_min_leaf,
                },
            ),
        }),
        ClassifierKind::Knn => ModelParams::Knn(KnnModel {
            k: h.knn_k,
            metric: h.knn_metric.unwrap_or(Metric::Euclidean),
            rows: rows.iter().map(|r| r.to_vec()).collect(),
            classes,
        }),
    };
    Ok(ClassifierModel { labels, params })
}

pub fn predict<'m>(model: &'m ClassifierModel, x: &[f64]) -> Result<&'m str> {
    model.predict(x)
}

/// JSON formatter that writes every float with 17 significant digits.
pub struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serialize with [`SeventeenDigits`].
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    value.serialize(&mut ser)?;
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    kind: ClassifierKind,
    labels: [String; 2],
    params: serde_json::Value,
}

impl Serialize for ClassifierModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        let params = match &self.params {
            ModelParams::Svm(m) => serde_json::to_value(m),
            ModelParams::Nb(m) => serde_json::to_value(m),
            ModelParams::Dt(m) => serde_json::to_value(m),
            ModelParams::Knn(m) => serde_json::to_value(m),
        }
        .map_err(S::Error::custom)?;
        Envelope {
            format_version: MODEL_FORMAT_VERSION,
            kind: self.kind(),
            labels: self.labels.clone(),
            params,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassifierModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let env = Envelope::deserialize(d)?;
        from_envelope(env).map_err(D::Error::custom)
    }
}

fn from_envelope(env: Envelope) -> Result<ClassifierModel> {
    if env.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Model(format!(
            "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
            env.format_version
        )));
    }
    let wrong = |e: serde_json::Error| {
        Error::Model(format!("params do not describe a {} model: {e}", env.kind))
    };
    let params = match env.kind {
        ClassifierKind::Svm => {
            let m: SvmModel = serde_json::from_value(env.params).map_err(wrong)?;
            let d = m.weights.len();
            if m.scaler.mean.len() != d || m.scaler.scale.len() != d {
                return Err(Error::Model("svm scaler does not match weights".into()));
            }
            ModelParams::Svm(m)
        }
        ClassifierKind::Nb => {
            let m: NbModel = serde_json::from_value(env.params).map_err(wrong)?;
            let consistent = match &m {
                NbModel::Gaussian { mean, var, .. } => {
                    mean[0].len() == mean[1].len()
                        && var[0].len() == mean[0].len()
                        && var[1].len() == mean[0].len()
                }
                NbModel::Multinomial {
                    feature_log_prob, ..
                } => feature_log_prob[0].len() == feature_log_prob[1].len(),
            };
            if !consistent {
                return Err(Error::Model("naive Bayes tables differ in length".into()));
            }
            ModelParams::Nb(m)
        }
        ClassifierKind::Dt => {
            let m: TreeModel = serde_json::from_value(env.params).map_err(wrong)?;
            if m.root.max_feature().is_some_and(|f| f >= m.n_features) {
                return Err(Error::Model("tree splits on a feature out of range".into()));
            }
            ModelParams::Dt(m)
        }
        ClassifierKind::Knn => {
            let m: KnnModel = serde_json::from_value(env.params).map_err(wrong)?;
            let d = m.rows.first().map_or(0, Vec::len);
            if m.rows.is_empty()
                || m.rows.len() != m.classes.len()
                || m.rows.iter().any(|r| r.len() != d)
                || m.classes.iter().any(|&c| c > 1)
            {
                return Err(Error::Model("knn training table is inconsistent".into()));
            }
            ModelParams::Knn(m)
        }
    };
    Ok(ClassifierModel {
        labels: env.labels,
        params,
    })
}

pub fn save_model(model: &ClassifierModel) -> Result<Vec<u8>> {
    to_json_bytes(model)
}

pub fn load_model(bytes: &[u8]) -> Result<ClassifierModel> {
    let env: Envelope = serde_json::from_slice(bytes)
        .map_err(|e| Error::Model(format!("corrupt model payload: {e}")))?;
    from_envelope(env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn fixture(n: usize, d: usize, seed: u64) -> (FeatureMatrix, Vec<String>) {
        let mut rng = SplitMix64::new(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let class = i % 2;
            let shift = if class == 0 { 1.5 } else { -1.5 };
            rows.push((0..d).map(|_| rng.next_f64() * 4.0 - 2.0 + shift).collect());
            y.push(if class == 0 { "abuse" } else { "advice" }.to_owned());
        }
        (FeatureMatrix::from_raw(rows).unwrap(), y)
    }

    #[test]
    fn svm_sign_convention() {
        let model = ClassifierModel {
            labels: ["abuse".into(), "advice".into()],
            params: ModelParams::Svm(SvmModel {
                weights: vec![1.0, 0.0],
                bias: 0.0,
                scaler: svm::Scaler {
                    mean: vec![0.0, 0.0],
                    scale: vec![1.0, 1.0],
                },
            }),
        };
        assert_eq!(model.predict(&[3.0, -5.0]).unwrap(), "abuse");
        assert_eq!(model.predict(&[-3.0, 5.0]).unwrap(), "advice");
        assert!(model.predict(&[1.0]).is_err());
    }

    #[test]
    fn training_errors() {
        let (x, y) = fixture(6, 2, 1);
        let spec = ClassifierSpec::with_defaults(ClassifierKind::Svm, 0);
        assert!(train(&spec, &x, &vec!["a".to_owned(); 6]).is_err());
        assert!(train(&spec, &x, &y[..5]).is_err());
        let nan = FeatureMatrix::from_raw(vec![vec![f64::NAN], vec![1.0]]).unwrap();
        assert!(train(&spec, &nan, &["a".into(), "b".into()]).is_err());
        let mut bad = spec.clone();
        bad.hyper.svm_lambda = 0.0;
        assert!(train(&bad, &x, &y).is_err());
    }

    #[test]
    fn dt_single_split_training_accuracy() {
        let x = FeatureMatrix::from_raw(vec![
            vec![0.1, 5.0],
            vec![0.2, 1.0],
            vec![0.3, 3.0],
            vec![0.9, 4.0],
            vec![0.8, 2.0],
            vec![0.7, 6.0],
        ])
        .unwrap();
        let y: Vec<String> = ["a", "a", "a", "b", "b", "b"].map(String::from).to_vec();
        let m = train(
            &ClassifierSpec::with_defaults(ClassifierKind::Dt, 0),
            &x,
            &y,
        )
        .unwrap();
        match &m.params {
            ModelParams::Dt(t) => assert_eq!(t.root.depth(), 1),
            _ => unreachable!(),
        }
        for (r, l) in x.rows().zip(&y) {
            assert_eq!(m.predict(r).unwrap(), l);
        }
    }

    #[test]
    fn round_trip_all_kinds() {
        let (x, y) = fixture(40, 3, 11);
        let (probe, _) = fixture(100, 3, 99);
        for kind in ClassifierKind::ALL {
            let spec = ClassifierSpec::with_defaults(kind, 7);
            let m = train(&spec, &x, &y).unwrap();
            let bytes = save_model(&m).unwrap();
            let back = load_model(&bytes).unwrap();
            assert_eq!(back, m, "{kind}");
            for r in probe.rows() {
                assert_eq!(back.predict(r).unwrap(), m.predict(r).unwrap());
            }
            assert_eq!(save_model(&back).unwrap(), bytes, "{kind} re-save");
            assert!(load_model(&bytes[..bytes.len() / 2]).is_err());
        }
    }

    #[test]
    fn floats_use_seventeen_digits() {
        let bytes = to_json_bytes(&vec![0.1f64, 1.0, -2.5e-7]).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "[1.0000000000000001e-1,1.0000000000000000e0,-2.4999999999999999e-7]"
        );
    }

    #[test]
    fn version_and_kind_mismatch() {
        let (x, y) = fixture(10, 2, 3);
        let m = train(
            &ClassifierSpec::with_defaults(ClassifierKind::Nb, 0),
            &x,
            &y,
        )
        .unwrap();
        let mut v: serde_json::Value = serde_json::from_slice(&save_model(&m).unwrap()).unwrap();
        v["kind"] = "knn".into();
        assert!(load_model(v.to_string().as_bytes()).is_err());
        v["kind"] = "nb".into();
        v["format_version"] = 99.into();
        let err = load_model(v.to_string().as_bytes()).unwrap_err();
        assert!(err.to_string().contains("version"));
    }

    #[test]
    fn nb_argmax_invariant_to_score_shift() {
        let (x, y) = fixture(30, 3, 5);
        let m = train(
            &ClassifierSpec::with_defaults(ClassifierKind::Nb, 0),
            &x,
            &y,
        )
        .unwrap();
        let ModelParams::Nb(nb) = &m.params else {
            unreachable!()
        };
        for r in x.rows() {
            let j = nb.joint_log_likelihood(r);
            // Scaling both unnormalized scores by c > 0 adds ln(c) in log space.
            for c in [1e-6f64, 0.5, 3.0, 1e9] {
                let shifted = [j[0] + c.ln(), j[1] + c.ln()];
                assert_eq!(usize::from(shifted[1] > shifted[0]), nb.predict(r));
            }
        }
    }
}

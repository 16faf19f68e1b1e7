//! The `intentkit` command line: `synth`, `run`, `predict`, `compare` and
//! `kappa`.
//!
//! `run` and `compare` read a TOML experiment file. Relative paths inside it
//! are resolved against the file's directory, and command-line flags override
//! its values:
//!
//! ```toml
//! seed = 42
//! positive_class = "abuse"
//! pca = "0.95"            # "off", a fraction like "0.95", or a count like "5"
//!
//! [corpus]
//! path = "demo_corpus.jsonl"
//!
//! [lexicon]               # or [terms], never both
//! top_k = 15
//!
//! [classifier]
//! kind = "svm"
//!
//! [eval]
//! folds = 10
//! ```
//!
//! Every CSV written starts with `# config_hash=<hex> seed=<n>`.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{parse_posts, split_stratified, Corpus, CorpusFormat};
use crate::error::{Error, Result};
use crate::evaluate::{cohen_kappa, cross_validate, default_positive, percent, EvalReport};
use crate::lexicon::CategoryLexicon;
use crate::models::{to_json_bytes, ClassifierKind, ClassifierSpec, Hyperparams, PcaTarget};
use crate::pipeline::{FeaturizerSpec, FittedPipeline, LexiconSpec, PipelineSpec, TermSpec};
use crate::preprocess::PreprocessConfig;
use crate::synth::{generate, SynthSpec};

pub const OUT_DIR_ENV: &str = "INTENTKIT_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "intentkit",
    version,
    about = "Binary intent classification of posts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled corpus as JSONL.
    Synth(SynthArgs),
    /// Cross-validate a pipeline and fit it on the whole corpus.
    Run(RunArgs),
    /// Label posts with a fitted pipeline; writes JSONL to stdout.
    Predict(PredictArgs),
    /// Cross-validate several configurations and rank them by accuracy.
    Compare(CompareArgs),
    /// Cohen's kappa between two label files (one label per line).
    Kappa(KappaArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML file with synthesis settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub balance: Option<f64>,
    #[arg(long)]
    pub signal: Option<f64>,
    #[arg(long)]
    pub noise_vocab: Option<usize>,
    #[arg(long)]
    pub tokens_min: Option<usize>,
    #[arg(long)]
    pub tokens_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeaturizerArg {
    Lexicon,
    Terms,
}

/// Flags shared by `run` and `compare`; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Labeled posts (JSONL or CSV).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// `jsonl` or `csv`; guessed from the extension otherwise.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<CorpusFormat>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of stratified folds.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Leave-one-out instead of k folds.
    #[arg(long)]
    pub loo: bool,
    #[arg(long, value_enum)]
    pub featurizer: Option<FeaturizerArg>,
    /// `svm`, `nb`, `dt` or `knn`.
    #[arg(long, value_parser = parse_kind)]
    pub classifier: Option<ClassifierKind>,
    /// `off`, a variance fraction such as `0.95`, or a component count.
    #[arg(long, value_parser = parse_pca)]
    pub pca: Option<PcaSetting>,
    /// Label scored as positive by precision and recall.
    #[arg(long)]
    pub positive_class: Option<String>,
    /// Run folds one after another instead of in parallel.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment TOML file.
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(short, long, env = OUT_DIR_ENV, default_value = "intentkit-out")]
    pub out: PathBuf,
    /// Allow writing into an existing, non-empty output directory.
    #[arg(long)]
    pub force: bool,
    /// Skip cross-validation; only fit and save the pipeline.
    #[arg(long)]
    pub no_eval: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// `pipeline.json`, or a `run` output directory containing it.
    #[arg(long)]
    pub model: PathBuf,
    /// Posts to label; stdin when omitted or `-`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<CorpusFormat>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Experiment TOML files; all must use the same corpus.
    #[arg(required = true)]
    pub configs: Vec<PathBuf>,
    /// Evaluate every config once per listed classifier, e.g. `svm,nb,dt,knn`.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub classifiers: Vec<ClassifierKind>,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    pub labels_a: PathBuf,
    pub labels_b: PathBuf,
}

fn parse_format(s: &str) -> std::result::Result<CorpusFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<ClassifierKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pca(s: &str) -> std::result::Result<PcaSetting, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// PCA as written in configs and flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PcaSetting {
    Off,
    Target(PcaTarget),
}

impl std::str::FromStr for PcaSetting {
    type Err = Error;

    /// `off`; a number with a decimal point is a variance fraction; a plain
    /// integer is a component count.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("off") || s.eq_ignore_ascii_case("none") {
            return Ok(PcaSetting::Off);
        }
        let bad = || Error::Config(format!("pca must be off, a fraction or a count, got {s:?}"));
        if s.contains('.') {
            let v: f64 = s.parse().map_err(|_| bad())?;
            Ok(PcaSetting::Target(PcaTarget::Variance(v)))
        } else {
            let k: usize = s.parse().map_err(|_| bad())?;
            Ok(PcaSetting::Target(PcaTarget::Components(k)))
        }
    }
}

impl PcaSetting {
    fn target(self) -> Option<PcaTarget> {
        match self {
            PcaSetting::Off => None,
            PcaSetting::Target(t) => Some(t),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub positive_class: Option<String>,
    pub pca: Option<toml::Value>,
    pub corpus: Option<CorpusSection>,
    pub preprocess: Option<PreprocessSection>,
    pub lexicon: Option<LexiconSection>,
    pub terms: Option<TermSpec>,
    pub classifier: Option<ClassifierSection>,
    pub eval: Option<EvalSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    pub format: Option<CorpusFormat>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub stopwords: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconSection {
    /// Category file; the bundled demo lexicon when absent.
    pub path: Option<PathBuf>,
    pub top_k: usize,
    pub preprocessed: bool,
}

impl Default for LexiconSection {
    fn default() -> Self {
        Self {
            path: None,
            top_k: 15,
            preprocessed: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    pub kind: ClassifierKind,
    #[serde(flatten)]
    pub hyper: Hyperparams,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub folds: Option<usize>,
    pub loo: bool,
}

impl RunConfig {
    pub fn parse(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&src).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Evaluation plan settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Folds {
    K(usize),
    Loo,
}

/// A config with overrides applied, files loaded and paths checked.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: PipelineSpec,
    pub corpus: Corpus,
    pub corpus_path: PathBuf,
    pub corpus_sha256: String,
    pub folds: Folds,
    pub seed: u64,
    pub positive: String,
}

#[derive(Serialize)]
struct HashInput<'a> {
    spec: &'a PipelineSpec,
    corpus_sha256: &'a str,
    folds: Folds,
    seed: u64,
    positive: &'a str,
}

impl Experiment {
    /// First 16 hex digits of the SHA-256 of the resolved settings.
    pub fn config_hash(&self) -> String {
        let input = HashInput {
            spec: &self.spec,
            corpus_sha256: &self.corpus_sha256,
            folds: self.folds,
            seed: self.seed,
            positive: &self.positive,
        };
        let bytes = to_json_bytes(&input).expect("settings serialize");
        hex::encode(Sha256::digest(&bytes))[..16].to_owned()
    }

    pub fn header(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash(), self.seed)
    }

    pub fn fold_plan(&self) -> Result<crate::corpus::FoldPlan> {
        let k = match self.folds {
            Folds::K(k) => k,
            Folds::Loo => self.corpus.len(),
        };
        split_stratified(&self.corpus, k, self.seed)
    }
}

fn resolve_path(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn require_file(p: &Path, what: &str) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} {} does not exist",
            p.display()
        )))
    }
}

/// Merge a config file (if any) with flag overrides into an [`Experiment`].
/// Fails before any work when the config names both featurizers or a
/// referenced file is missing.
pub fn resolve(config: Option<&Path>, o: &Overrides) -> Result<Experiment> {
    let cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let base = config.and_then(Path::parent);
    if cfg.lexicon.is_some() && cfg.terms.is_some() {
        return Err(Error::Config(
            "config sets both [lexicon] and [terms]; choose one featurizer".into(),
        ));
    }

    let (corpus_path, cfg_format) = match (&o.corpus, &cfg.corpus) {
        (Some(p), _) => (p.clone(), None),
        (None, Some(c)) => (resolve_path(base, &c.path), c.format),
        (None, None) => {
            return Err(Error::Config(
                "no corpus given (use --corpus or [corpus])".into(),
            ))
        }
    };
    require_file(&corpus_path, "corpus")?;
    let stopwords = cfg
        .preprocess
        .as_ref()
        .and_then(|p| p.stopwords.as_ref())
        .map(|p| resolve_path(base, p));
    let lemmas = cfg
        .preprocess
        .as_ref()
        .and_then(|p| p.lemmas.as_ref())
        .map(|p| resolve_path(base, p));
    for p in stopwords.iter().chain(&lemmas) {
        require_file(p, "preprocess file")?;
    }
    let lexicon_path = cfg
        .lexicon
        .as_ref()
        .and_then(|l| l.path.as_ref())
        .map(|p| resolve_path(base, p));
    if let Some(p) = &lexicon_path {
        require_file(p, "lexicon")?;
    }

    let use_terms = match o.featurizer {
        Some(f) => f == FeaturizerArg::Terms,
        None => cfg.terms.is_some(),
    };
    let featurizer = if use_terms {
        FeaturizerSpec::Terms(cfg.terms.unwrap_or_default())
    } else {
        let section = cfg.lexicon.clone().unwrap_or_default();
        let lexicon = match &lexicon_path {
            Some(p) => CategoryLexicon::load(p)?,
            None => CategoryLexicon::demo(),
        };
        FeaturizerSpec::Lexicon(LexiconSpec {
            lexicon,
            top_k: section.top_k,
            preprocessed: section.preprocessed,
        })
    };

    let pca = match (o.pca, &cfg.pca) {
        (Some(s), _) => s.target(),
        (None, Some(v)) => {
            let text = match v {
                toml::Value::String(s) => s.clone(),
                toml::Value::Float(f) => format!("{f:?}"),
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Boolean(false) => "off".into(),
                other => return Err(Error::Config(format!("unsupported pca value {other}"))),
            };
            text.parse::<PcaSetting>()?.target()
        }
        (None, None) => featurizer.default_pca(),
    };

    let seed = o.seed.or(cfg.seed).unwrap_or(42);
    let (kind, hyper) = match &cfg.classifier {
        Some(c) => (c.kind, c.hyper.clone()),
        None => (ClassifierKind::Svm, Hyperparams::default()),
    };
    let kind = o.classifier.unwrap_or(kind);
    let spec = PipelineSpec {
        preprocess: PreprocessConfig::from_files(stopwords.as_deref(), lemmas.as_deref())?,
        featurizer,
        pca,
        classifier: ClassifierSpec::new(kind, hyper, seed)?,
    };
    spec.validate()?;

    let content = fs::read(&corpus_path).map_err(|e| Error::io(&corpus_path, e))?;
    let corpus_sha256 = hex::encode(Sha256::digest(&content));
    let format = o
        .format
        .or(cfg_format)
        .unwrap_or_else(|| CorpusFormat::from_path(&corpus_path));
    let text = String::from_utf8(content)
        .map_err(|_| Error::Corpus(format!("{} is not UTF-8", corpus_path.display())))?;
    let corpus = Corpus::new(parse_posts(&text, format)?)?;

    let eval = cfg.eval.unwrap_or_default();
    let folds = if o.loo || (o.folds.is_none() && eval.loo) {
        Folds::Loo
    } else {
        Folds::K(o.folds.or(eval.folds).unwrap_or(10))
    };
    let positive = match o.positive_class.clone().or(cfg.positive_class) {
        Some(p) => p,
        None => default_positive(&corpus)
            .ok_or_else(|| Error::Config("corpus has no labels".into()))?
            .to_owned(),
    };
    if !corpus.labels().contains(&positive) {
        return Err(Error::Config(format!(
            "positive class {positive:?} is not one of {:?}",
            corpus.labels()
        )));
    }
    Ok(Experiment {
        spec,
        corpus,
        corpus_path,
        corpus_sha256,
        folds,
        seed,
        positive,
    })
}

fn prepare_out_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .next()
            .is_some();
        if non_empty && !force {
            return Err(Error::Config(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
        let folds = dir.join("folds");
        if folds.is_dir() {
            fs::remove_dir_all(&folds).map_err(|e| Error::io(&folds, e))?;
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn csv_bytes(header: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = header.as_bytes().to_vec();
    body(&mut buf)?;
    Ok(buf)
}

/// What `run` produced.
#[derive(Debug)]
pub struct RunOutput {
    pub experiment: Experiment,
    pub report: Option<EvalReport>,
    pub fitted: FittedPipeline,
    pub files: Vec<PathBuf>,
}

pub fn cmd_run(args: &RunArgs) -> Result<RunOutput> {
    let exp = resolve(args.config.as_deref(), &args.overrides)?;
    prepare_out_dir(&args.out, args.force)?;
    let header = exp.header();
    let mut files = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let p = args.out.join(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        write_file(&p, &bytes)?;
        files.push(p);
        Ok(())
    };

    let report = if args.no_eval {
        None
    } else {
        let plan = exp.fold_plan()?;
        let report = cross_validate(
            &exp.spec,
            &exp.corpus,
            &plan,
            &exp.positive,
            !args.overrides.serial,
        )?;
        let mut json = serde_json::to_value(&report)?;
        json["config_hash"] = exp.config_hash().into();
        emit("report.json", serde_json::to_vec_pretty(&json)?)?;
        emit(
            "report.csv",
            csv_bytes(&header, |b| report.write_csv(b, true))?,
        )?;
        for f in &report.folds {
            emit(
                &format!("folds/fold_{:02}_features.csv", f.fold),
                csv_bytes(&header, |b| {
                    let mut w = csv::Writer::from_writer(b);
                    w.write_record(["rank", "feature"])?;
                    for (i, name) in f.selected_features.iter().enumerate() {
                        w.write_record([(i + 1).to_string(), name.clone()])?;
                    }
                    w.flush().map_err(|e| Error::io("<csv>", e))
                })?,
            )?;
        }
        Some(report)
    };

    let fitted = exp.spec.fit(&exp.corpus)?;
    if let Some(r) = fitted.ranking() {
        emit("ranking.csv", csv_bytes(&header, |b| r.write_csv(b))?)?;
    }
    if let Some(s) = fitted.selection() {
        emit("selection.csv", csv_bytes(&header, |b| s.write_csv(b))?)?;
    }
    let selected = fitted.featurize(exp.corpus.posts())?;
    let labels = exp.corpus.label_vector()?;
    emit(
        "parallel_coords.csv",
        csv_bytes(&header, |b| selected.write_csv(&labels, b))?,
    )?;
    emit("pipeline.json", fitted.to_json()?)?;
    Ok(RunOutput {
        experiment: exp,
        report,
        fitted,
        files,
    })
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) if p != Path::new("-") => fs::read_to_string(p).map_err(|e| Error::io(p, e)),
        _ => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::io("<stdin>", e))?;
            Ok(s)
        }
    }
}

pub fn load_pipeline(path: &Path) -> Result<FittedPipeline> {
    let file = if path.is_dir() {
        path.join("pipeline.json")
    } else {
        path.to_path_buf()
    };
    let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
    FittedPipeline::from_json(&bytes)
}

/// Echo each input post as JSON with a `predicted` field added.
pub fn predict_lines(
    pipeline: &FittedPipeline,
    input: &str,
    format: CorpusFormat,
) -> Result<String> {
    if input.trim().is_empty() {
        return Ok(String::new());
    }
    let posts = parse_posts(input, format)?;
    if posts.is_empty() {
        return Ok(String::new());
    }
    let predicted = pipeline.predict(&posts)?;
    let mut out = String::new();
    for (post, label) in posts.iter().zip(predicted) {
        let mut v = serde_json::to_value(post)?;
        v["predicted"] = label.into();
        out.push_str(&serde_json::to_string(&v)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let pipeline = load_pipeline(&args.model)?;
    let input = read_input(args.input.as_deref())?;
    let format = args.format.unwrap_or_else(|| match &args.input {
        Some(p) => CorpusFormat::from_path(p),
        None => CorpusFormat::Jsonl,
    });
    let text = predict_lines(&pipeline, &input, format)?;
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

pub const COMPARISON_COLUMNS: [&str; 10] = [
    "pipeline",
    "classifier",
    "Precision",
    "Recall",
    "F-Measure",
    "Accuracy",
    "tp",
    "fp",
    "fn",
    "tn",
];

/// Evaluate every config (times every requested classifier) and return the
/// reports sorted by pooled accuracy, best first. Equal accuracies keep the
/// order given.
pub fn compare(
    configs: &[PathBuf],
    classifiers: &[ClassifierKind],
    o: &Overrides,
) -> Result<(Vec<Experiment>, Vec<EvalReport>)> {
    if configs.len() + classifiers.len().saturating_sub(1) < 2 {
        return Err(Error::Config(
            "compare needs at least two configurations".into(),
        ));
    }
    let mut experiments = Vec::new();
    for c in configs {
        let base = resolve(Some(c), o)?;
        if classifiers.is_empty() {
            experiments.push(base);
        } else {
            for &kind in classifiers {
                let mut e = base.clone();
                let mut o2 = o.clone();
                o2.classifier = Some(kind);
                e.spec.classifier = resolve(Some(c), &o2)?.spec.classifier;
                experiments.push(e);
            }
        }
    }
    let first = &experiments[0].corpus_sha256;
    if let Some(e) = experiments.iter().find(|e| &e.corpus_sha256 != first) {
        return Err(Error::Config(format!(
            "configs use different corpora ({} vs {})",
            experiments[0].corpus_path.display(),
            e.corpus_path.display()
        )));
    }
    let mut reports = Vec::new();
    for e in &experiments {
        let plan = e.fold_plan()?;
        reports.push(cross_validate(
            &e.spec,
            &e.corpus,
            &plan,
            &e.positive,
            !o.serial,
        )?);
    }
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&a, &b| {
        reports[b]
            .micro
            .accuracy
            .total_cmp(&reports[a].micro.accuracy)
            .then(a.cmp(&b))
    });
    let experiments = order.iter().map(|&i| experiments[i].clone()).collect();
    let reports = order.iter().map(|&i| reports[i].clone()).collect();
    Ok((experiments, reports))
}

pub fn comparison_csv(experiments: &[Experiment], reports: &[EvalReport]) -> Result<Vec<u8>> {
    let hashes: Vec<String> = experiments.iter().map(Experiment::config_hash).collect();
    let seeds: Vec<String> = experiments.iter().map(|e| e.seed.to_string()).collect();
    let header = format!(
        "# config_hash={} seed={}\n",
        hashes.join(","),
        seeds.join(",")
    );
    csv_bytes(&header, |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(COMPARISON_COLUMNS)?;
        for r in reports {
            let m = &r.micro;
            let cm = &r.pooled;
            w.write_record([
                r.pipeline.clone(),
                r.spec.classifier.kind.to_string(),
                percent(m.precision),
                percent(m.recall),
                percent(m.f_measure),
                percent(m.accuracy),
                cm.tp.to_string(),
                cm.fp.to_string(),
                cm.fn_.to_string(),
                cm.tn.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    })
}

fn write_target(
    path: Option<&Path>,
    force: bool,
    bytes: &[u8],
    stdout: &mut dyn Write,
) -> Result<()> {
    match path {
        Some(p) => {
            if p.exists() && !force {
                return Err(Error::Config(format!(
                    "{} exists; pass --force to overwrite",
                    p.display()
                )));
            }
            write_file(p, bytes)
        }
        None => stdout
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

pub fn synth_spec(args: &SynthArgs) -> Result<SynthSpec> {
    let mut spec = match &args.config {
        Some(p) => {
            let src = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str(&src).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => SynthSpec::default(),
    };
    if let Some(v) = args.n {
        spec.n_posts = v;
    }
    if let Some(v) = args.balance {
        spec.balance = v;
    }
    if let Some(v) = args.signal {
        spec.signal_fraction = v;
    }
    if let Some(v) = args.noise_vocab {
        spec.noise_vocab = v;
    }
    if let Some(v) = args.tokens_min {
        spec.tokens_min = v;
    }
    if let Some(v) = args.tokens_max {
        spec.tokens_max = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    spec.validate()?;
    Ok(spec)
}

/// One label per line; blank lines and `#` comments are skipped.
pub fn read_label_file(path: &Path) -> Result<Vec<String>> {
    let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(src
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

/// Run a parsed command, writing any stdout payload to `stdout`.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synth(args) => {
            let spec = synth_spec(&args)?;
            let corpus = generate(&spec)?;
            write_target(
                args.out.as_deref(),
                args.force,
                corpus.to_jsonl()?.as_bytes(),
                stdout,
            )
        }
        Command::Run(args) => {
            let out = cmd_run(&args)?;
            let summary = match &out.report {
                Some(r) => format!(
                    "{} pooled accuracy {}% over {} folds; wrote {} files to {}\n",
                    r.pipeline,
                    percent(r.micro.accuracy),
                    r.folds.len(),
                    out.files.len(),
                    args.out.display()
                ),
                None => format!(
                    "fitted {}; wrote {} files to {}\n",
                    out.experiment.spec.describe(),
                    out.files.len(),
                    args.out.display()
                ),
            };
            stdout
                .write_all(summary.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
        Command::Predict(args) => cmd_predict(&args, stdout),
        Command::Compare(args) => {
            let (exps, reports) = compare(&args.configs, &args.classifiers, &args.overrides)?;
            let bytes = comparison_csv(&exps, &reports)?;
            write_target(args.out.as_deref(), args.force, &bytes, stdout)
        }
        Command::Kappa(args) => {
            let a = read_label_file(&args.labels_a)?;
            let b = read_label_file(&args.labels_b)?;
            let k = cohen_kappa(&a, &b)?;
            writeln!(stdout, "n={} kappa={k:.6}", a.len()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

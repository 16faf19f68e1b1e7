use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use sha2::{Digest, Sha256};

use intentkit::cli::{
    cmd_run, compare, comparison_csv, execute, predict_lines, Cli, Overrides, RunArgs,
};
use intentkit::corpus::{load_corpus, split_stratified, Corpus, CorpusFormat};
use intentkit::evaluate::cross_validate;
use intentkit::models::ClassifierKind;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn run_cli(args: &[&str]) -> intentkit::Result<String> {
    let cli = Cli::try_parse_from(std::iter::once("intentkit").chain(args.iter().copied()))
        .map_err(|e| intentkit::Error::Config(e.to_string()))?;
    let mut out = Vec::new();
    execute(cli, &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

fn demo() -> Corpus {
    load_corpus(&data("demo_corpus.jsonl"), CorpusFormat::Jsonl).unwrap()
}

fn run_args(config: Option<PathBuf>, overrides: Overrides, out: PathBuf) -> RunArgs {
    RunArgs {
        config,
        overrides,
        out,
        force: false,
        no_eval: false,
    }
}

#[test]
fn synth_first_line_is_frozen() {
    let out = run_cli(&["synth", "--n", "400", "--seed", "42"]).unwrap();
    let first = out.lines().next().unwrap();
    assert_eq!(
        hex::encode(Sha256::digest(first.as_bytes())),
        "bac84d59ffccf3bbaa882f6246797c47c378ca71c15a972fb64d9a1b0bdacb7d",
        "{first}"
    );
    assert_eq!(out.lines().count(), 400);
}

#[test]
fn synth_refuses_to_clobber() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("c.jsonl");
    let ps = p.to_str().unwrap();
    run_cli(&["synth", "--n", "20", "-o", ps]).unwrap();
    let err = run_cli(&["synth", "--n", "20", "-o", ps])
        .unwrap_err()
        .to_string();
    assert!(err.contains("--force"), "{err}");
    run_cli(&["synth", "--n", "30", "-o", ps, "--force"]).unwrap();
    assert_eq!(fs::read_to_string(&p).unwrap().lines().count(), 30);
}

/// Retraining on fold i's training split with seed `s + i` and predicting
/// its test split reproduces the cross-validation predictions exactly.
#[test]
fn predict_matches_cross_validation() {
    let corpus = demo();
    let seed = 9;
    let plan = split_stratified(&corpus, 5, seed).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let cv_dir = tmp.path().join("cv");
    let cv = cmd_run(&run_args(
        Some(data("demo.toml")),
        Overrides {
            seed: Some(seed),
            folds: Some(5),
            ..Overrides::default()
        },
        cv_dir,
    ))
    .unwrap();
    let report = cv.report.unwrap();

    for fold in &report.folds {
        let i = fold.fold;
        let train = corpus.subset(&plan.train_indices(i));
        let test = corpus.subset(&plan.test_indices(i));
        let train_path = tmp.path().join(format!("train_{i}.jsonl"));
        fs::write(&train_path, train.to_jsonl().unwrap()).unwrap();
        let model_dir = tmp.path().join(format!("model_{i}"));
        let mut args = run_args(
            Some(data("demo.toml")),
            Overrides {
                corpus: Some(train_path),
                seed: Some(seed + i as u64),
                ..Overrides::default()
            },
            model_dir.clone(),
        );
        args.no_eval = true;
        cmd_run(&args).unwrap();

        let test_path = tmp.path().join(format!("test_{i}.jsonl"));
        fs::write(&test_path, test.to_jsonl().unwrap()).unwrap();
        let out = run_cli(&[
            "predict",
            "--model",
            model_dir.to_str().unwrap(),
            "--input",
            test_path.to_str().unwrap(),
        ])
        .unwrap();
        let predicted: Vec<String> = out
            .lines()
            .map(|l| {
                let v: serde_json::Value = serde_json::from_str(l).unwrap();
                v["predicted"].as_str().unwrap().to_owned()
            })
            .collect();
        assert_eq!(predicted, fold.predicted, "fold {i}");
    }
}

#[test]
fn predict_on_empty_input_prints_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = run_args(
        Some(data("demo.toml")),
        Overrides::default(),
        tmp.path().join("m"),
    );
    args.no_eval = true;
    let run = cmd_run(&args).unwrap();
    assert_eq!(
        predict_lines(&run.fitted, "", CorpusFormat::Jsonl).unwrap(),
        ""
    );
    assert_eq!(
        predict_lines(&run.fitted, "\n  \n", CorpusFormat::Jsonl).unwrap(),
        ""
    );
    let empty = tmp.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = run_cli(&[
        "predict",
        "--model",
        tmp.path().join("m/pipeline.json").to_str().unwrap(),
        "--input",
        empty.to_str().unwrap(),
    ])
    .unwrap();
    assert_eq!(out, "");
}

#[test]
fn toy_naive_bayes_through_the_command() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("toy.jsonl");
    fs::write(
        &corpus,
        concat!(
            r#"{"id":"1","text":"kill murder kill","label":"abuse"}"#,
            "\n",
            r#"{"id":"2","text":"leave kill","label":"abuse"}"#,
            "\n",
            r#"{"id":"3","text":"share support","label":"advice"}"#,
            "\n",
            r#"{"id":"4","text":"share leave support","label":"advice"}"#,
            "\n",
        ),
    )
    .unwrap();
    let config = tmp.path().join("toy.toml");
    fs::write(
        &config,
        "seed = 1\n[corpus]\npath = \"toy.jsonl\"\n[terms]\nmin_df = 1\n[classifier]\nkind = \"nb\"\n",
    )
    .unwrap();
    let model = tmp.path().join("model");
    run_cli(&[
        "run",
        config.to_str().unwrap(),
        "--no-eval",
        "-o",
        model.to_str().unwrap(),
    ])
    .unwrap();
    let query = tmp.path().join("q.jsonl");
    fs::write(&query, "{\"id\":\"q\",\"text\":\"kill murder leave\"}\n").unwrap();
    let out = run_cli(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--input",
        query.to_str().unwrap(),
    ])
    .unwrap();
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["predicted"], "abuse");
    assert_eq!(v["id"], "q");
}

#[test]
fn compare_orders_by_accuracy() {
    let all = ClassifierKind::ALL.to_vec();
    let o = Overrides {
        folds: Some(5),
        ..Overrides::default()
    };
    let (exps, reports) = compare(&[data("demo.toml")], &all, &o).unwrap();
    assert_eq!(reports.len(), 4);
    let kinds: std::collections::BTreeSet<_> =
        reports.iter().map(|r| r.spec.classifier.kind).collect();
    assert_eq!(kinds.len(), 4);
    for w in reports.windows(2) {
        assert!(w[0].micro.accuracy >= w[1].micro.accuracy);
    }
    let csv = String::from_utf8(comparison_csv(&exps, &reports).unwrap()).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert!(lines
        .next()
        .unwrap()
        .starts_with("pipeline,classifier,Precision"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn compare_of_duplicate_configs_gives_identical_rows() {
    let out = run_cli(&[
        "compare",
        data("demo.toml").to_str().unwrap(),
        data("demo.toml").to_str().unwrap(),
    ])
    .unwrap();
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], rows[1]);
}

#[test]
fn compare_rejects_different_corpora() {
    let tmp = tempfile::tempdir().unwrap();
    let other = tmp.path().join("other.jsonl");
    run_cli(&["synth", "--n", "40", "-o", other.to_str().unwrap()]).unwrap();
    let cfg = tmp.path().join("other.toml");
    fs::write(&cfg, "[corpus]\npath = \"other.jsonl\"\n[lexicon]\n").unwrap();
    let err = compare(&[data("demo.toml"), cfg], &[], &Overrides::default())
        .unwrap_err()
        .to_string();
    assert!(err.contains("different corpora"), "{err}");
}

#[test]
fn both_featurizers_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("both.toml");
    fs::write(
        &cfg,
        format!(
            "[corpus]\npath = {:?}\n[lexicon]\ntop_k = 5\n[terms]\nmin_df = 1\n",
            data("demo_corpus.jsonl")
        ),
    )
    .unwrap();
    let err = cmd_run(&run_args(
        Some(cfg),
        Overrides::default(),
        tmp.path().join("o"),
    ))
    .unwrap_err()
    .to_string();
    assert!(err.contains("lexicon") && err.contains("terms"), "{err}");
}

#[test]
fn missing_corpus_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[corpus]\npath = \"nowhere.jsonl\"\n").unwrap();
    let err = cmd_run(&run_args(
        Some(cfg),
        Overrides::default(),
        tmp.path().join("o"),
    ))
    .unwrap_err()
    .to_string();
    assert!(err.contains("nowhere.jsonl"), "{err}");
}

#[test]
fn output_dir_is_not_overwritten_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let args = run_args(
        Some(data("demo.toml")),
        Overrides {
            folds: Some(4),
            ..Overrides::default()
        },
        out.clone(),
    );
    cmd_run(&args).unwrap();
    let before = fs::read(out.join("report.csv")).unwrap();
    let err = cmd_run(&args).unwrap_err().to_string();
    assert!(err.contains("--force"), "{err}");
    assert_eq!(fs::read(out.join("report.csv")).unwrap(), before);

    // --force with fewer folds must not leave stale fold files behind.
    let mut forced = run_args(
        Some(data("demo.toml")),
        Overrides {
            folds: Some(2),
            ..Overrides::default()
        },
        out.clone(),
    );
    forced.force = true;
    cmd_run(&forced).unwrap();
    let n = fs::read_dir(out.join("folds")).unwrap().count();
    assert_eq!(n, 2);
}

#[test]
fn run_writes_the_expected_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let run = cmd_run(&run_args(
        Some(data("demo_terms.toml")),
        Overrides::default(),
        out.clone(),
    ))
    .unwrap();
    for f in [
        "report.json",
        "report.csv",
        "selection.csv",
        "parallel_coords.csv",
        "pipeline.json",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let hash = run.experiment.config_hash();
    for f in [
        "report.csv",
        "selection.csv",
        "parallel_coords.csv",
        "folds/fold_00_features.csv",
    ] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            format!("# config_hash={hash} seed=42"),
            "{f}"
        );
    }
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config_hash"], hash.as_str());
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.lines().last().unwrap().contains(",ALL,"), "{csv}");
}

#[test]
fn kappa_command_prints_value() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.txt");
    let b = tmp.path().join("b.txt");
    fs::write(&a, "x\nx\ny\ny\n").unwrap();
    fs::write(&b, "# second rater\nx\ny\nx\ny\n").unwrap();
    let out = run_cli(&["kappa", a.to_str().unwrap(), b.to_str().unwrap()]).unwrap();
    assert_eq!(out, "n=4 kappa=0.000000\n");
    fs::write(&b, "x\ny\n").unwrap();
    assert!(run_cli(&["kappa", a.to_str().unwrap(), b.to_str().unwrap()]).is_err());
}

#[test]
fn config_hash_tracks_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let a = cmd_run(&run_args(
        Some(data("demo.toml")),
        Overrides::default(),
        tmp.path().join("a"),
    ))
    .unwrap();
    let b = cmd_run(&run_args(
        Some(data("demo.toml")),
        Overrides {
            seed: Some(43),
            ..Overrides::default()
        },
        tmp.path().join("b"),
    ))
    .unwrap();
    assert_ne!(a.experiment.config_hash(), b.experiment.config_hash());
    assert_eq!(a.experiment.config_hash().len(), 16);
}

#[test]
fn serial_flag_changes_nothing_but_timing() {
    let corpus = demo();
    let plan = split_stratified(&corpus, 10, 42).unwrap();
    let spec = intentkit::cli::resolve(Some(&data("demo.toml")), &Overrides::default())
        .unwrap()
        .spec;
    let a = cross_validate(&spec, &corpus, &plan, "abuse", true).unwrap();
    let b = cross_validate(&spec, &corpus, &plan, "abuse", false).unwrap();
    assert_eq!(a.without_timings(), b.without_timings());
}

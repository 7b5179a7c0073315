mod common;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn wax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wordaxes"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = wax(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    /// Raw documents, a lexicon and keywords, preprocessed into `prep/`.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        common::write_text_dir(&root.join("raw"), &common::gender_documents(200, 6, 42));
        fs::write(root.join("gender.tsv"), common::gender_lexicon()).unwrap();
        fs::write(root.join("keywords.tsv"), common::keywords()).unwrap();
        ok(&[
            "preprocess",
            "--input",
            s(&root.join("raw")),
            "--out",
            s(&root.join("prep")),
            "--min-count",
            "5",
            "--no-phrases",
        ]);
        Workspace { _dir: dir, root }
    }

    fn p(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn train(&self, out: &str, extra: &[&str]) {
        let mut args = vec![
            "--deterministic",
            "--seed",
            "5",
            "train",
            "--corpus",
        ];
        let corpus = self.p("prep/corpus.txt");
        let out = self.p(out);
        args.push(s(&corpus));
        args.extend(["--out", s(&out), "--dim", "16", "--window", "4", "--epochs", "10", "--subsample", "0", "--min-count", "5"]);
        args.extend(extra);
        ok(&args);
    }
}

#[test]
fn preprocess_stats_match_a_recount() {
    let w = Workspace::new();
    let report = json(&w.p("prep/preprocess_report.json"));
    let r = &report["result"];
    assert_eq!(report["command"], "preprocess");
    assert_eq!(r["documents_in"], 200);
    assert_eq!(r["documents_kept"], 200);

    // Recount from the written corpus: blank lines separate documents.
    let text = fs::read_to_string(w.p("prep/corpus.txt")).unwrap();
    let mut counts: HashMap<&str, u64> = HashMap::new();
    let mut sentences = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        sentences += 1;
        for t in line.split_whitespace() {
            *counts.entry(t).or_default() += 1;
        }
    }
    assert_eq!(r["sentences"], sentences);
    assert_eq!(sentences, 200 * 6);
    let kept: Vec<_> = counts.iter().filter(|(_, &c)| c >= 5).collect();
    assert_eq!(r["vocabulary_size"], kept.len());
    assert_eq!(r["tokens"], kept.iter().map(|(_, &c)| c).sum::<u64>());
    let vocab = fs::read_to_string(w.p("prep/vocab.tsv")).unwrap();
    for line in vocab.lines() {
        let (word, count) = line.split_once('\t').unwrap();
        assert_eq!(counts[word], count.parse::<u64>().unwrap(), "{word}");
    }
    assert_eq!(report["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn train_eval_and_dimensions() {
    let w = Workspace::new();
    w.train("model.wax", &[]);
    let r = json(&w.p("model.wax.report.json"));
    assert_eq!(r["seeds"]["training"], 5);
    assert_eq!(r["config"]["threads"], 1);
    assert_eq!(r["result"]["dim"], 16);

    // Deterministic reruns give identical bytes.
    w.train("again.wax", &[]);
    assert_eq!(fs::read(w.p("model.wax")).unwrap(), fs::read(w.p("again.wax")).unwrap());

    // Interop formats load back to the same vectors.
    w.train("model.bin", &["--format", "binary"]);
    let bin = fs::read(w.p("model.bin")).unwrap();
    let header = String::from_utf8_lossy(&bin[..bin.iter().position(|&b| b == b'\n').unwrap()]).into_owned();
    let vocab_lines = fs::read_to_string(w.p("prep/vocab.tsv")).unwrap().lines().count();
    assert_eq!(header, format!("{vocab_lines} 16"));

    fs::write(w.p("q.txt"), ": family\nshe he her him\nwoman man girl boy\n: gram1\nshe her zeppelin blimp\n").unwrap();
    fs::write(w.p("ws.csv"), "word1,word2,score\nshe,he,8\nwoman,man,8.5\ndress,beard,2\nthe,city,1\nzeppelin,city,3\n").unwrap();
    let out = ok(&[
        "eval",
        "--model",
        s(&w.p("model.wax")),
        "--analogies",
        s(&w.p("q.txt")),
        "--wordsim",
        s(&w.p("ws.csv")),
    ]);
    let eval: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(eval["result"]["analogy"]["all"]["total"], 3);
    assert_eq!(eval["result"]["analogy"]["all"]["skipped"], 1);
    assert_eq!(eval["result"]["wordsim"]["n_used"], 4);
    assert_eq!(eval["warnings"].as_array().unwrap().len(), 1);

    let out = ok(&["neighbors", "--model", s(&w.p("model.wax")), "-k", "3", "she", "zeppelin"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "query\trank\tneighbor\tsimilarity");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.starts_with("she\t")));

    let dim = w.p("gender.json");
    ok(&[
        "dim", "extract", "--model", s(&w.p("model.wax")), "--lexicon", s(&w.p("gender.tsv")), "--method", "larsen", "--out", s(&dim),
    ]);
    let out = ok(&["dim", "project", "--model", s(&w.p("model.wax")), "--dim", s(&dim), "dress", "beard", "zeppelin"]);
    let proj: Value = serde_json::from_slice(&out.stdout).unwrap();
    let scores = proj["result"]["projections"].as_array().unwrap();
    assert_eq!(scores.len(), 2);
    assert!(scores[0]["score"].as_f64().unwrap() > 0.0, "dress leans female: {proj}");
    assert!(scores[1]["score"].as_f64().unwrap() < 0.0, "beard leans male: {proj}");
    assert_eq!(proj["result"]["missing"][0], "zeppelin");
    assert!(proj["warnings"][0].as_str().unwrap().contains("zeppelin"));

    let out = ok(&[
        "dim", "validate", "--model", s(&w.p("model.wax")), "--lexicon", s(&w.p("gender.tsv")), "--folds", "5",
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["result"]["test"]["accuracy"].as_f64().unwrap() >= 0.8, "{v}");
    assert_eq!(v["result"]["cross_validation"]["folds"].as_array().unwrap().len(), 5);

    let pca = w.p("gender_pca.json");
    ok(&[
        "dim", "extract", "--model", s(&w.p("model.wax")), "--lexicon", s(&w.p("gender.tsv")), "--method", "bolukbasi", "--out", s(&pca),
    ]);
    let out = ok(&["dim", "similarity", "--dim-a", s(&dim), "--dim-b", s(&pca)]);
    let sim: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(sim["result"]["cosine"].as_f64().unwrap() > 0.5, "{sim}");

    let svm = w.p("gender_svm.json");
    ok(&[
        "dim", "extract", "--model", s(&w.p("model.wax")), "--lexicon", s(&w.p("gender.tsv")), "--method", "svm", "--out", s(&svm),
    ]);
    assert_eq!(json(&svm)["kind"], "classifier");
}

#[test]
fn usage_errors_exit_2_and_domain_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let out = wax(&["train", "--corpus", s(&missing), "--out", s(&dir.path().join("m.wax"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("m.wax").exists());

    assert_eq!(wax(&["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(wax(&[]).status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[training]\ndimension = 3\n").unwrap();
    let corpus = dir.path().join("corpus.txt");
    fs::write(&corpus, "a b c\n").unwrap();
    let out = wax(&["--config", s(&cfg), "train", "--corpus", s(&corpus), "--out", s(&dir.path().join("m.wax"))]);
    assert_eq!(out.status.code(), Some(2));

    // A corpus where nothing reaches the minimum count is a domain error.
    let out = wax(&["--error-json", "train", "--corpus", s(&corpus), "--out", s(&dir.path().join("m.wax"))]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["exit_code"], 1);

    let bad_model = dir.path().join("model.txt");
    fs::write(&bad_model, "2 3\na 1 2\n").unwrap();
    let out = wax(&["neighbors", "--model", s(&bad_model), "a"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ensemble_and_report_reaggregation() {
    let w = Workspace::new();
    let manifest = w.p("manifest.toml");
    fs::write(
        &manifest,
        "corpus = \"prep/corpus.txt\"\nlexicons = [\"gender.tsv\"]\nkeywords = \"keywords.tsv\"\n\n\
         [ensemble]\nk_models = 2\nsubsample_fraction = 0.9\nbase_seed = 3\nmin_count = 5\nkeyword_min_count = 10\n\
         method = \"larsen\"\njobs = 2\nsave_models = true\n\n\
         [training]\ndim = 12\nwindow = 4\nepochs = 3\n",
    )
    .unwrap();
    let out = w.p("ens");
    ok(&["--deterministic", "ensemble", "--manifest", s(&manifest), "--out", s(&out)]);
    for f in ["ensemble_config.json", "summary.json", "report.json", "figures/gender.csv", "model_000/model.wax", "model_001/projections.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let report = json(&out.join("report.json"));
    assert_eq!(report["seeds"]["model_seeds"], serde_json::json!([3, 4]));
    assert!(report["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("zeppelin")));

    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["k_models"], 2);
    let csv = fs::read_to_string(out.join("figures/gender.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "word,role,mean,sd,min,max,robust");
    assert!(csv.lines().any(|l| l.starts_with("dress,clothing,")));

    let summary_bytes = fs::read(out.join("summary.json")).unwrap();
    let csv_bytes = fs::read(out.join("figures/gender.csv")).unwrap();
    fs::remove_file(out.join("summary.json")).unwrap();
    fs::remove_dir_all(out.join("figures")).unwrap();
    ok(&["report", "--dir", s(&out)]);
    assert_eq!(fs::read(out.join("summary.json")).unwrap(), summary_bytes);
    assert_eq!(fs::read(out.join("figures/gender.csv")).unwrap(), csv_bytes);
}

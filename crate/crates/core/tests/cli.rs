mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mlir-kit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn qrels_flags(files: &common::CollectionFiles) -> Vec<String> {
    files
        .qrels
        .iter()
        .flat_map(|(l, p)| ["--qrels".to_string(), format!("{l}={}", p.display())])
        .collect()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    files: common::CollectionFiles,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let files = common::write_collection(&root.join("data"), &common::collection(300, &["en", "de", "fr"], 10, 5));
    Fixture { _dir: dir, root, files }
}

#[test]
fn bm25_pipeline_end_to_end() {
    let f = fixture();
    let out = f.root.join("bm25");
    let o = run(&["index", "--corpus", s(&f.files.corpus), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("index.json").exists() && out.join("ledger.json").exists() && out.join("ledger.csv").exists());

    let o = run(&["search", "--topics", s(&f.files.topics), "--output", s(&out), "--k", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let trec = std::fs::read_to_string(out.join("run.trec")).unwrap();
    let mut per_topic = std::collections::BTreeMap::new();
    for line in trec.lines() {
        *per_topic.entry(line.split(' ').next().unwrap().to_string()).or_insert(0) += 1;
    }
    assert_eq!(per_topic.len(), 10);
    assert!(per_topic.values().all(|&n| n <= 10));

    let mut args = vec!["evaluate".to_string(), "--run".into(), out.join("run.trec").display().to_string()];
    args.extend(qrels_flags(&f.files));
    args.extend(["--output".into(), out.display().to_string()]);
    args.extend(["--baseline".into(), out.join("run.trec").display().to_string(), "--bonferroni".into(), "16".into()]);
    let o = bin().args(&args).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run.metrics.json")).unwrap()).unwrap();
    let map = metrics["evaluation"]["map"].as_f64().unwrap();
    assert!(map > 0.3, "topic words should make BM25 effective, MAP {map}");
    for t in metrics["significance"].as_array().unwrap() {
        assert_eq!(t["p_adjusted"].as_f64(), Some(1.0));
    }
    assert!(std::fs::read_to_string(out.join("run.metrics.csv")).unwrap().starts_with("query,ap,p10"));
}

#[test]
fn dense_search_is_deterministic() {
    let f = fixture();
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = f.root.join(name);
        for args in [
            vec!["index", "--corpus", s(&f.files.corpus), "--mode", "maxsim", "--dim", "8", "--seed", "3"],
            vec!["search", "--topics", s(&f.files.topics), "--k", "20"],
        ] {
            let o = bin().args(&args).args(["--output", s(&out)]).output().unwrap();
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        }
        runs.push(std::fs::read(out.join("run.trec")).unwrap());
        assert!(out.join("store.mlke").exists() && out.join("store.passages.jsonl").exists());
    }
    assert_eq!(runs[0], runs[1]);
    assert!(!runs[0].is_empty());
}

#[test]
fn corrupt_corpus_line_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    let mut text: String = (0..6)
        .map(|i| format!("{{\"id\":\"d{i}\",\"lang\":\"en\",\"text\":\"hello\"}}\n"))
        .collect();
    text.push_str("{\"id\": broken\n");
    std::fs::write(&corpus, text).unwrap();
    let o = run(&["index", "--corpus", s(&corpus), "--output", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 7"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn empty_corpus_gives_empty_index() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    std::fs::write(&corpus, "").unwrap();
    let o = run(&["index", "--corpus", s(&corpus), "--output", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let ledger: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ledger.json")).unwrap()).unwrap();
    assert_eq!(ledger["doc_count"], 0);
    assert!(ledger["per_document_seconds"].is_null());
}

#[test]
fn missing_index_exits_with_two() {
    let f = fixture();
    let o = run(&["search", "--topics", s(&f.files.topics), "--output", s(&f.root.join("nothing"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn boilerplate_only_topic_is_skipped_with_warning() {
    let f = fixture();
    let out = f.root.join("idx");
    assert_eq!(run(&["index", "--corpus", s(&f.files.corpus), "--output", s(&out)]).status.code(), Some(0));
    let topics = f.root.join("topics.jsonl");
    std::fs::write(
        &topics,
        "{\"id\":\"q1\",\"lang\":\"en\",\"title\":\"topic1k0\"}\n{\"id\":\"q2\",\"lang\":\"en\",\"title\":\"Find documents on the\"}\n",
    )
    .unwrap();
    let o = run(&["search", "--topics", s(&topics), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q2"));
    let trec = std::fs::read_to_string(out.join("run.trec")).unwrap();
    assert!(trec.lines().all(|l| l.starts_with("q1 ")));
}

#[test]
fn bias_report_writes_json_and_csv() {
    let f = fixture();
    let out = f.root.join("idx");
    assert_eq!(run(&["index", "--corpus", s(&f.files.corpus), "--output", s(&out)]).status.code(), Some(0));
    assert_eq!(run(&["search", "--topics", s(&f.files.topics), "--output", s(&out)]).status.code(), Some(0));
    let run_file = out.join("run.trec").display().to_string();
    let mut args = vec!["bias-report".to_string(), "--run".into(), run_file.clone(), "--output".into(), out.display().to_string()];
    args.extend(qrels_flags(&f.files));
    let o = bin().args(&args).arg("--reference").arg("en").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("run.bias.json").exists() && out.join("run.bias.csv").exists());

    let o = bin().args(&args).arg("--reference").arg("ja").output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let empty = f.root.join("empty.trec");
    std::fs::write(&empty, "").unwrap();
    args[2] = empty.display().to_string();
    let o = bin().args(&args).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn timing_report_from_ledgers() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for (label, per_doc) in [("translate", 0.32), ("native", 0.05)] {
        let l = mlir_kit::cli::TimingLedger::from_per_document(label, 100, per_doc).unwrap();
        let p = dir.path().join(format!("{label}.json"));
        std::fs::write(&p, serde_json::to_string(&l).unwrap()).unwrap();
        paths.push(p);
    }
    let o = run(&[
        "timing-report",
        "--ledger",
        s(&paths[0]),
        "--ledger",
        s(&paths[1]),
        "--map",
        "translate=0.45",
        "--output",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("timing_report.csv")).unwrap();
    assert!(csv.contains("translate,native,0.84375"), "{csv}");
    let scatter = std::fs::read_to_string(dir.path().join("scatter.csv")).unwrap();
    assert!(scatter.contains("translate,0.32,0.45"), "{scatter}");
}

#[test]
fn mix_triples_outputs_and_alignment_errors() {
    let dir = tempfile::tempdir().unwrap();
    let langs = ["en", "fr", "de", "it", "es"];
    let files = common::triple_files(&dir.path().join("t"), &langs, 64);
    let flags: Vec<String> = files
        .iter()
        .flat_map(|(l, p)| ["--triples".to_string(), format!("{l}={}", p.display())])
        .collect();
    let out = dir.path().join("mix");
    let o = bin()
        .args(["mix-triples", "--mode", "mtt-m", "--batch-size", "32", "--output", s(&out)])
        .args(&flags)
        .output()
        .unwrap();
    // 320 triples fill 10 batches exactly.
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let combined = std::fs::read_to_string(out.join("combined.tsv")).unwrap();
    assert_eq!(combined.lines().count(), 64);
    assert!(combined.lines().all(|l| l.split('\t').count() == 15));
    assert_eq!(std::fs::read_to_string(out.join("schedule.jsonl")).unwrap().lines().count(), 320);

    std::fs::write(&files[2].1, "q\tp\tn\n").unwrap();
    let o = bin().args(["mix-triples", "--output", s(&out)]).args(&flags).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("triples.de.tsv"));

    let o = bin()
        .args(["mix-triples", "--mode", "et", "--output", s(&out), "--triples"])
        .arg(format!("en={}", files[0].1.display()))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(out.join("combined.tsv")).unwrap(), std::fs::read(&files[0].1).unwrap());
}

#[test]
fn config_file_drives_commands() {
    let f = fixture();
    let out = f.root.join("cfg-out");
    let cfg = f.root.join("pipeline.toml");
    std::fs::write(
        &cfg,
        format!(
            "corpus = \"{}\"\ntopics = \"{}\"\noutput = \"{}\"\nk = 5\nmode = \"single-vector\"\ndim = 8\n",
            f.files.corpus.display(),
            f.files.topics.display(),
            out.display()
        ),
    )
    .unwrap();
    assert_eq!(run(&["--config", s(&cfg), "index"]).status.code(), Some(0));
    assert_eq!(run(&["--config", s(&cfg), "search"]).status.code(), Some(0));
    let trec = std::fs::read_to_string(out.join("run.trec")).unwrap();
    assert_eq!(trec.lines().count(), 50);
    assert!(trec.lines().all(|l| l.ends_with(" single-vector")));

    std::fs::write(&cfg, "windwo = 3\n").unwrap();
    assert_eq!(run(&["--config", s(&cfg), "index"]).status.code(), Some(2));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use term_scribe::text::sha256_hex;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_term-scribe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let pages = dir.path().join("pages");
        fs::create_dir(&pages).unwrap();
        fs::write(
            pages.join("a.html"),
            "<html><body><p>A multicast is a transmission to a group of receivers.</p>\
             <p>Weather is fine today.</p></body></html>",
        )
        .unwrap();
        fs::write(
            pages.join("b.html"),
            "<html><body><h2>Multicast</h2><p>Sending one packet to many hosts at once.</p>\
             <dl><dt>groupware</dt><dd>Software that helps people work together.</dd></dl></body></html>",
        )
        .unwrap();
        fs::write(pages.join("c.html"), "<html><body><p>Nothing here.</p></body></html>").unwrap();
        fs::write(dir.path().join("patterns.tsv"), "p1\tX is Y.\n").unwrap();
        let corpus: String = (0..200)
            .map(|i| match i % 4 {
                0 => "a multicast is a transmission to a group of receivers .\n",
                1 => "software that helps people work together .\n",
                2 => "sending one packet to many hosts at once .\n",
                _ => "the network sends packets to a group .\n",
            })
            .collect();
        fs::write(dir.path().join("corpus.txt"), corpus).unwrap();
        fs::write(dir.path().join("lexicon.txt"), "multicast\ngroupware\nzebra\n").unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn cfg_args(&self) -> Vec<String> {
        [
            "--source-kind",
            "corpus-dir",
            "--source",
            &self.s("pages"),
            "--patterns",
            &self.s("patterns.tsv"),
            "--model",
            &self.s("model.lm"),
            "--db",
            &self.s("db.jsonl"),
            "--filter-threshold",
            "1e9",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    fn with_cfg(&self, head: &[&str]) -> Output {
        let mut args: Vec<String> = head.iter().map(|s| s.to_string()).collect();
        args.extend(self.cfg_args());
        bin().args(&args).output().unwrap()
    }

    fn train(&self) {
        let o = run(&["train-lm", "--corpus", &self.s("corpus.txt"), "--out", &self.s("model.lm")]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }

    fn build(&self) -> Output {
        self.train();
        self.with_cfg(&["build", "--lexicon", &self.s("lexicon.txt")])
    }
}

#[test]
fn train_lm_writes_a_loadable_model() {
    let f = Fixture::new();
    f.train();
    let model = term_scribe::langmodel::load_model(&f.path("model.lm")).unwrap();
    assert!(model.contains("multicast"));
}

#[test]
fn build_then_query_and_export() {
    let f = Fixture::new();
    let o = f.build();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("terms processed: 3, with pages: 2, with descriptions: 2"), "{}", stdout(&o));

    let o = f.with_cfg(&["query", "multicast", "--all"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("a transmission to a group of receivers"), "{out}");
    assert!(out.contains("Sending one packet to many hosts at once."), "{out}");

    let o = f.with_cfg(&["query", "GROUPWARE"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("Software that helps people work together."));

    let o = f.with_cfg(&["query", "zebra"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());

    let o = f.with_cfg(&["export"]);
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines[0], r#"{"format":"term-scribe-db","version":1}"#);
    for l in &lines[1..] {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v["perplexity"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(lines.len(), 4);

    let o = f.with_cfg(&["export", "--format", "tsv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
    assert!(stdout(&o).starts_with("term\turl\t"));
}

#[test]
fn rebuilding_is_idempotent() {
    let f = Fixture::new();
    assert!(f.build().status.success());
    let strip = |p: &Path| -> Vec<String> {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| {
                let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                v.as_object_mut().unwrap().remove("indexed_at");
                v.to_string()
            })
            .collect()
    };
    let first = strip(&f.path("db.jsonl"));
    assert!(f.build().status.success());
    assert_eq!(strip(&f.path("db.jsonl")), first);
}

#[test]
fn dynamic_query_builds_and_indexes() {
    let f = Fixture::new();
    f.train();
    let o = f.with_cfg(&["query", "groupware"]);
    assert_eq!(o.status.code(), Some(1));
    let o = f.with_cfg(&["query", "groupware", "--dynamic"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = f.with_cfg(&["query", "groupware"]);
    assert!(o.status.success());
}

fn record(term: &str, url: &str, text: &str, pp: f64) -> String {
    serde_json::json!({
        "term": term,
        "text": text,
        "url": url,
        "method": "NLP",
        "trigger": "p1",
        "perplexity": pp,
        "cluster_id": 0,
        "representative": true,
        "indexed_at": "2024-01-01T00:00:00Z",
    })
    .to_string()
}

#[test]
fn eval_reports_accuracy_and_coverage() {
    let f = Fixture::new();
    // term, text, perplexity, judged correct
    let rows = [
        ("alpha", "alpha one", 10.0, true),
        ("alpha", "alpha two", 20.0, true),
        ("alpha", "alpha three", 2000.0, false),
        ("beta", "beta one", 30.0, false),
        ("beta", "beta two", 5000.0, true),
    ];
    let mut db = vec![r#"{"format":"term-scribe-db","version":1}"#.to_string()];
    let mut judgments = String::new();
    for (i, (term, text, pp, ok)) in rows.iter().enumerate() {
        let url = format!("http://example.com/{i}");
        db.push(record(term, &url, text, *pp));
        judgments.push_str(&format!("{term}\t{url}\t{}\t{}\n", sha256_hex(text), u8::from(*ok)));
    }
    fs::write(f.path("db.jsonl"), db.join("\n") + "\n").unwrap();
    fs::write(f.path("judgments.tsv"), judgments).unwrap();
    fs::write(f.path("pages.tsv"), "alpha\t12\nbeta\t3\ngamma\t4\ndelta\t0\n").unwrap();

    let o = run(&[
        "eval",
        "--judgments",
        &f.s("judgments.tsv"),
        "--pages",
        &f.s("pages.tsv"),
        "--threshold",
        "1000",
        "--db",
        &f.s("db.jsonl"),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let total = out.lines().find(|l| l.starts_with("total")).unwrap();
    let cols: Vec<&str> = total.split_whitespace().collect();
    // total pages | all: 3/5 | filtered: 2/3
    assert_eq!(cols, ["total", "19", "|", "3", "5", "60.0", "|", "2", "3", "66.7"], "{out}");
    assert!(out.contains("coverage (all): 2/3 = 66.7%"), "{out}");
    assert!(out.contains("coverage (PP < 1000): 2/3 = 66.7%"), "{out}");
}

#[test]
fn bad_config_exits_with_two() {
    let f = Fixture::new();
    fs::write(f.path("bad.toml"), "window_n = \"three\"\n").unwrap();
    let o = run(&["export", "--config", &f.s("bad.toml")]);
    assert_eq!(o.status.code(), Some(2));

    fs::write(f.path("unknown.toml"), "no_such_key = 1\n").unwrap();
    let o = run(&["export", "--config", &f.s("unknown.toml")]);
    assert_eq!(o.status.code(), Some(2));

    let o = f.with_cfg(&["build", "--lexicon", &f.s("lexicon.txt")]);
    assert_eq!(o.status.code(), Some(2), "missing model should be fatal");

    let o = run(&["query"]);
    assert_eq!(o.status.code(), Some(2), "usage errors also exit 2");
}

#[test]
fn mine_patterns_ranks_planted_pair() {
    let f = Fixture::new();
    let mut entries = String::new();
    let mut lexicon = String::new();
    for i in 0..20 {
        entries.push_str(&format!("Thing{i}\tThing{i} is a kind of tool . It sits on a shelf {i} .\n"));
        lexicon.push_str(&format!("Thing{i}\n"));
    }
    fs::write(f.path("entries.tsv"), entries).unwrap();
    fs::write(f.path("lex.txt"), lexicon).unwrap();
    fs::write(f.path("fw.txt"), "is\na\nof\non\n").unwrap();
    let o = run(&[
        "mine-patterns",
        "--entries",
        &f.s("entries.tsv"),
        "--lexicon",
        &f.s("lex.txt"),
        "--function-words",
        &f.s("fw.txt"),
        "--top-k",
        "3",
        "--out",
        &f.s("mined.tsv"),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mined = fs::read_to_string(f.path("mined.tsv")).unwrap();
    assert!(mined.lines().count() <= 3);
    assert!(mined.lines().any(|l| l == "20\tX is a\tkind of"), "{mined}");
}

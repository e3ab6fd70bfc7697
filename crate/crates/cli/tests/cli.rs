use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const BOOK: &str = "Chapter one.\n\nThe mill stood by the river and turned all day. \
Nobody in the village remembered who had built it, or why! \
Children said a giant lived under the wheel? Their parents only laughed at them. \
In winter the river froze and the mill fell silent for weeks.\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_textanchor"))
}

/// Transcript reading `text` word by word with a pause after every sentence.
fn transcript(id: &str, text: &str) -> Value {
    let mut t = 0.3;
    let mut words = Vec::new();
    for raw in text.split_whitespace() {
        let word: String = raw.chars().filter(|c| c.is_alphanumeric()).collect();
        let dur = 0.1 + 0.06 * word.len() as f64;
        words.push(json!({"word": word.to_lowercase(), "start": t, "end": t + dur}));
        t += dur
            + if raw.ends_with(['.', '!', '?']) {
                0.8
            } else {
                0.05
            };
    }
    json!({"id": id, "audio_path": format!("{id}.wav"), "words": words})
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new(book: &str, transcripts: &[Value]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("book.txt"), book).unwrap();
        let lines: Vec<String> = transcripts.iter().map(Value::to_string).collect();
        std::fs::write(dir.path().join("ts.jsonl"), lines.join("\n") + "\n").unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, sub: &str, extra: &[&str]) -> Output {
        bin()
            .arg(sub)
            .arg("--book")
            .arg(self.path("book.txt"))
            .arg("--transcripts")
            .arg(self.path("ts.jsonl"))
            .args(extra)
            .output()
            .unwrap()
    }
}

fn json_lines(bytes: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn read_lines(path: &Path) -> Vec<Value> {
    json_lines(&std::fs::read(path).unwrap())
}

#[test]
fn pipeline_writes_cuts_and_exits_zero() {
    let f = Fixture::new(BOOK, &[transcript("rec-a", &BOOK[14..])]);
    let out = f.path("cuts.jsonl");
    let res = f.run("pipeline", &["--out", out.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary: Value = serde_json::from_slice(&res.stdout).unwrap();
    let cuts = read_lines(&out);
    assert!(!cuts.is_empty());
    assert_eq!(summary["segments"].as_u64().unwrap() as usize, cuts.len());
    for cut in &cuts {
        let d = cut["duration"].as_f64().unwrap();
        assert!((2.0..=30.0).contains(&d));
        let (b, e) = (
            cut["begin_byte"].as_u64().unwrap() as usize,
            cut["end_byte"].as_u64().unwrap() as usize,
        );
        assert_eq!(cut["text"].as_str().unwrap(), &BOOK[b..e]);
    }
}

#[test]
fn pipeline_without_segments_exits_one() {
    let f = Fixture::new(
        BOOK,
        &[transcript(
            "stray",
            "purple elephants dance quietly under neon umbrellas tonight",
        )],
    );
    let out = f.path("cuts.jsonl");
    let res = f.run("pipeline", &["--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(read_lines(&out).is_empty());
}

#[test]
fn bad_input_exits_two() {
    let f = Fixture::new(BOOK, &[]);
    std::fs::write(f.path("ts.jsonl"), "{not json}\n").unwrap();
    let res = f.run(
        "pipeline",
        &["--out", f.path("cuts.jsonl").to_str().unwrap()],
    );
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 1"));

    let res = bin()
        .args([
            "locate",
            "--book",
            "/nonexistent/book.txt",
            "--transcripts",
            "x",
        ])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn locate_prints_the_chain() {
    let f = Fixture::new("I love you", &[transcript("toy", "love")]);
    let res = f.run("locate", &[]);
    assert_eq!(res.status.code(), Some(0));
    let records = json_lines(&res.stdout);
    assert_eq!(records.len(), 1);
    assert_eq!(records[0]["id"], "toy");
    // "LOVE" starts at symbol 2 of "I LOVE YOU"; equal-i neighbours may join
    // the chain as well.
    let chain: Vec<(u64, u64)> = serde_json::from_value(records[0]["chain"].clone()).unwrap();
    for i in 0..4 {
        assert!(chain.contains(&(i, i + 2)), "{chain:?}");
    }
    assert!(chain
        .windows(2)
        .all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
    assert_eq!(records[0]["locatable"], true);
}

#[test]
fn align_with_and_without_anchors_agree() {
    let f = Fixture::new(
        BOOK,
        &[transcript("rec-a", &BOOK[14..].replace("river", "rivet"))],
    );
    let anchored = json_lines(&f.run("align", &[]).stdout);
    let full = json_lines(&f.run("align", &["--no-anchors"]).stdout);
    assert_eq!(anchored[0]["cost"], full[0]["cost"]);
    assert_eq!(full[0]["anchors_used"], 0);
    assert!(anchored[0]["dp_cells"].as_u64() < full[0]["dp_cells"].as_u64());
    assert!(full[0]["cost"].as_u64().unwrap() >= 2);
}

#[test]
fn segment_without_punctuation_has_no_candidates() {
    let book = "the mill stood by the river and turned all day nobody remembered who built it";
    let f = Fixture::new(book, &[transcript("flat", book)]);
    let res = f.run("segment", &[]);
    let records = json_lines(&res.stdout);
    assert_eq!(records.len(), 1);
    assert_eq!(records[0]["candidates"], json!([]));
    assert_eq!(records[0]["selected"], json!([]));
}

#[test]
fn flags_override_config_file() {
    let f = Fixture::new(BOOK, &[transcript("rec-a", &BOOK[14..])]);
    std::fs::write(f.path("cfg.toml"), "context_bytes = 7\njobs = 2\n").unwrap();
    let cfg = f.path("cfg.toml");
    let out = f.path("cuts.jsonl");

    let res = f.run(
        "pipeline",
        &[
            "--out",
            out.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
        ],
    );
    assert_eq!(res.status.code(), Some(0));
    let cuts = read_lines(&out);
    assert!(cuts
        .iter()
        .all(|c| c["pre_texts"].as_str().unwrap().len() <= 7));
    assert!(cuts
        .iter()
        .any(|c| c["pre_texts"].as_str().unwrap().len() == 7));

    let res = f.run(
        "pipeline",
        &[
            "--out",
            out.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--context-bytes",
            "3",
        ],
    );
    assert_eq!(res.status.code(), Some(0));
    let cuts = read_lines(&out);
    assert!(cuts
        .iter()
        .any(|c| c["pre_texts"].as_str().unwrap().len() == 3));
    assert!(cuts
        .iter()
        .all(|c| c["pre_texts"].as_str().unwrap().len() <= 3));

    let res = f.run(
        "pipeline",
        &["--out", out.to_str().unwrap(), "--min-chain-coverage", "2"],
    );
    assert_eq!(res.status.code(), Some(2));
}

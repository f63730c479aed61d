use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rcms_cli::BENCH_COLUMNS;

const CORPUS: &str = "A cab sat back. Bab had a cab; a dab of bacc. Abba cab, cab abba! \
    The cat sat on a mat and ate a bat. Back a cab, bad cab, a cab at bay. Acca baba cabbage.";

fn rcms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcms"))
        .args(args)
        .env_remove("RCMS_WORKERS")
        .output()
        .unwrap()
}

fn corpus(dir: &Path) -> PathBuf {
    let path = dir.join("corpus.txt");
    fs::write(&path, CORPUS).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_passes() {
    let out = rcms(&["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok        coverage"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(rcms(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rcms(&["bench", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(rcms(&["train-lm", "--corpus", "/nonexistent/corpus.txt"]).status.code(), Some(1));
    assert_eq!(rcms(&["--help"]).status.code(), Some(0));
    let bad_workers = Command::new(env!("CARGO_BIN_EXE_rcms"))
        .args(["validate"])
        .env("RCMS_WORKERS", "lots")
        .output()
        .unwrap();
    assert_eq!(bad_workers.status.code(), Some(1));
}

fn without_wall_time(csv: &str) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let header = reader.headers().unwrap().clone();
    assert_eq!(header.iter().collect::<Vec<_>>(), BENCH_COLUMNS);
    let wall = header.iter().position(|h| h == "wall_seconds").unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            r.iter().enumerate().filter(|(i, _)| *i != wall).map(|(_, v)| v.to_string()).collect()
        })
        .collect()
}

#[test]
fn bench_rows_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus(dir.path());
    let args = |out: &Path| {
        rcms(&[
            "bench", "--corpus", s(&corpus), "--alphabet", "abcdehmnosty", "--length", "40", "--beams", "1",
            "--methods", "rcms,beam", "--seeds", "3", "--iterations", "4", "--workers", "2", "--output", s(out),
        ])
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(args(&a).status.code(), Some(0));
    assert_eq!(args(&b).status.code(), Some(0));
    let rows = without_wall_time(&fs::read_to_string(&a).unwrap());
    assert_eq!(rows.len(), 2);
    assert_eq!(rows, without_wall_time(&fs::read_to_string(&b).unwrap()));
    assert_eq!((rows[0][2].as_str(), rows[1][2].as_str()), ("rcms", "beam"));
    assert!(rows.iter().all(|r| r[0] == "rcms-bench" && r[1] == "1" && r[3] == "1" && r[4] == "3"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus(dir.path());
    let config = dir.path().join("sweep.toml");
    fs::write(
        &config,
        format!(
            "format_version = 1\ncorpus = {:?}\nbeams = [2, 3]\nseeds = [0, 1]\nlength = 30\niterations = 2\nmethods = [\"beam\"]\n",
            s(&corpus)
        ),
    )
    .unwrap();
    let out = dir.path().join("out.csv");
    let status = rcms(&["bench", "--config", s(&config), "--beams", "1", "--output", s(&out)]).status;
    assert_eq!(status.code(), Some(0));
    let rows = without_wall_time(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[2] == "beam" && r[3] == "1"));
    assert_eq!((rows[0][4].as_str(), rows[1][4].as_str()), ("0", "1"));
}

fn run_record(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn full_width_decipher_matches_exact() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus(dir.path());
    let (lm, inst) = (dir.path().join("lm.json"), dir.path().join("inst.json"));
    // Alphabet {space, a, b, c} and six symbols: 4^6 = 4096 assignments.
    let common = ["--corpus", s(&corpus), "--alphabet", "abc"];
    let out = rcms(&[&["train-lm"][..], &common, &["--order", "2", "--output", s(&lm)]].concat());
    assert_eq!(out.status.code(), Some(0));
    let out = rcms(&[&["gen-cipher"][..], &common, &["--length", "6", "--seed", "5", "--output", s(&inst)]].concat());
    assert_eq!(out.status.code(), Some(0));

    let decipher = |method: &str, extra: &[&str], out: &Path| {
        let mut args = vec!["decipher", "--instance", s(&inst), "--lm", s(&lm), "--method", method, "--iterations", "6", "--output", s(out)];
        args.extend_from_slice(extra);
        assert_eq!(rcms(&args).status.code(), Some(0));
        run_record(out)
    };
    let dump = dir.path().join("trellis.jsonl");
    let wide = decipher("rcms", &["--B", "4096", "--dump-trellis", s(&dump)], &dir.path().join("rcms.json"));
    let exact = decipher("exact", &[], &dir.path().join("exact.json"));
    assert_eq!(wide["format"], "rcms-emrun");
    let trajectory = |v: &serde_json::Value| {
        let mut ll: Vec<f64> = v["log_likelihoods"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        ll.push(v["final_log_likelihood"].as_f64().unwrap());
        ll
    };
    for (a, b) in trajectory(&wide).iter().zip(trajectory(&exact)) {
        assert!((a - b).abs() <= 1e-9 * b.abs(), "{a} vs {b}");
    }
    assert_eq!(wide["decoded"], exact["decoded"]);
    let lines = fs::read_to_string(&dump).unwrap();
    assert!(lines.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(lines.lines().any(|l| l.contains("\"kind\":\"e\"")));
}

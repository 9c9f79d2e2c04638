use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn trackbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trackbench")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_then_track_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    let out = dir.path().join("out");
    let o = trackbench(&["synth", "--preset", "translation", "--seed", "2", "--out", s(&seq)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(seq.join("img/0060.pgm").exists());

    let o = trackbench(&["track", "--tracker", "RR", "--sequence", s(&seq), "--seed", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("60 frames"));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 61);
    assert!(results.lines().nth(1).unwrap().starts_with("1,"));
    assert!(out.join("coeffs.csv").exists());
}

#[test]
fn synthetic_sequence_names_track_directly() {
    let dir = tempfile::tempdir().unwrap();
    let o = trackbench(&["track", "--tracker", "L1_WMB", "--sequence", "synth:illumination", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bench_writes_every_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.json");
    fs::write(
        &cfg,
        r#"{"trackers": [{"kind": "RR", "motion": {"particle_count": 60}},
                          {"kind": "RR", "label": "RR_l0.1", "lambda_ridge": 0.1, "motion": {"particle_count": 60}}],
            "sequences": ["synth:translation"], "seed": 3, "runs": 3, "output_directory": "res"}"#,
    )
    .unwrap();
    let o = trackbench(&["bench", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["rank_cle.csv", "rank_tsr.csv", "speed.csv", "summary.txt", "runs.csv", "aggregate.csv"] {
        assert!(dir.path().join("res").join(f).exists(), "{f}");
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("RR_l0.1"));
}

#[test]
fn rank_orders_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.csv");
    fs::write(&f, "label,mean,std,n\nslow,9.0,1.0,10\nfast,1.0,1.0,10\nmid,1.2,1.0,10\n").unwrap();
    let o = trackbench(&["rank", "--summaries", s(&f)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("direction: lower"));
    let fast = text.lines().find(|l| l.starts_with("fast")).unwrap();
    let slow = text.lines().find(|l| l.starts_with("slow")).unwrap();
    assert_eq!(fast.split_whitespace().nth(4), Some("1"));
    assert_eq!(slow.split_whitespace().nth(4), Some("2"));
}

#[test]
fn configuration_problems_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"trackers": [{"kind": "RR"}], "sequences": ["x"], "colour": 1}"#).unwrap();
    assert_eq!(code(&trackbench(&["bench", "--config", s(&cfg), "--out", s(dir.path())])), 2);

    fs::write(&cfg, r#"{"trackers": [{"kind": "RR", "lambda_ridge": -1}], "sequences": ["synth:translation"]}"#).unwrap();
    assert_eq!(code(&trackbench(&["bench", "--config", s(&cfg), "--out", s(dir.path())])), 2);

    let f = dir.path().join("s.csv");
    fs::write(&f, "label,mean,std,n\na,1,1,5\nb,2,1,5\n").unwrap();
    assert_eq!(code(&trackbench(&["rank", "--summaries", s(&f), "--alpha", "0.01"])), 2);
    assert_eq!(code(&trackbench(&["track", "--tracker", "KCF", "--sequence", "synth:translation", "--out", s(dir.path())])), 2);
    assert_eq!(code(&trackbench(&["synth", "--preset", "nope", "--out", s(dir.path())])), 2);
}

#[test]
fn missing_sequences_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = trackbench(&["track", "--tracker", "RR", "--sequence", s(&dir.path().join("absent")), "--out", s(dir.path())]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent"));
}

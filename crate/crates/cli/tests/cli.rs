use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/spider_mini")
}

fn config() -> PathBuf {
    fixtures().join("spidereval.toml")
}

fn spidereval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spidereval"))
        .args(args)
        .env_remove("OPENAI_API_KEY")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn replay_run(out: &Path, limit: Option<&str>) -> Output {
    let (replay, cfg) = (fixtures().join("replay"), config());
    let mut args = vec!["--config", s(&cfg), "run", "--replay", s(&replay), "--out", s(out)];
    if let Some(l) = limit {
        args.extend(["--limit", l]);
    }
    spidereval(&args)
}

#[test]
fn replay_run_with_limit_writes_that_many_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.jsonl");
    let o = replay_run(&out, Some("5"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 5);
}

#[test]
fn replay_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    assert_eq!(code(&replay_run(&a, None)), 0);
    assert_eq!(code(&replay_run(&b, None)), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 25);
}

#[test]
fn evaluate_writes_reproducible_reports() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.jsonl");
    assert_eq!(code(&replay_run(&t, None)), 0);
    let evaluate = |out: &Path| {
        let o = spidereval(&["--config", s(&config()), "evaluate", "--transcripts", s(&t), "--out-dir", s(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (r1, r2) = (dir.path().join("r1"), dir.path().join("r2"));
    evaluate(&r1);
    evaluate(&r2);
    for f in ["report.md", "report.json", "triage.jsonl"] {
        assert_eq!(fs::read(r1.join(f)).unwrap(), fs::read(r2.join(f)).unwrap(), "{f}");
    }
    assert!(r1.join("report.md.meta.json").is_file());
    let md = fs::read_to_string(r1.join("report.md")).unwrap();
    assert!(md.contains("| | easy | medium | hard | extra | all |"));
    assert!(md.contains("| count | 9 | 8 | 2 | 6 | 25 |"));
    assert!(md.contains("| execution accuracy | 0.889 | 1.000 | 1.000 | 0.333 | 0.800 |"));
    assert!(!md.contains("generated_at"));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(r1.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["scores"]["correct"], 20);
    let labels: Vec<String> = fs::read_to_string(r1.join("triage.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["label"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(
        labels,
        [
            "DatasetInconsistency.TieAmbiguity",
            "JoinClauses.Extra",
            "PredictedValues.WrongValue",
            "DatasetInconsistency.SuspectGold",
            "AggregateChoice.HiddenFromOutput",
        ]
    );
}

#[test]
fn empty_transcripts_give_a_zero_report() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("empty.jsonl");
    fs::write(&t, "").unwrap();
    let o = spidereval(&["--config", s(&config()), "report", "--transcripts", s(&t), "--format", "markdown"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let md = String::from_utf8(o.stdout).unwrap();
    assert!(md.contains("| count | 0 | 0 | 0 | 0 | 0 |"));
    assert!(md.contains("| execution accuracy | 0.000 | 0.000 | 0.000 | 0.000 | 0.000 |"));
    assert!(md.contains("Triaged: 0"));
}

#[test]
fn missing_transcripts_are_fatal_and_listed() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.jsonl");
    assert_eq!(code(&replay_run(&t, Some("5"))), 0);
    let o = spidereval(&["--config", s(&config()), "report", "--transcripts", s(&t), "--limit", "7"]);
    assert_eq!(code(&o), 7);
    assert!(String::from_utf8_lossy(&o.stderr).contains("[5, 6]"));
    let o = spidereval(&["--config", s(&config()), "report", "--transcripts", s(&t), "--limit", "5"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.jsonl");
    let root = fixtures();

    assert_eq!(code(&spidereval(&["run"])), 2);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[pipeline]\nworkers = 0\n").unwrap();
    assert_eq!(code(&spidereval(&["--config", s(&bad), "ingest", "--dataset", s(&root)])), 3);
    fs::write(&bad, "[pipeline\n").unwrap();
    assert_eq!(code(&spidereval(&["--config", s(&bad), "ingest", "--dataset", s(&root)])), 3);
    let o = spidereval(&["run", "--dataset", s(&root), "--limit", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 3, "missing API key");

    assert_eq!(code(&spidereval(&["ingest", "--dataset", s(&dir.path().join("nowhere"))])), 4);

    let o = spidereval(&["debug-ast", "--dataset", s(&root), "--db", "no_such_db", "SELECT 1"]);
    assert_eq!(code(&o), 5);
    let o = spidereval(&["--config", s(&config()), "run", "--db", "no_such_db", "--out", s(&out)]);
    assert_eq!(code(&o), 5);

    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    drop(listener);
    let live = dir.path().join("live.toml");
    fs::write(
        &live,
        format!(
            "[dataset]\nroot = \"{}\"\n[generator]\nurl = \"http://127.0.0.1:{port}/v1/chat/completions\"\n\
             api_key_env = \"\"\ntimeout_secs = 2.0\n[retry]\nmax_attempts = 2\nbase_delay_ms = 1\nmax_delay_ms = 2\n",
            s(&root)
        ),
    )
    .unwrap();
    let o = spidereval(&["--config", s(&live), "run", "--limit", "2", "--out", s(&out)]);
    assert_eq!(code(&o), 6, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 2);

    let empty = dir.path().join("empty_replay");
    fs::create_dir(&empty).unwrap();
    let o = spidereval(&["--config", s(&config()), "run", "--replay", s(&empty), "--limit", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 8);
}

#[test]
fn ingest_and_corpus_emission() {
    let dir = tempfile::tempdir().unwrap();
    let root = fixtures();
    let o = spidereval(&["ingest", "--dataset", s(&root)]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["loaded"], 25);
    assert_eq!(v["hardness"]["counts"]["hard"], 2);

    let sk = dir.path().join("sk.jsonl");
    assert_eq!(code(&spidereval(&["emit-corpus", "skeleton", "--dataset", s(&root), "--out", s(&sk)])), 0);
    let lines: Vec<String> = fs::read_to_string(&sk).unwrap().lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 26);
    assert!(lines[1].contains(" ||| "));

    let chat = dir.path().join("chat.jsonl");
    assert_eq!(code(&spidereval(&["emit-corpus", "chat", "--dataset", s(&root), "--out", s(&chat)])), 0);
    assert_eq!(fs::read_to_string(&chat).unwrap().lines().count(), 25);

    let split_file = root.join("dev.json");
    let o = spidereval(&["ingest", "--dataset", s(&split_file)]);
    assert_eq!(code(&o), 0);
}

#[test]
fn debug_ast_reports_conditionless_joins() {
    let o = spidereval(&[
        "debug-ast",
        "--dataset",
        s(&fixtures()),
        "--db",
        "dog_kennels",
        "SELECT DISTINCT T1.first_name FROM Professionals AS T1 JOIN Treatments AS T2 WHERE cost_of_treatment < 100",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["conditionless_joins"].as_array().unwrap().len(), 1);
    assert_eq!(v["conditionless_joins"][0]["table"], "Treatments");
}

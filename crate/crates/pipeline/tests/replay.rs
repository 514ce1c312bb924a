mod common;

use std::collections::BTreeMap;
use std::fs;
use std::sync::Arc;

use spidereval_core::exec::{execute_for_comparison, render_markdown, ExecLimits, ExecOutcome};
use spidereval_pipeline::script::{ScriptRole, ScriptedTransport};
use spidereval_pipeline::transcript::to_line;
use spidereval_pipeline::{
    run_examples, FinalVerdict, PipelineConfig, PipelineTranscript, RecordingTransport,
    ReplayStore, Role, Stage,
};

use common::*;

fn run_replay(workers: usize) -> Vec<PipelineTranscript> {
    let ds = dataset();
    run_examples(
        &ds.examples,
        &ds.schemas,
        &PipelineConfig::default(),
        &replayed(),
        workers,
    )
}

fn jsonl(ts: &[PipelineTranscript]) -> String {
    ts.iter().map(|t| to_line(t) + "\n").collect()
}

fn listing(dir: &std::path::Path) -> BTreeMap<String, String> {
    let Ok(entries) = fs::read_dir(dir) else {
        return BTreeMap::new();
    };
    entries
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read_to_string(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn replay_fixtures_match_the_model_script() {
    let tmp = tempfile::tempdir().unwrap();
    let store = ReplayStore::new(tmp.path());
    let s = script();
    let eps = endpoints(
        Arc::new(RecordingTransport::new(
            ScriptedTransport::new(&s, ScriptRole::Generator),
            store.clone(),
        )),
        Arc::new(RecordingTransport::new(
            ScriptedTransport::new(&s, ScriptRole::Corrector),
            store,
        )),
    );
    let ds = dataset();
    let ts = run_examples(
        &ds.examples,
        &ds.schemas,
        &PipelineConfig::default(),
        &eps,
        1,
    );
    assert!(ts
        .iter()
        .all(|t| t.stages.iter().all(|s| s.transport_error.is_none())));
    let fresh = listing(tmp.path());
    if std::env::var_os("REGENERATE_FIXTURES").is_some() {
        let dir = replay_dir();
        for name in listing(&dir).keys() {
            if !fresh.contains_key(name) {
                fs::remove_file(dir.join(name)).unwrap();
            }
        }
        fs::create_dir_all(&dir).unwrap();
        for (name, body) in &fresh {
            fs::write(dir.join(name), body).unwrap();
        }
    }
    assert_eq!(
        listing(&replay_dir()),
        fresh,
        "replay fixtures are stale; rerun with REGENERATE_FIXTURES=1"
    );
}

#[test]
fn replay_runs_are_byte_identical() {
    let a = jsonl(&run_replay(1));
    let b = jsonl(&run_replay(1));
    let c = jsonl(&run_replay(4));
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.lines().count(), 25);
}

#[test]
fn verdicts_and_call_counts() {
    use FinalVerdict::*;
    let expected = [
        Failed,
        CorrectFirstShot,
        CorrectFirstShot,
        CorrectedByExample,
        CorrectFirstShot, // student
        Failed,
        CorrectFirstShot,
        CorrectedByError,
        CorrectFirstShot,
        CorrectedByExample, // car
        Failed,
        CorrectFirstShot,
        CorrectFirstShot,
        CorrectFirstShot,
        CorrectFirstShot, // battle
        Failed,
        Failed,
        CorrectedByError,
        CorrectFirstShot,
        CorrectFirstShot, // dogs
        CorrectedByExample,
        CorrectFirstShot,
        CorrectFirstShot,
        CorrectedByError,
        CorrectedByError, // concerts
    ];
    let config = PipelineConfig::default();
    let ts = run_replay(2);
    for (t, want) in ts.iter().zip(expected) {
        assert_eq!(t.final_verdict, want, "example {}", t.example_id);
        assert!(t.model_calls <= config.max_calls());
        let calls = match want {
            CorrectFirstShot => 1,
            CorrectedByExample => 2,
            _ => 3,
        };
        assert_eq!(t.model_calls, calls, "example {}", t.example_id);
        assert_eq!(t.stages.len(), t.model_calls);
        assert_eq!(
            t.final_sql.as_deref(),
            t.stages
                .iter()
                .rev()
                .find_map(|s| s.extracted_sql.as_deref())
        );
    }
}

#[test]
fn stages_run_in_order_and_stop_at_success() {
    for t in run_replay(1) {
        let order: Vec<Stage> = t.stages.iter().map(|s| s.stage).collect();
        let full = [
            Stage::ZeroShot,
            Stage::ExampleCorrection { round: 1 },
            Stage::ErrorCorrection,
        ];
        assert_eq!(order, full[..order.len()]);
        if let Some(i) = t.stages.iter().position(|s| s.is_equivalent()) {
            assert_eq!(i + 1, t.stages.len(), "example {}", t.example_id);
        }
    }
}

#[test]
fn example_turn_shows_the_rendered_gold_table() {
    let ds = dataset();
    for t in run_replay(1) {
        let Some(stage) = t.stages.get(1) else {
            continue;
        };
        let schema = &ds.schemas[&t.db_id];
        let ExecOutcome::Table(gold) =
            execute_for_comparison(&schema.db_path, &t.gold_sql, ExecLimits::default()).unwrap()
        else {
            panic!("gold fails")
        };
        assert_eq!(stage.messages.len(), 4);
        assert_eq!(stage.messages[..2], t.stages[0].messages[..]);
        assert_eq!(stage.messages[2].role, Role::Assistant);
        assert_eq!(Some(&stage.messages[2].content), t.stages[0].reply.as_ref());
        assert!(stage.messages[3].content.contains(&render_markdown(&gold)));
    }
}

#[test]
fn corrector_sees_a_fresh_conversation() {
    for t in run_replay(1) {
        let Some(last) = t.stages.iter().find(|s| s.stage == Stage::ErrorCorrection) else {
            continue;
        };
        assert_eq!(last.messages.len(), 2);
        assert_eq!(last.messages[0].role, Role::System);
        let prompt = &last.messages[1].content;
        let failed = t.stages[..t.stages.len() - 1]
            .iter()
            .rev()
            .find_map(|s| s.extracted_sql.clone())
            .unwrap();
        assert!(prompt.contains(&failed));
        let scrubbed = prompt.replace(&failed, "");
        for earlier in &t.stages[..t.stages.len() - 1] {
            for m in earlier
                .messages
                .iter()
                .skip(2)
                .filter(|m| m.role == Role::User)
            {
                assert!(!prompt.contains(&m.content), "example {}", t.example_id);
            }
            let reply = earlier.reply.as_deref().unwrap();
            for line in reply
                .lines()
                .filter(|l| l.len() > 3 && !l.starts_with("```"))
            {
                assert!(
                    !scrubbed.contains(line),
                    "example {}: {line:?}",
                    t.example_id
                );
            }
        }
        assert!(!prompt.contains("expected output"));
    }
}

#[test]
fn corrector_gets_the_verbatim_engine_error() {
    let ts = run_replay(1);
    let dog = &ts[17];
    let err = dog.stages[1]
        .outcome
        .as_ref()
        .unwrap()
        .error_message()
        .unwrap();
    assert_eq!(err, "no such table: Dog");
    let prompt = &dog.stages[2].messages[1].content;
    assert!(prompt.contains("no such table: Dog"));
    assert!(prompt.contains("SELECT count(*) FROM Dog"));

    let union = &ts[24];
    assert!(union.stages[1].outcome.as_ref().unwrap().table().is_some());
    let prompt = &union.stages[2].messages[1].content;
    assert!(prompt.contains("does not match the expected answer"));
    assert!(!prompt.to_lowercase().contains("error"));
}

#[test]
fn unreplied_first_turn_goes_to_example_round() {
    let ts = run_replay(1);
    let t = &ts[20];
    assert!(t.stages[0].extracted_sql.is_none());
    assert!(t.stages[0].error.is_some());
    assert!(t.stages[1].messages[3]
        .content
        .contains("did not contain a SQL query"));
}

#[test]
fn missing_database_is_a_fault() {
    let mut ds = dataset();
    let mut schema = ds.schemas["dog_kennels"].clone();
    schema.db_path = schema.db_path.with_file_name("absent.sqlite");
    ds.schemas.insert("dog_kennels".into(), schema);
    ds.schemas.remove("car_1");
    let ts = run_examples(
        &ds.examples,
        &ds.schemas,
        &PipelineConfig::default(),
        &replayed(),
        1,
    );
    for t in &ts[5..10] {
        assert_eq!(t.final_verdict, FinalVerdict::Fault);
        assert!(t.fault.as_deref().unwrap().contains("car_1"));
    }
    for t in &ts[15..20] {
        assert_eq!(t.final_verdict, FinalVerdict::Fault);
        assert_eq!(t.model_calls, 0);
    }
    assert_eq!(ts[1].final_verdict, FinalVerdict::CorrectFirstShot);
}

#[test]
fn unreachable_endpoint_stops_the_pipeline() {
    use spidereval_pipeline::{ChatRequest, ChatTransport, TransportError, TransportFailureKind};
    struct Down;
    impl ChatTransport for Down {
        fn send(&self, _: &ChatRequest) -> Result<String, TransportError> {
            Err(TransportError::Exhausted {
                attempts: 5,
                last: "connection refused".into(),
            })
        }
    }
    let ds = dataset();
    let eps = endpoints(Arc::new(Down), Arc::new(Down));
    let ts = run_examples(
        &ds.examples[..3],
        &ds.schemas,
        &PipelineConfig::default(),
        &eps,
        1,
    );
    for t in ts {
        assert_eq!(t.model_calls, 1);
        assert_eq!(t.final_verdict, FinalVerdict::Failed);
        assert!(t.has_transport_failure(TransportFailureKind::Network));
    }
}

#[test]
fn stage_switches_reduce_calls() {
    let ds = dataset();
    let config = PipelineConfig {
        max_example_correction_rounds: 0,
        enable_error_correction: false,
        ..PipelineConfig::default()
    };
    let ts = run_examples(&ds.examples, &ds.schemas, &config, &scripted(), 1);
    assert!(ts.iter().all(|t| t.model_calls == 1));
    let correct = ts
        .iter()
        .filter(|t| t.final_verdict == FinalVerdict::CorrectFirstShot)
        .count();
    assert_eq!(correct, 13);
}

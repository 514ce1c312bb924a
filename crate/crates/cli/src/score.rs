//! Hardness-stratified execution accuracy.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use spidereval_core::dataset::{Dataset, SpiderExample};
use spidereval_core::exec::{compare_tables, execute_for_comparison, EquivalenceOptions, ExecLimits, ExecOutcome};
use spidereval_core::hardness::Hardness;
use spidereval_pipeline::{FinalVerdict, PipelineTranscript};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketScore {
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
}

impl BucketScore {
    pub fn new(count: usize, correct: usize) -> Self {
        let accuracy = if count == 0 { 0.0 } else { correct as f64 / count as f64 };
        BucketScore {
            count,
            correct,
            accuracy,
        }
    }
}

/// Σ(count × accuracy) / Σ count; zero when there is nothing to average.
pub fn weighted_accuracy(buckets: &[(usize, f64)]) -> f64 {
    let total: usize = buckets.iter().map(|(c, _)| c).sum();
    if total == 0 {
        return 0.0;
    }
    buckets.iter().map(|&(c, a)| c as f64 * a).sum::<f64>() / total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScore {
    pub example_id: usize,
    pub hardness: Hardness,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub buckets: BTreeMap<Hardness, BucketScore>,
    pub overall: f64,
    pub evaluated: usize,
    pub correct: usize,
    pub quarantined: usize,
    /// Evaluated plus quarantined.
    pub ingested_total: usize,
    pub faults: usize,
    pub stages: BTreeMap<FinalVerdict, usize>,
    pub examples: Vec<ExampleScore>,
}

impl Scores {
    pub fn incorrect_ids(&self) -> Vec<usize> {
        self.examples.iter().filter(|e| !e.correct).map(|e| e.example_id).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("no transcript for example ids {0:?}")]
    MissingTranscripts(Vec<usize>),
    #[error("transcripts for ids {0:?} do not belong to the dataset")]
    UnknownExamples(Vec<usize>),
    #[error("duplicate transcripts for example ids {0:?}")]
    Duplicates(Vec<usize>),
}

/// The examples a transcript file is scored against: the first `limit`
/// examples of the split, or none when the file is empty.
pub fn evaluation_set<'a>(
    dataset: &'a Dataset,
    transcripts: &[PipelineTranscript],
    limit: Option<usize>,
) -> Vec<&'a SpiderExample> {
    if transcripts.is_empty() {
        return Vec::new();
    }
    dataset.examples.iter().take(limit.unwrap_or(usize::MAX)).collect()
}

/// Index of transcripts by example id, checked against `examples`.
pub fn match_transcripts<'t>(
    transcripts: &'t [PipelineTranscript],
    examples: &[&SpiderExample],
    dataset: &Dataset,
) -> Result<BTreeMap<usize, &'t PipelineTranscript>, ScoreError> {
    let mut by_id = BTreeMap::new();
    let mut dup = BTreeSet::new();
    for t in transcripts {
        if by_id.insert(t.example_id, t).is_some() {
            dup.insert(t.example_id);
        }
    }
    if !dup.is_empty() {
        return Err(ScoreError::Duplicates(dup.into_iter().collect()));
    }
    let unknown: Vec<usize> = by_id.keys().copied().filter(|id| dataset.example(*id).is_none()).collect();
    if !unknown.is_empty() {
        return Err(ScoreError::UnknownExamples(unknown));
    }
    let missing: Vec<usize> = examples.iter().map(|e| e.id).filter(|id| !by_id.contains_key(id)).collect();
    if !missing.is_empty() {
        return Err(ScoreError::MissingTranscripts(missing));
    }
    Ok(by_id)
}

/// Whether `pred_sql` reproduces the gold result. Only the final query
/// counts; the stage history is ignored.
pub fn is_correct(
    dataset: &Dataset,
    example: &SpiderExample,
    pred_sql: Option<&str>,
    limits: ExecLimits,
    opts: &EquivalenceOptions,
) -> bool {
    let (Some(sql), Some(schema)) = (pred_sql, dataset.schema(&example.db_id)) else {
        return false;
    };
    let run = |q: &str| match execute_for_comparison(&schema.db_path, q, limits) {
        Ok(ExecOutcome::Table(t)) => Some(t),
        _ => None,
    };
    match (run(sql), run(&example.gold_sql)) {
        (Some(p), Some(g)) => compare_tables(&p, &g, opts).is_equivalent(),
        _ => false,
    }
}

pub fn score(
    transcripts: &[PipelineTranscript],
    examples: &[&SpiderExample],
    dataset: &Dataset,
    limits: ExecLimits,
    opts: &EquivalenceOptions,
) -> Result<Scores, ScoreError> {
    let by_id = match_transcripts(transcripts, examples, dataset)?;
    let mut counts: BTreeMap<Hardness, (usize, usize)> = Hardness::ALL.iter().map(|h| (*h, (0, 0))).collect();
    let mut stages = BTreeMap::new();
    let mut faults = 0;
    let mut scored = Vec::with_capacity(examples.len());
    for e in examples {
        let t = by_id[&e.id];
        let correct = is_correct(dataset, e, t.final_sql.as_deref(), limits, opts);
        let slot = counts.get_mut(&e.hardness).expect("every bucket is present");
        slot.0 += 1;
        slot.1 += usize::from(correct);
        *stages.entry(t.final_verdict).or_insert(0) += 1;
        faults += usize::from(t.final_verdict == FinalVerdict::Fault);
        scored.push(ExampleScore {
            example_id: e.id,
            hardness: e.hardness,
            correct,
        });
    }
    let buckets: BTreeMap<Hardness, BucketScore> =
        counts.into_iter().map(|(h, (n, c))| (h, BucketScore::new(n, c))).collect();
    let pairs: Vec<(usize, f64)> = buckets.values().map(|b| (b.count, b.accuracy)).collect();
    let evaluated = examples.len();
    Ok(Scores {
        overall: weighted_accuracy(&pairs),
        evaluated,
        correct: scored.iter().filter(|s| s.correct).count(),
        quarantined: dataset.quarantined.len(),
        ingested_total: evaluated + dataset.quarantined.len(),
        faults,
        stages,
        buckets,
        examples: scored,
    })
}

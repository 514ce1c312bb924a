//! Structured and markdown evaluation reports.
//!
//! Reports depend only on their inputs. Wall-clock data goes to a separate
//! `<report>.meta.json` sidecar so that regenerating a report from the same
//! transcripts reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use spidereval_core::hardness::Hardness;
use spidereval_core::triage::{triage_report, Category, TriageDistribution, TriageVerdict};
use spidereval_pipeline::FinalVerdict;

use crate::score::Scores;
use crate::triage::TriageRecord;

pub const REPORT_FORMAT: &str = "spidereval-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunInfo {
    pub config_digest: String,
    pub generator_model: String,
    pub corrector_model: String,
    pub transcripts_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub format: &'static str,
    pub version: u32,
    pub scores: Scores,
    pub triage: TriageDistribution,
    pub triaged_examples: BTreeMap<String, Vec<usize>>,
    pub run: RunInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub generated_at_unix: u64,
    pub tool_version: &'static str,
    pub command: Vec<String>,
}

impl EvalReport {
    pub fn new(scores: Scores, triage: &[TriageRecord], run: RunInfo) -> Self {
        let verdicts: Vec<TriageVerdict> = triage.iter().map(|r| r.verdict.clone()).collect();
        let distribution = if verdicts.is_empty() {
            TriageDistribution::default()
        } else {
            triage_report(&verdicts)
        };
        let mut triaged_examples: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for r in triage {
            triaged_examples.entry(r.label.clone()).or_default().push(r.example_id);
        }
        EvalReport {
            format: REPORT_FORMAT,
            version: REPORT_VERSION,
            scores,
            triage: distribution,
            triaged_examples,
            run,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize") + "\n"
    }

    pub fn to_markdown(&self) -> String {
        let s = &self.scores;
        let mut out = String::new();
        out.push_str("# Evaluation report\n\n## Execution accuracy\n\n");
        out.push_str("| | easy | medium | hard | extra | all |\n|---|---:|---:|---:|---:|---:|\n");
        let bucket = |h: Hardness| s.buckets.get(&h).copied().unwrap_or(crate::score::BucketScore::new(0, 0));
        let _ = write!(out, "| count |");
        for h in Hardness::ALL {
            let _ = write!(out, " {} |", bucket(h).count);
        }
        let _ = writeln!(out, " {} |", s.evaluated);
        let _ = write!(out, "| execution accuracy |");
        for h in Hardness::ALL {
            let _ = write!(out, " {:.3} |", bucket(h).accuracy);
        }
        let _ = writeln!(out, " {:.3} |\n", s.overall);
        let _ = writeln!(out, "- evaluated: {}", s.evaluated);
        let _ = writeln!(out, "- correct: {}", s.correct);
        let _ = writeln!(out, "- quarantined: {}", s.quarantined);
        let _ = writeln!(out, "- ingested total: {}", s.ingested_total);
        let _ = writeln!(out, "- harness faults: {}\n", s.faults);

        out.push_str("## Pipeline stages\n\n| final verdict | count |\n|---|---:|\n");
        for v in [
            FinalVerdict::CorrectFirstShot,
            FinalVerdict::CorrectedByExample,
            FinalVerdict::CorrectedByError,
            FinalVerdict::Failed,
            FinalVerdict::Fault,
        ] {
            let _ = writeln!(out, "| {v:?} | {} |", s.stages.get(&v).copied().unwrap_or(0));
        }

        let t = &self.triage;
        let _ = writeln!(out, "\n## Failure triage\n\nTriaged: {}\n", t.total);
        out.push_str("| category | count | share |\n|---|---:|---:|\n");
        let categories = Category::SEVEN.iter().chain([Category::Unclassifiable].iter());
        for c in categories {
            let share = t.share(*c);
            let _ = writeln!(out, "| {c} | {} | {:.3} |", share.count, share.fraction);
        }
        if !t.subtags.is_empty() {
            out.push_str("\n| verdict | count | examples |\n|---|---:|---|\n");
            for (label, share) in &t.subtags {
                let ids = self.triaged_examples.get(label).map(|v| {
                    v.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
                });
                let _ = writeln!(out, "| {label} | {} | {} |", share.count, ids.unwrap_or_default());
            }
        }

        let r = &self.run;
        out.push_str("\n## Run\n\n");
        let _ = writeln!(out, "- generator model: {}", r.generator_model);
        let _ = writeln!(out, "- corrector model: {}", r.corrector_model);
        let _ = writeln!(out, "- config digest: {}", r.config_digest);
        let _ = writeln!(out, "- transcripts sha256: {}", r.transcripts_sha256);
        out
    }
}

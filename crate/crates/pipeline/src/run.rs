//! The three-stage synthesis loop for one example.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use spidereval_core::dataset::SpiderExample;
use spidereval_core::exec::markdown::render_markdown_capped;
use spidereval_core::exec::{
    compare_tables, execute_for_comparison, Equivalence, EquivalenceOptions, ExecLimits,
    ExecOutcome, ResultTable,
};
use spidereval_core::prompt::{
    error_correction_prompt, example_correction_prompt, outcome_summary, zero_shot_prompt,
    CorrectionReason, SYSTEM_PROMPT,
};
use spidereval_core::schema::DatabaseSchema;

use crate::chat::{parse_chat_response, ChatMessage, ChatRequest};
use crate::extract::extract_sql;
use crate::pool::map_parallel;
use crate::transport::{ChatTransport, TransportError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointRole {
    Generator,
    Corrector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            temperature: 0.0,
            max_tokens: 512,
        }
    }
}

#[derive(Clone)]
pub struct ModelEndpoint {
    pub role: EndpointRole,
    pub model_name: String,
    pub sampling: Sampling,
    pub transport: Arc<dyn ChatTransport>,
}

impl ModelEndpoint {
    pub fn request(&self, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest {
            model: self.model_name.clone(),
            messages,
            temperature: self.sampling.temperature,
            max_tokens: self.sampling.max_tokens,
        }
    }

    /// Sends the request and returns the reply text.
    pub fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let body = self.transport.send(request)?;
        Ok(parse_chat_response(&body)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub max_example_correction_rounds: u32,
    pub enable_error_correction: bool,
    pub limits: ExecLimits,
    /// Rows of the gold table shown in the example-driven turn.
    pub gold_table_row_cap: usize,
    pub equivalence: EquivalenceOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_example_correction_rounds: 1,
            enable_error_correction: true,
            limits: ExecLimits::default(),
            gold_table_row_cap: 50,
            equivalence: EquivalenceOptions::default(),
        }
    }
}

impl PipelineConfig {
    /// Upper bound on model calls per example.
    pub fn max_calls(&self) -> usize {
        1 + self.max_example_correction_rounds as usize + usize::from(self.enable_error_correction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Stage {
    ZeroShot,
    ExampleCorrection { round: u32 },
    ErrorCorrection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    #[serde(flatten)]
    pub stage: Stage,
    pub endpoint: EndpointRole,
    pub request_digest: String,
    /// The full message list sent to the model.
    pub messages: Vec<ChatMessage>,
    pub reply: Option<String>,
    pub extracted_sql: Option<String>,
    pub outcome: Option<ExecOutcome>,
    pub equivalence: Option<Equivalence>,
    /// Extraction failure or harness fault for this stage.
    pub error: Option<String>,
    pub transport_error: Option<TransportFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportFailure {
    pub message: String,
    pub kind: TransportFailureKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportFailureKind {
    /// Retries were exhausted; the endpoint is unreachable.
    Network,
    /// The replay store has no response for the request.
    ReplayMiss,
    Other,
}

impl From<&TransportError> for TransportFailureKind {
    fn from(e: &TransportError) -> Self {
        match e {
            _ if e.is_network() => TransportFailureKind::Network,
            TransportError::ReplayMiss { .. } => TransportFailureKind::ReplayMiss,
            _ => TransportFailureKind::Other,
        }
    }
}

impl StageRecord {
    pub fn is_equivalent(&self) -> bool {
        self.equivalence
            .as_ref()
            .is_some_and(Equivalence::is_equivalent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FinalVerdict {
    CorrectFirstShot,
    CorrectedByExample,
    CorrectedByError,
    Failed,
    /// The harness could not evaluate the example (database missing, gold
    /// query broken). Not a model failure.
    Fault,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTranscript {
    pub example_id: usize,
    pub db_id: String,
    pub question: String,
    pub gold_sql: String,
    pub stages: Vec<StageRecord>,
    pub final_sql: Option<String>,
    pub final_verdict: FinalVerdict,
    pub model_calls: usize,
    pub fault: Option<String>,
}

impl PipelineTranscript {
    /// True when some stage failed with a transport error of this kind.
    pub fn has_transport_failure(&self, kind: TransportFailureKind) -> bool {
        self.stages
            .iter()
            .any(|s| s.transport_error.as_ref().is_some_and(|t| t.kind == kind))
    }
}

pub struct Endpoints {
    pub generator: ModelEndpoint,
    pub corrector: ModelEndpoint,
}

struct Run<'a> {
    schema: &'a DatabaseSchema,
    config: &'a PipelineConfig,
    gold: &'a ResultTable,
    stages: Vec<StageRecord>,
}

impl Run<'_> {
    fn attempt(
        &mut self,
        stage: Stage,
        endpoint: &ModelEndpoint,
        messages: Vec<ChatMessage>,
    ) -> Option<String> {
        let request = endpoint.request(messages);
        let mut record = StageRecord {
            stage,
            endpoint: endpoint.role,
            request_digest: request.digest(),
            messages: request.messages.clone(),
            reply: None,
            extracted_sql: None,
            outcome: None,
            equivalence: None,
            error: None,
            transport_error: None,
        };
        match endpoint.complete(&request) {
            Err(e) => {
                record.transport_error = Some(TransportFailure {
                    kind: (&e).into(),
                    message: e.to_string(),
                })
            }
            Ok(reply) => {
                match extract_sql(&reply) {
                    Err(e) => record.error = Some(e.to_string()),
                    Ok(sql) => {
                        match execute_for_comparison(&self.schema.db_path, &sql, self.config.limits)
                        {
                            Ok(outcome) => {
                                if let ExecOutcome::Table(t) = &outcome {
                                    record.equivalence = Some(compare_tables(
                                        t,
                                        self.gold,
                                        &self.config.equivalence,
                                    ));
                                }
                                record.outcome = Some(outcome);
                            }
                            Err(fault) => record.error = Some(format!("harness: {fault}")),
                        }
                        record.extracted_sql = Some(sql);
                    }
                }
                record.reply = Some(reply);
            }
        }
        let reply = record.reply.clone();
        self.stages.push(record);
        reply
    }

    fn last(&self) -> &StageRecord {
        self.stages.last().expect("at least one stage ran")
    }

    fn network_down(&self) -> bool {
        self.last()
            .transport_error
            .as_ref()
            .is_some_and(|t| t.kind == TransportFailureKind::Network)
    }

    fn last_sql(&self) -> Option<&str> {
        self.stages
            .iter()
            .rev()
            .find_map(|s| s.extracted_sql.as_deref())
    }
}

fn fault(example: &SpiderExample, message: String) -> PipelineTranscript {
    PipelineTranscript {
        example_id: example.id,
        db_id: example.db_id.clone(),
        question: example.question.clone(),
        gold_sql: example.gold_sql.clone(),
        stages: Vec::new(),
        final_sql: None,
        final_verdict: FinalVerdict::Fault,
        model_calls: 0,
        fault: Some(message),
    }
}

/// Runs zero-shot generation, then up to `max_example_correction_rounds`
/// follow-up turns in the same conversation showing the gold table, then
/// one fresh request to the corrector. Stops at the first equivalent result.
pub fn run_pipeline(
    example: &SpiderExample,
    schema: &DatabaseSchema,
    config: &PipelineConfig,
    endpoints: &Endpoints,
) -> PipelineTranscript {
    let gold = match execute_for_comparison(&schema.db_path, &example.gold_sql, config.limits) {
        Err(e) => return fault(example, e.to_string()),
        Ok(ExecOutcome::Table(t)) if !t.truncated => t,
        Ok(ExecOutcome::Table(_)) => {
            return fault(example, "gold result exceeds the row cap".into())
        }
        Ok(ExecOutcome::ExecError { message, .. }) => {
            return fault(example, format!("gold query fails: {message}"))
        }
        Ok(ExecOutcome::Timeout) => return fault(example, "gold query timed out".into()),
    };
    let mut run = Run {
        schema,
        config,
        gold: &gold,
        stages: Vec::new(),
    };

    let mut conversation = vec![
        ChatMessage::system(SYSTEM_PROMPT),
        ChatMessage::user(zero_shot_prompt(schema, &example.question)),
    ];
    let mut verdict = None;
    let mut reply = run.attempt(Stage::ZeroShot, &endpoints.generator, conversation.clone());
    if run.last().is_equivalent() {
        verdict = Some(FinalVerdict::CorrectFirstShot);
    }

    let gold_markdown = render_markdown_capped(&gold, config.gold_table_row_cap);
    for round in 1..=config.max_example_correction_rounds {
        if verdict.is_some() || run.network_down() {
            break;
        }
        // A broken transport ends the conversation.
        let Some(previous) = reply.take() else { break };
        let last = run.last();
        let summary = match &last.outcome {
            Some(ExecOutcome::Table(t)) => outcome_summary(Some(t.rows.len()), None),
            Some(ExecOutcome::ExecError { message, .. }) => outcome_summary(None, Some(message)),
            Some(ExecOutcome::Timeout) => outcome_summary(None, None),
            None => "Your reply did not contain a SQL query.".to_string(),
        };
        conversation.push(ChatMessage::assistant(previous));
        conversation.push(ChatMessage::user(example_correction_prompt(
            &gold_markdown,
            &summary,
        )));
        reply = run.attempt(
            Stage::ExampleCorrection { round },
            &endpoints.generator,
            conversation.clone(),
        );
        if run.last().is_equivalent() {
            verdict = Some(FinalVerdict::CorrectedByExample);
        }
    }

    if verdict.is_none() && config.enable_error_correction && !run.network_down() {
        let failed_sql = run.last_sql().map(str::to_string);
        let timeout_note = format!("query timed out after {:?}", config.limits.timeout);
        let reason = match (&failed_sql, &run.last().outcome) {
            (None, _) => CorrectionReason::NoQuery,
            (Some(_), Some(ExecOutcome::ExecError { message, .. })) => {
                CorrectionReason::ExecError(message)
            }
            (Some(_), Some(ExecOutcome::Timeout)) => CorrectionReason::ExecError(&timeout_note),
            (Some(_), _) => CorrectionReason::ResultMismatch,
        };
        let prompt = error_correction_prompt(
            schema,
            &example.question,
            failed_sql.as_deref().unwrap_or(""),
            &reason,
        );
        let messages = vec![
            ChatMessage::system(SYSTEM_PROMPT),
            ChatMessage::user(prompt),
        ];
        run.attempt(Stage::ErrorCorrection, &endpoints.corrector, messages);
        if run.last().is_equivalent() {
            verdict = Some(FinalVerdict::CorrectedByError);
        }
    }

    let final_sql = run.last_sql().map(str::to_string);
    let model_calls = run.stages.len();
    PipelineTranscript {
        example_id: example.id,
        db_id: example.db_id.clone(),
        question: example.question.clone(),
        gold_sql: example.gold_sql.clone(),
        stages: run.stages,
        final_sql,
        final_verdict: verdict.unwrap_or(FinalVerdict::Failed),
        model_calls,
        fault: None,
    }
}

/// Runs every example on `workers` threads. Transcripts come back in input
/// order. An example whose database has no schema gets a fault transcript.
pub fn run_examples(
    examples: &[SpiderExample],
    schemas: &BTreeMap<String, DatabaseSchema>,
    config: &PipelineConfig,
    endpoints: &Endpoints,
    workers: usize,
) -> Vec<PipelineTranscript> {
    map_parallel(examples, workers, |e| match schemas.get(&e.db_id) {
        Some(schema) => run_pipeline(e, schema, config, endpoints),
        None => fault(e, format!("unknown database {}", e.db_id)),
    })
}

//! Staged synthesis pipeline: zero-shot generation, example-driven
//! correction in the same conversation, and one error-driven request to a
//! separate corrector model.

pub mod chat;
pub mod extract;
pub mod pool;
pub mod run;
pub mod script;
pub mod transcript;
pub mod transport;

pub use chat::{ChatMessage, ChatRequest, Role};
pub use extract::{extract_sql, NoSqlFound};
pub use run::{
    run_examples, run_pipeline, EndpointRole, Endpoints, FinalVerdict, ModelEndpoint,
    PipelineConfig, PipelineTranscript, Sampling, Stage, StageRecord, TransportFailure,
    TransportFailureKind,
};
pub use transport::{
    ChatTransport, HttpTransport, RecordingTransport, ReplayStore, RetryPolicy, TransportError,
};

//! Scripted model replies keyed by question, for fixtures and tests.
//!
//! Script file layout:
//! `{"examples": [{"question": "...", "generator": ["reply", ...], "corrector": "reply"}]}`.
//! The generator's n-th reply answers the n-th turn of its conversation.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chat::{response_body, ChatRequest, Role};
use crate::transport::{ChatTransport, TransportError};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelScript {
    pub examples: Vec<ScriptedExample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedExample {
    pub question: String,
    #[serde(default)]
    pub generator: Vec<String>,
    #[serde(default)]
    pub corrector: Option<String>,
}

impl ModelScript {
    pub fn load(path: &Path) -> Result<Self, TransportError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| TransportError::ScriptMiss(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScriptRole {
    Generator,
    Corrector,
}

pub struct ScriptedTransport {
    role: ScriptRole,
    by_question: HashMap<String, ScriptedExample>,
}

impl ScriptedTransport {
    pub fn new(script: &ModelScript, role: ScriptRole) -> Self {
        ScriptedTransport {
            role,
            by_question: script
                .examples
                .iter()
                .map(|e| (e.question.trim().to_string(), e.clone()))
                .collect(),
        }
    }
}

/// The question named in the first user turn.
fn question_of(request: &ChatRequest) -> Option<&str> {
    let user = request.messages.iter().find(|m| m.role == Role::User)?;
    let start = user.content.find("### Question: ")? + "### Question: ".len();
    let rest = &user.content[start..];
    Some(rest[..rest.find('\n').unwrap_or(rest.len())].trim())
}

impl ChatTransport for ScriptedTransport {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let question = question_of(request)
            .ok_or_else(|| TransportError::ScriptMiss("request names no question".into()))?;
        let entry = self.by_question.get(question).ok_or_else(|| {
            TransportError::ScriptMiss(format!("no script for question {question:?}"))
        })?;
        let reply = match self.role {
            ScriptRole::Generator => {
                let turn = request
                    .messages
                    .iter()
                    .filter(|m| m.role == Role::Assistant)
                    .count();
                entry.generator.get(turn)
            }
            ScriptRole::Corrector => entry.corrector.as_ref(),
        };
        let reply = reply.ok_or_else(|| {
            TransportError::ScriptMiss(format!("script for {question:?} ran out of replies"))
        })?;
        Ok(response_body(&request.model, reply))
    }
}

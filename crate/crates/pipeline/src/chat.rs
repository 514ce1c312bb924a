//! Chat-completion request and response shapes (OpenAI-compatible wire format).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    /// The exact bytes sent on the wire.
    pub fn body(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("request serializes")
    }

    /// Hex SHA-256 of [`ChatRequest::body`]; keys the replay store.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.body()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed chat response: {0}")]
pub struct ResponseError(pub String);

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: Option<String>,
}

/// Content of the first choice of a chat-completion response body.
pub fn parse_chat_response(body: &str) -> Result<String, ResponseError> {
    let wire: WireResponse =
        serde_json::from_str(body).map_err(|e| ResponseError(e.to_string()))?;
    let choice = wire
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| ResponseError("no choices".into()))?;
    choice
        .message
        .content
        .ok_or_else(|| ResponseError("choice has no content".into()))
}

/// A minimal response body carrying `content`, in the same wire format.
pub fn response_body(model: &str, content: &str) -> String {
    serde_json::json!({
        "object": "chat.completion",
        "model": model,
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": content},
            "finish_reason": "stop"
        }]
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_round_trip() {
        let body = response_body("m", "SELECT 1");
        assert_eq!(parse_chat_response(&body).unwrap(), "SELECT 1");
        assert!(parse_chat_response("{\"choices\":[]}").is_err());
        assert!(parse_chat_response("nope").is_err());
    }

    #[test]
    fn digest_tracks_every_field() {
        let r = ChatRequest {
            model: "g".into(),
            messages: vec![ChatMessage::user("q")],
            temperature: 0.0,
            max_tokens: 10,
        };
        let mut s = r.clone();
        s.temperature = 0.5;
        assert_eq!(r.digest().len(), 64);
        assert_eq!(r.digest(), r.clone().digest());
        assert_ne!(r.digest(), s.digest());
    }
}

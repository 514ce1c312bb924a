//! Fine-tune corpus emitters.
//!
//! Skeleton corpus: a header line
//! `{"format":"spidereval-skeleton","version":1}` followed by one record per
//! example, `{"id","db_id","question","prompt","response"}`, where the
//! response is `<skeleton> ||| <gold sql>`.
//!
//! Chat corpus: one `{"messages":[system,user,assistant]}` record per
//! example, the assistant turn being the gold query. No header.

use std::io::{self, Write};

use serde::Serialize;

use crate::dataset::SpiderExample;
use crate::prompt::{zero_shot_prompt, SYSTEM_PROMPT};
use crate::schema::DatabaseSchema;
use crate::sql::{parse_unbound, to_skeleton};

pub const SKELETON_FORMAT: &str = "spidereval-skeleton";
pub const SKELETON_VERSION: u32 = 1;
pub const SKELETON_SEPARATOR: &str = " ||| ";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub written: usize,
    pub skipped: usize,
}

#[derive(Serialize)]
struct Header {
    format: &'static str,
    version: u32,
}

#[derive(Serialize)]
struct SkeletonRecord<'a> {
    id: usize,
    db_id: &'a str,
    question: &'a str,
    prompt: String,
    response: String,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRecord<'a> {
    messages: [ChatMessage<'a>; 3],
}

fn write_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}

/// `skeleton ||| sql` for one gold query.
pub fn skeleton_response(gold_sql: &str) -> Option<String> {
    let ast = parse_unbound(gold_sql).ok()?;
    Some(format!("{}{SKELETON_SEPARATOR}{}", to_skeleton(&ast), gold_sql.trim()))
}

pub fn emit_skeleton_corpus<'a, W: Write>(
    examples: &[SpiderExample],
    schema_of: impl Fn(&str) -> Option<&'a DatabaseSchema>,
    out: &mut W,
) -> io::Result<CorpusStats> {
    write_line(
        out,
        &Header {
            format: SKELETON_FORMAT,
            version: SKELETON_VERSION,
        },
    )?;
    let mut stats = CorpusStats::default();
    for e in examples {
        let (Some(schema), Some(response)) = (schema_of(&e.db_id), skeleton_response(&e.gold_sql)) else {
            log::warn!("skipping example {} in skeleton corpus", e.id);
            stats.skipped += 1;
            continue;
        };
        write_line(
            out,
            &SkeletonRecord {
                id: e.id,
                db_id: &e.db_id,
                question: &e.question,
                prompt: zero_shot_prompt(schema, &e.question),
                response,
            },
        )?;
        stats.written += 1;
    }
    Ok(stats)
}

pub fn emit_chat_corpus<'a, W: Write>(
    examples: &[SpiderExample],
    schema_of: impl Fn(&str) -> Option<&'a DatabaseSchema>,
    out: &mut W,
) -> io::Result<CorpusStats> {
    let mut stats = CorpusStats::default();
    for e in examples {
        let Some(schema) = schema_of(&e.db_id) else {
            log::warn!("skipping example {} in chat corpus", e.id);
            stats.skipped += 1;
            continue;
        };
        if parse_unbound(&e.gold_sql).is_err() {
            log::warn!("skipping example {} in chat corpus: gold does not parse", e.id);
            stats.skipped += 1;
            continue;
        }
        let user = zero_shot_prompt(schema, &e.question);
        write_line(
            out,
            &ChatRecord {
                messages: [
                    ChatMessage {
                        role: "system",
                        content: SYSTEM_PROMPT,
                    },
                    ChatMessage {
                        role: "user",
                        content: &user,
                    },
                    ChatMessage {
                        role: "assistant",
                        content: e.gold_sql.trim(),
                    },
                ],
            },
        )?;
        stats.written += 1;
    }
    Ok(stats)
}

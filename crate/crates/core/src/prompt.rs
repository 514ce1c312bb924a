//! Prompt texts shared by the synthesis pipeline and the corpus emitters.

use crate::schema::DatabaseSchema;

pub const SYSTEM_PROMPT: &str = "You are a careful SQLite expert. You are given the tables of a \
database and a question about its contents. Answer with a single SQLite SELECT statement that \
returns exactly the columns the question asks for, in the order it asks for them. Use only \
tables and columns that exist in the schema. Do not explain the query.";

/// Zero-shot user turn: schema block, then the question.
pub fn zero_shot_prompt(schema: &DatabaseSchema, question: &str) -> String {
    format!(
        "{}### Question: {}\n### Answer with one SQLite query.\n",
        schema.prompt_block(),
        question.trim()
    )
}

/// Follow-up turn in the generator conversation carrying the expected
/// result table.
pub fn example_correction_prompt(gold_markdown: &str, outcome_summary: &str) -> String {
    format!(
        "The result of your query does not match the expected output. {outcome_summary}\n\
         The correct query returns this table:\n\n{gold_markdown}\n\
         Revise the query so that it returns exactly this table. Reply with the corrected SQLite query only.\n"
    )
}

/// Why a query is being sent to the corrector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorrectionReason<'a> {
    /// The engine rejected the query; the message is passed on verbatim.
    ExecError(&'a str),
    /// The query ran but its result differs from the expected one.
    ResultMismatch,
    /// No SQL could be extracted from the previous reply.
    NoQuery,
}

/// Stand-alone request to the corrector. Carries nothing from the
/// generator conversation except the failed query itself.
pub fn error_correction_prompt(
    schema: &DatabaseSchema,
    question: &str,
    failed_sql: &str,
    reason: &CorrectionReason<'_>,
) -> String {
    let problem = match reason {
        CorrectionReason::ExecError(message) => {
            format!("Executing it on the database fails with this error:\n{message}\n")
        }
        CorrectionReason::ResultMismatch => {
            "It runs, but its result does not match the expected answer to the question.\n".to_string()
        }
        CorrectionReason::NoQuery => "The previous attempt did not produce a usable query.\n".to_string(),
    };
    format!(
        "{}### Question: {}\n### Candidate query:\n{}\n### Problem:\n{}\
         Fix the query. Reply with the corrected SQLite query only.\n",
        schema.prompt_block(),
        question.trim(),
        failed_sql.trim(),
        problem
    )
}

/// Describes a predicted execution for the example-driven turn.
pub fn outcome_summary(rows: Option<usize>, error: Option<&str>) -> String {
    match (rows, error) {
        (_, Some(e)) => format!("Your query failed with the error: {e}"),
        (Some(0), None) => "Your query returned no rows.".to_string(),
        (Some(1), None) => "Your query returned 1 row.".to_string(),
        (Some(n), None) => format!("Your query returned {n} rows."),
        (None, None) => "Your query did not finish.".to_string(),
    }
}

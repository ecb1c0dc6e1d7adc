use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::ModelProfile;
use crate::corpus::Document;

/// Tokens kept free for the model's answer.
pub const ANSWER_RESERVE_TOKENS: u32 = 512;
/// Rough characters-per-token ratio used for budgeting.
pub const CHARS_PER_TOKEN: usize = 4;
pub const ABSENT_MARKER: &str = "None";
pub const OUTPUT_KEYS: [&str; 4] = ["virus", "country", "date", "cases"];
pub const BUNDLED_TEMPLATE: &str = "extraction-v1";
pub const DEFAULT_SHOTS: usize = 3;

const INSTRUCTION_V1: &str = include_str!("../../resources/prompts/extraction-v1.txt");
const DEMONSTRATIONS_V1: &str = include_str!("../../resources/prompts/demonstrations-v1.json");
const QUERY_PREFIX: &str = "Report:\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    fn new(role: Role, content: impl Into<String>) -> Self {
        Message { role, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub excerpt: String,
    pub answer: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub instruction: String,
    pub output_keys: Vec<String>,
    pub demonstrations: Vec<Demonstration>,
    pub absent_marker: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("unknown prompt template `{0}`")]
    Unknown(String),
    #[error("template `{name}` has {available} demonstrations, {requested} requested")]
    TooManyShots { name: String, requested: usize, available: usize },
    #[error("output keys must be {expected:?}, got {found:?}")]
    OutputKeys { expected: Vec<String>, found: Vec<String> },
    #[error("demonstration {index} answers with keys {found:?}")]
    DemonstrationKeys { index: usize, found: Vec<String> },
    #[error("instruction is empty")]
    EmptyInstruction,
    #[error("bad demonstrations resource: {0}")]
    Resource(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("prompt overhead of {overhead} tokens leaves no room in a {context_length}-token context")]
    BudgetExhausted { context_length: u32, overhead: u32 },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

impl PromptTemplate {
    /// A bundled template with the first `shots` of its demonstrations.
    pub fn named(name: &str, shots: usize) -> Result<Self, TemplateError> {
        if name != BUNDLED_TEMPLATE {
            return Err(TemplateError::Unknown(name.to_string()));
        }
        let all: Vec<Demonstration> =
            serde_json::from_str(DEMONSTRATIONS_V1).map_err(|e| TemplateError::Resource(e.to_string()))?;
        if shots > all.len() {
            return Err(TemplateError::TooManyShots { name: name.to_string(), requested: shots, available: all.len() });
        }
        let template = PromptTemplate {
            name: name.to_string(),
            instruction: INSTRUCTION_V1.trim_end().to_string(),
            output_keys: OUTPUT_KEYS.iter().map(|k| k.to_string()).collect(),
            demonstrations: all.into_iter().take(shots).collect(),
            absent_marker: ABSENT_MARKER.to_string(),
        };
        template.validate()?;
        Ok(template)
    }

    pub fn zero_shot() -> Self {
        Self::named(BUNDLED_TEMPLATE, 0).expect("bundled template is valid")
    }

    pub fn three_shot() -> Self {
        Self::named(BUNDLED_TEMPLATE, DEFAULT_SHOTS).expect("bundled template is valid")
    }

    pub fn shots(&self) -> usize {
        self.demonstrations.len()
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.instruction.trim().is_empty() {
            return Err(TemplateError::EmptyInstruction);
        }
        if self.output_keys != OUTPUT_KEYS {
            return Err(TemplateError::OutputKeys {
                expected: OUTPUT_KEYS.iter().map(|k| k.to_string()).collect(),
                found: self.output_keys.clone(),
            });
        }
        for (index, demo) in self.demonstrations.iter().enumerate() {
            if !demo.answer.keys().eq(self.output_keys.iter()) {
                return Err(TemplateError::DemonstrationKeys { index, found: demo.answer.keys().cloned().collect() });
            }
        }
        Ok(())
    }
}

fn query_text(body: &str) -> String {
    format!("{QUERY_PREFIX}{body}")
}

fn answer_text(answer: &IndexMap<String, String>) -> String {
    serde_json::to_string(answer).expect("string map serializes")
}

/// Messages for one document plus whether its body had to be cut.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub messages: Vec<Message>,
    pub truncated: bool,
    /// Tokens available to the document body.
    pub body_budget: u32,
}

/// Tokens taken by everything except the document body.
pub fn prompt_overhead(template: &PromptTemplate) -> u32 {
    let mut chars = template.instruction.chars().count() + QUERY_PREFIX.chars().count();
    for demo in &template.demonstrations {
        chars += query_text(&demo.excerpt).chars().count() + answer_text(&demo.answer).chars().count();
    }
    chars.div_ceil(CHARS_PER_TOKEN) as u32
}

/// Builds the chat messages: the instruction, each demonstration as a
/// (query, answer) pair, then the document query. The body is cut from the
/// end so the prompt fits `context_length - 512 - overhead` tokens at four
/// characters per token.
pub fn build_messages(doc: &Document, template: &PromptTemplate, model: &ModelProfile) -> Result<Prompt, PromptError> {
    template.validate()?;
    let overhead = prompt_overhead(template);
    let budget = model.context_length as i64 - ANSWER_RESERVE_TOKENS as i64 - overhead as i64;
    if budget <= 0 {
        return Err(PromptError::BudgetExhausted { context_length: model.context_length, overhead });
    }
    let max_chars = budget as usize * CHARS_PER_TOKEN;

    let mut messages = Vec::with_capacity(2 + 2 * template.demonstrations.len());
    messages.push(Message::new(Role::System, template.instruction.clone()));
    for demo in &template.demonstrations {
        messages.push(Message::new(Role::User, query_text(&demo.excerpt)));
        messages.push(Message::new(Role::Assistant, answer_text(&demo.answer)));
    }
    let truncated = doc.body.chars().count() > max_chars;
    let body: String = if truncated { doc.body.chars().take(max_chars).collect() } else { doc.body.clone() };
    messages.push(Message::new(Role::User, query_text(&body)));
    Ok(Prompt { messages, truncated, body_budget: budget as u32 })
}

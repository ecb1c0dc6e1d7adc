//! Prompted extraction with chat-completion models.
//!
//! [`extract_with_llm`] builds the prompt ([`build_messages`]), sends it
//! through a [`Transport`], recovers the answer object from the reply
//! ([`extract_json_island`]) and maps it onto an [`ExtractionRecord`]
//! ([`parse_fields`]).

mod fields;
mod island;
mod profile;
mod prompt;
mod transport;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub use fields::parse_fields;
pub use island::{extract_json_island, NoIsland};
pub use profile::{profile, registry, ModelKind, ModelProfile, ProfileError, DEFAULT_ENDPOINT};
pub use prompt::{
    build_messages, prompt_overhead, Demonstration, Message, Prompt, PromptError, PromptTemplate, Role, TemplateError,
    ABSENT_MARKER, ANSWER_RESERVE_TOKENS, BUNDLED_TEMPLATE, CHARS_PER_TOKEN, DEFAULT_SHOTS, OUTPUT_KEYS,
};
pub use transport::{
    response_text, CacheEntry, ChatRequest, RetryPolicy, Sampling, Transport, TransportError, TransportMode, API_KEY_VAR,
};

use crate::annotator::Gazetteer;
use crate::corpus::Document;
use crate::ensemble::ExtractionRecord;

pub const DEFAULT_CONCURRENCY: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("{document_id}: {source}")]
    Prompt { document_id: String, source: PromptError },
    #[error("{document_id}: {source}")]
    Transport { document_id: String, source: TransportError },
}

/// One model behind one prompt template.
#[derive(Debug, Clone)]
pub struct LlmExtractor {
    pub id: String,
    pub model: ModelProfile,
    pub template: PromptTemplate,
    pub sampling: Sampling,
}

impl LlmExtractor {
    pub fn new(id: impl Into<String>, model: ModelProfile, template: PromptTemplate) -> Self {
        LlmExtractor { id: id.into(), model, template, sampling: Sampling::default() }
    }

    pub fn request(&self, doc: &Document) -> Result<ChatRequest, LlmError> {
        let prompt = build_messages(doc, &self.template, &self.model)
            .map_err(|source| LlmError::Prompt { document_id: doc.id.clone(), source })?;
        Ok(ChatRequest::new(&self.model, &prompt.messages, self.sampling))
    }

    pub fn extract(&self, doc: &Document, transport: &Transport, gazetteer: &Gazetteer) -> Result<ExtractionRecord, LlmError> {
        let prompt = build_messages(doc, &self.template, &self.model)
            .map_err(|source| LlmError::Prompt { document_id: doc.id.clone(), source })?;
        let text = transport
            .complete(&self.model, &prompt.messages, self.sampling)
            .map_err(|source| LlmError::Transport { document_id: doc.id.clone(), source })?;
        let mut record = match extract_json_island(&text) {
            Ok(map) => parse_fields(&map, &doc.id, &self.id, gazetteer),
            Err(NoIsland) => {
                log::warn!("{}: no answer object in {} output", doc.id, self.id);
                let mut r = ExtractionRecord::empty(&doc.id, &self.id);
                r.flags.parse_failure = true;
                r
            }
        };
        record.flags.truncated_input = prompt.truncated;
        Ok(record)
    }
}

/// Runs one extraction with the bundled gazetteer; the extractor id is the
/// model name.
pub fn extract_with_llm(
    doc: &Document,
    model: &ModelProfile,
    template: &PromptTemplate,
    transport: &Transport,
) -> Result<ExtractionRecord, LlmError> {
    LlmExtractor::new(model.name.clone(), model.clone(), template.clone()).extract(doc, transport, &Gazetteer::bundled())
}

/// Applies `f` to every item with at most `limit` calls in flight and
/// returns the results in input order.
pub fn map_bounded<T, R, F>(items: &[T], limit: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    let workers = limit.max(1).min(items.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                let result = f(item);
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every slot filled")).collect()
}

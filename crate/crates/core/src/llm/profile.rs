use serde::{Deserialize, Serialize};

/// Chat-completions endpoint used when a profile does not name one.
pub const DEFAULT_ENDPOINT: &str = "http://127.0.0.1:8000/v1/chat/completions";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Open,
    Commercial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    /// Context window in tokens.
    pub context_length: u32,
    /// Parameter count, when published.
    #[serde(default)]
    pub parameter_count: Option<u64>,
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    pub kind: ModelKind,
}

fn default_endpoint() -> String {
    DEFAULT_ENDPOINT.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProfileError {
    #[error("model `{0}`: context length must be positive")]
    ZeroContext(String),
    #[error("model profile name is empty")]
    EmptyName,
}

const BILLION: u64 = 1_000_000_000;

impl ModelProfile {
    pub fn new(name: impl Into<String>, context_length: u32, parameter_count: Option<u64>, kind: ModelKind) -> Result<Self, ProfileError> {
        let profile = ModelProfile { name: name.into(), context_length, parameter_count, endpoint: default_endpoint(), kind };
        profile.validate()?;
        Ok(profile)
    }

    pub fn with_endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint = endpoint.into();
        self
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.name.trim().is_empty() {
            return Err(ProfileError::EmptyName);
        }
        if self.context_length == 0 {
            return Err(ProfileError::ZeroContext(self.name.clone()));
        }
        Ok(())
    }
}

fn seed(name: &str, context_length: u32, billions: Option<u64>, kind: ModelKind) -> ModelProfile {
    ModelProfile::new(name, context_length, billions.map(|b| b * BILLION), kind).expect("seed profile is valid")
}

/// The built-in model roster. Zephyr-7b-alpha has no published context
/// length; it is given the 4,096 tokens of the Mistral base it derives from.
pub fn registry() -> Vec<ModelProfile> {
    use ModelKind::*;
    vec![
        seed("Pythia-12b", 4096, Some(12), Open),
        seed("Mpt-30b-chat", 8192, Some(30), Open),
        seed("Llama-2-70b-chat", 4096, Some(70), Open),
        seed("Mistral-7b-openorca", 4096, Some(7), Open),
        seed("Zephyr-7b-alpha", 4096, Some(7), Open),
        seed("Gpt-35-turbo-16k", 16384, None, Commercial),
        seed("Gpt-4-32k", 32768, None, Commercial),
    ]
}

/// Looks a profile up by name, ignoring ASCII case.
pub fn profile(name: &str) -> Option<ModelProfile> {
    registry().into_iter().find(|p| p.name.eq_ignore_ascii_case(name))
}

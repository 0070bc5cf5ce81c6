//! Interchangeable plan generators and the confidence score computed from
//! their token probabilities.

mod llm;
mod oracle;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use llm::{
    llm_generate, EndpointConfig, FixtureTransport, HttpResponse, HttpTransport, LlmBackend, RecordingTransport,
    ReqwestTransport, TransportFailure,
};
pub use oracle::{oracle_plan, oracle_plan_with, OracleBackend, OracleConfig, OracleError, SearchStrategy};
pub use scripted::{ScriptEntry, ScriptRule, ScriptedBackend};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint rejected credentials (HTTP {0})")]
    Auth(u16),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("request timed out")]
    Timeout,
    #[error("backend cannot use prompt: {0}")]
    Prompt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecodingOptions {
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub text: String,
    /// One probability in (0, 1] per emitted token, when the backend reports them.
    pub token_probs: Option<Vec<f64>>,
    pub backend_id: String,
}

/// A plan generator. Implementations must tolerate concurrent calls.
pub trait PlannerBackend: Send + Sync {
    fn id(&self) -> &str;

    fn generate(&self, prompt: &str, options: &DecodingOptions) -> Result<GenerationResult, BackendError>;
}

impl<B: PlannerBackend + ?Sized> PlannerBackend for Box<B> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn generate(&self, prompt: &str, options: &DecodingOptions) -> Result<GenerationResult, BackendError> {
        (**self).generate(prompt, options)
    }
}

impl<B: PlannerBackend + ?Sized> PlannerBackend for std::sync::Arc<B> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn generate(&self, prompt: &str, options: &DecodingOptions) -> Result<GenerationResult, BackendError> {
        (**self).generate(prompt, options)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Arithmetic,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Confidence {
    Score(f64),
    Unavailable,
}

/// Arithmetic mean of the token probabilities.
pub fn confidence_score(r: &GenerationResult) -> Confidence {
    confidence_score_with(r, Aggregate::Arithmetic)
}

pub fn confidence_score_with(r: &GenerationResult, how: Aggregate) -> Confidence {
    match r.token_probs.as_deref() {
        None | Some([]) => Confidence::Unavailable,
        Some(ps) => {
            let n = ps.len() as f64;
            let score = match how {
                Aggregate::Arithmetic => ps.iter().sum::<f64>() / n,
                Aggregate::Geometric => (ps.iter().map(|p| p.ln()).sum::<f64>() / n).exp(),
            };
            Confidence::Score(score.clamp(0.0, 1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(probs: Option<Vec<f64>>) -> GenerationResult {
        GenerationResult { text: String::new(), token_probs: probs, backend_id: "t".into() }
    }

    #[test]
    fn mean_of_probabilities() {
        assert_eq!(confidence_score(&result(Some(vec![1.0, 1.0, 1.0]))), Confidence::Score(1.0));
        match confidence_score(&result(Some(vec![0.9, 0.5, 0.1]))) {
            Confidence::Score(s) => assert!((s - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(confidence_score(&result(None)), Confidence::Unavailable);
    }

    #[test]
    fn geometric_mean_switch() {
        match confidence_score_with(&result(Some(vec![0.25, 1.0])), Aggregate::Geometric) {
            Confidence::Score(s) => assert!((s - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}

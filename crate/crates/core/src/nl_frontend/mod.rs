//! Simplified language model: speech-act tagging, term recognition and
//! template-based generation.

pub mod generator;
pub mod tagger;

use thiserror::Error;

use crate::speech_acts::ActKind;

pub use generator::{render, required_templates, Templates};
pub use tagger::{recognize_terms, Tagger};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("tag rules: {}", .0.join("; "))]
    Rules(Vec<String>),
    #[error("templates: {}", .0.join("; "))]
    Templates(Vec<String>),
    #[error("no template for {0} with `{1}`")]
    MissingTemplate(ActKind, String),
}

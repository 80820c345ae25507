pub mod dsl;
pub mod engine;
pub mod plan;
pub mod task;

pub use engine::{Engine, EngineConfig, EngineEvent, StepOutput, TraceRecord};
pub use task::TaskInterface;

//! The engine's view of the task model.

use crate::semantics::Proposition;
use crate::task_model::{SuggestOutcome, TaskError, TaskModel};

/// Operations plan items delegate to the domain.
pub trait TaskInterface {
    /// Ids of documents matching the query described by `facts`, in id order.
    fn consult(&self, facts: &[Proposition]) -> Result<Vec<String>, TaskError>;
    fn suggest(&self, pattern: &str, pool: &[String], com: &[Proposition]) -> Result<SuggestOutcome, TaskError>;
    /// Named numeric constants usable in guards.
    fn parameter(&self, name: &str) -> Option<i64>;
    /// Any other task call; returned facts are added to the beliefs.
    fn call(&self, name: &str, args: &[String]) -> Result<Vec<Proposition>, TaskError>;
}

impl TaskInterface for TaskModel {
    fn consult(&self, facts: &[Proposition]) -> Result<Vec<String>, TaskError> {
        TaskModel::consult(self, facts).map(|(_, ids)| ids)
    }

    fn suggest(&self, pattern: &str, pool: &[String], com: &[Proposition]) -> Result<SuggestOutcome, TaskError> {
        TaskModel::suggest(self, pattern, pool, com)
    }

    fn parameter(&self, name: &str) -> Option<i64> {
        let c = &self.config;
        match name {
            "deltaMin" => Some(c.delta_min as i64),
            "deltaMax" => Some(c.delta_max as i64),
            _ => None,
        }
    }

    fn call(&self, name: &str, args: &[String]) -> Result<Vec<Proposition>, TaskError> {
        match (name, args) {
            ("lookupDefinition", [t]) => Ok(match self.terminology.get(t) {
                Some(_) => vec![Proposition::unary("definition", t.clone())],
                None => vec![Proposition::unary("noDefinition", t.clone())],
            }),
            _ => Err(TaskError::UnknownCall(format!("{name}/{}", args.len()))),
        }
    }
}

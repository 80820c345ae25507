//! Sessions over a loaded deployment, transcript persistence and scripted runs.

mod script;
mod session;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::nl_frontend::{required_templates, FrontendError, Tagger, Templates};
use crate::plan_engine::EngineConfig;
use crate::plan_library::{builtin_library, LibraryError, LibraryManifest, ENTRY_PLAN};
use crate::task_model::{desk, DocumentIndex, EvaluatorConfig, LoadError, TaskError, TaskModel, Terminology};

pub use script::{parse_script, run_script, ScriptLine, ScriptReport, TurnMismatch};
pub use session::{Reply, Session, SessionManager, TurnRecord};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error("empty utterance")]
    EmptyText,
    #[error("session `{0}` has ended")]
    Ended(String),
    #[error("script: {}", .0.join("; "))]
    Script(Vec<String>),
    #[error("too many open sessions ({0}); retry after some end")]
    Capacity(usize),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn read(path: &Path) -> Result<String, ServiceError> {
    std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Where a deployment's data comes from; `None` selects the bundled file.
#[derive(Debug, Clone, Default)]
pub struct DeploymentConfig {
    pub terminology: Option<PathBuf>,
    pub documents: Option<PathBuf>,
    pub plans: Option<PathBuf>,
    pub tag_rules: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub delta_min: Option<usize>,
    pub delta_max: Option<usize>,
    pub engine: EngineConfig,
}

/// Everything a session needs, loaded and cross-checked once.
#[derive(Debug)]
pub struct Deployment {
    pub library: LibraryManifest,
    pub task: TaskModel,
    pub tagger: Tagger,
    pub templates: Templates,
    pub engine: EngineConfig,
}

impl Deployment {
    pub fn new(
        library: LibraryManifest,
        task: TaskModel,
        tagger: Tagger,
        templates: Templates,
        engine: EngineConfig,
    ) -> Result<Self, ServiceError> {
        let required = required_templates(&library);
        if let Some((kind, shape)) = templates.missing(&required).into_iter().next() {
            return Err(FrontendError::MissingTemplate(kind, shape).into());
        }
        Ok(Self {
            library,
            task,
            tagger,
            templates,
            engine,
        })
    }

    /// Bundled plans, data and English lexicon.
    pub fn desk() -> Self {
        Self::new(
            builtin_library(),
            TaskModel::desk(),
            Tagger::english(),
            Templates::english(),
            EngineConfig::default(),
        )
        .expect("bundled deployment is consistent")
    }

    pub fn load(config: &DeploymentConfig) -> Result<Self, ServiceError> {
        let defaults = EvaluatorConfig::default();
        let evaluator = EvaluatorConfig::new(
            config.delta_min.unwrap_or(defaults.delta_min),
            config.delta_max.unwrap_or(defaults.delta_max),
        )?;
        let task = match (&config.terminology, &config.documents) {
            (None, None) => TaskModel {
                config: evaluator,
                ..TaskModel::desk()
            },
            (Some(t), Some(d)) => TaskModel::from_files(t, d, evaluator)?,
            (Some(t), None) => {
                let terminology = Terminology::parse(&read(t)?)?;
                let index = DocumentIndex::parse(
                    desk::DOCUMENTS,
                    &terminology,
                )?;
                TaskModel::new(terminology, index, evaluator)
            }
            (None, Some(d)) => {
                let base = TaskModel::desk();
                let index = DocumentIndex::parse(&read(d)?, &base.terminology)?;
                TaskModel::new(base.terminology, index, evaluator)
            }
        };
        let library = match &config.plans {
            Some(p) => LibraryManifest::parse(&read(p)?, ENTRY_PLAN)?,
            None => builtin_library(),
        };
        let tagger = match &config.tag_rules {
            Some(p) => Tagger::parse(&read(p)?)?,
            None => Tagger::english(),
        };
        let templates = match &config.templates {
            Some(p) => Templates::parse(&read(p)?)?,
            None => Templates::english(),
        };
        Self::new(library, task, tagger, templates, config.engine.clone())
    }
}

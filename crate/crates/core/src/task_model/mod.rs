//! Task model: faceted terminology, document index, query building,
//! result evaluation and cooperative suggestion search.

pub mod documents;
pub mod query;
pub mod terminology;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use documents::{Document, DocumentIndex, Header};
pub use query::{
    build_query, evaluate_count, evaluate_list, expand_query, refine_query, retrieve, Conjunct, EvaluatorConfig,
    ListVerdict, QueryExpr, Rationale,
};
pub use terminology::{normalize, Term, TermKind, TermMatch, Terminology};

use crate::semantics::Proposition;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error("unknown term id `{0}`")]
    UnknownTerm(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("query not buildable: no keyword is shared yet")]
    NotBuildable,
    #[error("invalid evaluator configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown suggestion pattern `{0}`")]
    UnknownPattern(String),
    #[error("unknown task call `{0}`")]
    UnknownCall(String),
}

/// Property patterns understood by [`TaskModel::suggest`].
pub const SUGGEST_PATTERNS: [&str; 6] = ["keyword", "metaTerm", "subheading", "specificTerm", "generalTerm", "interesting"];

/// One suggestion found by a cooperative search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suggestion {
    /// The fact proposed to the user.
    pub prop: Proposition,
    /// Replacement query when accepting the suggestion rewrites the query.
    pub query: Option<QueryExpr>,
    pub rationale: Option<Rationale>,
}

impl Suggestion {
    fn fact(prop: Proposition) -> Self {
        Self {
            prop,
            query: None,
            rationale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SuggestOutcome {
    Success(Vec<Suggestion>),
    Failure,
}

impl SuggestOutcome {
    fn from_vec(v: Vec<Suggestion>) -> Self {
        if v.is_empty() {
            SuggestOutcome::Failure
        } else {
            SuggestOutcome::Success(v)
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, SuggestOutcome::Success(_))
    }
}

pub fn get_nb_documents<T>(docs: &[T]) -> usize {
    docs.len()
}

/// Next element at `cursor` and the advanced cursor; `None` at end of list.
pub fn member_next<T>(docs: &[T], cursor: usize) -> Option<(&T, usize)> {
    docs.get(cursor).map(|d| (d, cursor + 1))
}

/// Terminology, documents and thresholds for one deployment.
#[derive(Debug, Clone)]
pub struct TaskModel {
    pub terminology: Terminology,
    pub index: DocumentIndex,
    pub config: EvaluatorConfig,
}

impl TaskModel {
    pub fn new(terminology: Terminology, index: DocumentIndex, config: EvaluatorConfig) -> Self {
        Self {
            terminology,
            index,
            config,
        }
    }

    /// The bundled desk-scale fixtures with default thresholds.
    pub fn desk() -> Self {
        let (t, i) = desk::load();
        Self::new(t, i, EvaluatorConfig::default())
    }

    pub fn from_files(terminology: &Path, documents: &Path, config: EvaluatorConfig) -> Result<Self, LoadError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| LoadError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let t = Terminology::parse(&read(terminology)?)?;
        let i = DocumentIndex::parse(&read(documents)?, &t)?;
        Ok(Self::new(t, i, config))
    }

    pub fn retrieve(&self, q: &QueryExpr) -> Result<Vec<&Document>, TaskError> {
        retrieve(q, &self.terminology, &self.index)
    }

    /// Builds the query from shared facts and returns it with the matching ids.
    pub fn consult<'a>(
        &self,
        facts: impl IntoIterator<Item = &'a Proposition>,
    ) -> Result<(QueryExpr, Vec<String>), TaskError> {
        let q = build_query(facts)?;
        let ids = self.retrieve(&q)?.into_iter().map(|d| d.id.clone()).collect();
        Ok((q, ids))
    }

    pub fn evaluate(&self, n: usize) -> ListVerdict {
        evaluate_count(n, &self.config)
    }

    fn count(&self, q: &QueryExpr) -> usize {
        self.retrieve(q).map(|v| v.len()).unwrap_or(0)
    }

    /// Keyword ids named by pool entries: ids directly, free text by recognition.
    fn pool_keywords(&self, pool: &[String]) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |id: &str| {
            if !out.iter().any(|o| o == id) {
                out.push(id.to_string());
            }
        };
        for s in pool {
            match self.terminology.kind_of(s) {
                Some(TermKind::Keyword) => push(s),
                Some(_) => {}
                None => {
                    for m in self.terminology.recognize(s) {
                        if let Some(id) = m
                            .ids
                            .iter()
                            .find(|id| self.terminology.kind_of(id) == Some(TermKind::Keyword))
                        {
                            push(id);
                        }
                    }
                }
            }
        }
        out
    }

    /// Cooperative search for facts with property `pattern` among `pool`
    /// (constants drawn from shared facts). `com` is the current shared
    /// context used to build the query for query-level patterns.
    pub fn suggest(&self, pattern: &str, pool: &[String], com: &[Proposition]) -> Result<SuggestOutcome, TaskError> {
        let t = &self.terminology;
        let out = match pattern {
            "keyword" => self
                .pool_keywords(pool)
                .into_iter()
                .map(|k| Suggestion::fact(Proposition::unary("keyword", k)))
                .collect(),
            "metaTerm" => {
                let metas: BTreeSet<String> = self
                    .pool_keywords(pool)
                    .iter()
                    .filter_map(|k| t.get(k))
                    .flat_map(|k| k.meta_parents.iter().cloned())
                    .collect();
                metas
                    .into_iter()
                    .map(|m| Suggestion::fact(Proposition::unary("metaTerm", m)))
                    .collect()
            }
            "subheading" => {
                let mut counts: BTreeMap<&String, usize> = BTreeMap::new();
                let kws = self.pool_keywords(pool);
                for d in self.index.iter() {
                    let hit = kws.iter().any(|k| {
                        t.descendants(k)
                            .is_some_and(|cl| d.header.keywords.iter().any(|h| cl.contains(h)))
                    });
                    if hit {
                        for s in &d.header.subheadings {
                            *counts.entry(s).or_default() += 1;
                        }
                    }
                }
                let mut ranked: Vec<(&String, usize)> = counts.into_iter().collect();
                ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
                ranked
                    .into_iter()
                    .map(|(s, _)| Suggestion::fact(Proposition::unary("subheading", s.clone())))
                    .collect()
            }
            "specificTerm" | "generalTerm" => {
                let q = match build_query(com) {
                    Ok(q) => q,
                    Err(TaskError::NotBuildable) => return Ok(SuggestOutcome::Failure),
                    Err(e) => return Err(e),
                };
                let base = self.count(&q);
                let candidates = if pattern == "specificTerm" {
                    refine_query(&q, t, &self.index, com)
                } else {
                    expand_query(&q, t)
                };
                let scored: Vec<(QueryExpr, Rationale, usize)> = candidates
                    .into_iter()
                    .map(|(c, r)| {
                        let n = self.count(&c);
                        (c, r, n)
                    })
                    .collect();
                let changes = |n: usize| if pattern == "specificTerm" { n < base && n > 0 } else { n > base };
                let acceptable = |n: usize| matches!(self.evaluate(n), ListVerdict::Acceptable(_));
                // Acceptable candidates first, then any that move the count the right way.
                let mut ranked: Vec<&(QueryExpr, Rationale, usize)> = scored.iter().filter(|s| acceptable(s.2)).collect();
                ranked.extend(scored.iter().filter(|s| !acceptable(s.2) && changes(s.2)));
                let mut out: Vec<Suggestion> = Vec::new();
                for (c, r, _) in ranked {
                    let prop = rationale_prop(r);
                    if out.iter().all(|s| s.prop != prop) {
                        out.push(Suggestion {
                            prop,
                            query: Some(c.clone()),
                            rationale: Some(r.clone()),
                        });
                    }
                }
                out
            }
            "interesting" => {
                let ids: BTreeSet<String> = match self.consult(com) {
                    Ok((_, ids)) => ids.into_iter().collect(),
                    Err(TaskError::NotBuildable) => BTreeSet::new(),
                    Err(e) => return Err(e),
                };
                pool.iter()
                    .filter(|d| ids.contains(*d))
                    .map(|d| Suggestion::fact(Proposition::unary("interesting", d.clone())))
                    .collect()
            }
            other => return Err(TaskError::UnknownPattern(other.to_string())),
        };
        Ok(SuggestOutcome::from_vec(out))
    }
}

/// The fact shown to the user for a query transform.
pub fn rationale_prop(r: &Rationale) -> Proposition {
    match r {
        Rationale::Hyperonym { to, .. } | Rationale::Hyponym { to, .. } => Proposition::unary("keyword", to.clone()),
        Rationale::AddConjunct(k) => Proposition::unary("keyword", k.clone()),
        Rationale::AttachSubheading { subheading, .. } => Proposition::unary("subheading", subheading.clone()),
        Rationale::AttachMetaTerm(m) => Proposition::unary("metaTerm", m.clone()),
        Rationale::AttachResourceType(x) => Proposition::unary("resourceType", x.clone()),
        other => Proposition::unary(other.code(), other.term().to_string()),
    }
}

/// Bundled synthetic fixtures.
pub mod desk {
    use super::{DocumentIndex, Terminology};

    pub const TERMINOLOGY: &str = include_str!("../../data/terminology.tsv");
    pub const DOCUMENTS: &str = include_str!("../../data/documents.tsv");

    pub fn load() -> (Terminology, DocumentIndex) {
        let t = Terminology::parse(TERMINOLOGY).expect("bundled terminology is valid");
        let i = DocumentIndex::parse(DOCUMENTS, &t).expect("bundled documents are valid");
        (t, i)
    }
}

//! Conjunctive faceted queries, retrieval with hierarchy closure, result
//! evaluation, and the expansion/refinement transforms.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::documents::{Document, DocumentIndex};
use super::terminology::{TermKind, Terminology};
use super::TaskError;
use crate::semantics::Proposition;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Conjunct {
    pub keyword: String,
    pub subheading: Option<String>,
}

impl Conjunct {
    pub fn bare(keyword: impl Into<String>) -> Self {
        Self {
            keyword: keyword.into(),
            subheading: None,
        }
    }

    pub fn with(keyword: impl Into<String>, subheading: impl Into<String>) -> Self {
        Self {
            keyword: keyword.into(),
            subheading: Some(subheading.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryExpr {
    /// Non-empty, duplicate-free, in the order the facets were grounded.
    pub conjuncts: Vec<Conjunct>,
    pub meta_filter: Option<String>,
    pub resource_filter: Option<String>,
}

impl QueryExpr {
    pub fn keyword(k: impl Into<String>) -> Self {
        Self {
            conjuncts: vec![Conjunct::bare(k)],
            meta_filter: None,
            resource_filter: None,
        }
    }

    fn dedup(mut self) -> Self {
        let mut seen = BTreeSet::new();
        self.conjuncts.retain(|c| seen.insert(c.clone()));
        let qualified: BTreeSet<String> = self
            .conjuncts
            .iter()
            .filter(|c| c.subheading.is_some())
            .map(|c| c.keyword.clone())
            .collect();
        self.conjuncts
            .retain(|c| c.subheading.is_some() || !qualified.contains(&c.keyword));
        self
    }

    pub fn validate(&self, t: &Terminology) -> Result<(), TaskError> {
        if self.conjuncts.is_empty() {
            return Err(TaskError::InvalidQuery("query has no conjuncts".into()));
        }
        let check = |id: &str, kind: TermKind| match t.kind_of(id) {
            Some(k) if k == kind => Ok(()),
            Some(k) => Err(TaskError::InvalidQuery(format!("`{id}` is a {k}, expected a {kind}"))),
            None => Err(TaskError::UnknownTerm(id.to_string())),
        };
        for c in &self.conjuncts {
            check(&c.keyword, TermKind::Keyword)?;
            if let Some(s) = &c.subheading {
                check(s, TermKind::Subheading)?;
            }
        }
        if let Some(m) = &self.meta_filter {
            check(m, TermKind::MetaTerm)?;
        }
        if let Some(r) = &self.resource_filter {
            check(r, TermKind::ResourceType)?;
        }
        Ok(())
    }

    /// Facet facts describing this query, in conjunct order.
    pub fn to_props(&self) -> Vec<Proposition> {
        let mut out = Vec::new();
        for c in &self.conjuncts {
            let k = Proposition::unary("keyword", c.keyword.clone());
            if !out.contains(&k) {
                out.push(k);
            }
            if let Some(s) = &c.subheading {
                out.push(Proposition::unary("subheading", s.clone()));
            }
        }
        if let Some(m) = &self.meta_filter {
            out.push(Proposition::unary("metaTerm", m.clone()));
        }
        if let Some(r) = &self.resource_filter {
            out.push(Proposition::unary("resourceType", r.clone()));
        }
        out
    }
}

impl fmt::Display for QueryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            match &c.subheading {
                Some(s) => write!(f, "{}/{}", c.keyword, s)?,
                None => f.write_str(&c.keyword)?,
            }
        }
        if let Some(m) = &self.meta_filter {
            write!(f, " [meta:{m}]")?;
        }
        if let Some(r) = &self.resource_filter {
            write!(f, " [type:{r}]")?;
        }
        Ok(())
    }
}

fn matches(doc: &Document, q: &QueryExpr, t: &Terminology) -> bool {
    let conj_ok = q.conjuncts.iter().all(|c| {
        let closure = t.descendants(&c.keyword);
        let kw = doc
            .header
            .keywords
            .iter()
            .any(|h| closure.is_some_and(|cl| cl.contains(h)));
        kw && c
            .subheading
            .as_ref()
            .is_none_or(|s| doc.header.subheadings.contains(s))
    });
    let meta_ok = q.meta_filter.as_ref().is_none_or(|m| {
        doc.header
            .keywords
            .iter()
            .any(|h| t.get(h).is_some_and(|term| term.meta_parents.contains(m)))
    });
    let res_ok = q
        .resource_filter
        .as_ref()
        .is_none_or(|r| doc.header.resource_type == *r);
    conj_ok && meta_ok && res_ok
}

/// Documents matching `q`, in id order.
pub fn retrieve<'a>(q: &QueryExpr, t: &Terminology, index: &'a DocumentIndex) -> Result<Vec<&'a Document>, TaskError> {
    q.validate(t)?;
    Ok(index.iter().filter(|d| matches(d, q, t)).collect())
}

/// Rebuilds the query from shared facts.
///
/// Each `keyword(k)` opens a conjunct; `subheading(s)` pairs with the most
/// recently grounded keyword before it (or the last keyword when none
/// precedes it); the last `metaTerm` and `resourceType` facts become filters.
pub fn build_query<'a>(facts: impl IntoIterator<Item = &'a Proposition>) -> Result<QueryExpr, TaskError> {
    let facts: Vec<&Proposition> = facts.into_iter().collect();
    let mut conjuncts: Vec<Conjunct> = Vec::new();
    let mut orphans = Vec::new();
    let mut meta = None;
    let mut res = None;
    for p in &facts {
        let Some(arg) = p.arg(0) else { continue };
        match p.predicate.as_str() {
            "keyword" => conjuncts.push(Conjunct::bare(arg)),
            "subheading" => match conjuncts.last_mut() {
                Some(c) if c.subheading.is_none() => c.subheading = Some(arg.to_string()),
                Some(c) => {
                    let k = c.keyword.clone();
                    conjuncts.push(Conjunct::with(k, arg));
                }
                None => orphans.push(arg.to_string()),
            },
            "metaTerm" => meta = Some(arg.to_string()),
            "resourceType" => res = Some(arg.to_string()),
            _ => {}
        }
    }
    if conjuncts.is_empty() {
        return Err(TaskError::NotBuildable);
    }
    for s in orphans {
        let last = conjuncts.last_mut().expect("non-empty");
        if last.subheading.is_none() {
            last.subheading = Some(s);
        } else {
            let k = last.keyword.clone();
            conjuncts.push(Conjunct::with(k, s));
        }
    }
    Ok(QueryExpr {
        conjuncts,
        meta_filter: meta,
        resource_filter: res,
    }
    .dedup())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluatorConfig {
    pub delta_min: usize,
    pub delta_max: usize,
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        Self {
            delta_min: 3,
            delta_max: 30,
        }
    }
}

impl EvaluatorConfig {
    pub fn new(delta_min: usize, delta_max: usize) -> Result<Self, TaskError> {
        if delta_min < delta_max {
            Ok(Self { delta_min, delta_max })
        } else {
            Err(TaskError::InvalidConfig(format!(
                "delta_min ({delta_min}) must be below delta_max ({delta_max})"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ListVerdict {
    NotEnough(usize),
    TooMany(usize),
    Acceptable(usize),
}

/// Strict inequalities: counts equal to either bound are acceptable.
pub fn evaluate_count(n: usize, cfg: &EvaluatorConfig) -> ListVerdict {
    if n < cfg.delta_min {
        ListVerdict::NotEnough(n)
    } else if n > cfg.delta_max {
        ListVerdict::TooMany(n)
    } else {
        ListVerdict::Acceptable(n)
    }
}

pub fn evaluate_list(docs: &[&Document], cfg: &EvaluatorConfig) -> ListVerdict {
    evaluate_count(docs.len(), cfg)
}

/// Why a transformed query was proposed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rationale {
    DropSubheading { keyword: String, subheading: String },
    Hyperonym { from: String, to: String },
    DropResourceType(String),
    DropConjunct(String),
    DropMetaTerm(String),
    Hyponym { from: String, to: String },
    AttachSubheading { keyword: String, subheading: String },
    AttachMetaTerm(String),
    AttachResourceType(String),
    AddConjunct(String),
}

impl Rationale {
    /// Short code used in dialog facts.
    pub fn code(&self) -> &'static str {
        match self {
            Rationale::DropSubheading { .. } => "dropSubheading",
            Rationale::Hyperonym { .. } => "hyperonym",
            Rationale::DropResourceType(_) => "dropResourceType",
            Rationale::DropConjunct(_) => "dropKeyword",
            Rationale::DropMetaTerm(_) => "dropMetaTerm",
            Rationale::Hyponym { .. } => "hyponym",
            Rationale::AttachSubheading { .. } => "addSubheading",
            Rationale::AttachMetaTerm(_) => "addMetaTerm",
            Rationale::AttachResourceType(_) => "addResourceType",
            Rationale::AddConjunct(_) => "addKeyword",
        }
    }

    /// The term the transform introduces or removes.
    pub fn term(&self) -> &str {
        match self {
            Rationale::DropSubheading { subheading, .. } | Rationale::AttachSubheading { subheading, .. } => subheading,
            Rationale::Hyperonym { to, .. } | Rationale::Hyponym { to, .. } => to,
            Rationale::DropResourceType(x)
            | Rationale::DropConjunct(x)
            | Rationale::DropMetaTerm(x)
            | Rationale::AttachMetaTerm(x)
            | Rationale::AttachResourceType(x)
            | Rationale::AddConjunct(x) => x,
        }
    }
}

/// Candidate broadenings, highest priority first. Each retrieves a
/// superset of the original result.
pub fn expand_query(q: &QueryExpr, t: &Terminology) -> Vec<(QueryExpr, Rationale)> {
    let mut out: Vec<(QueryExpr, Rationale)> = Vec::new();
    for (i, c) in q.conjuncts.iter().enumerate() {
        if let Some(s) = &c.subheading {
            let mut nq = q.clone();
            nq.conjuncts[i].subheading = None;
            out.push((
                nq.dedup(),
                Rationale::DropSubheading {
                    keyword: c.keyword.clone(),
                    subheading: s.clone(),
                },
            ));
        }
    }
    for (i, c) in q.conjuncts.iter().enumerate() {
        let Some(term) = t.get(&c.keyword) else { continue };
        for parent in &term.broader {
            let mut nq = q.clone();
            nq.conjuncts[i].keyword = parent.clone();
            out.push((
                nq.dedup(),
                Rationale::Hyperonym {
                    from: c.keyword.clone(),
                    to: parent.clone(),
                },
            ));
        }
    }
    if let Some(r) = &q.resource_filter {
        let mut nq = q.clone();
        nq.resource_filter = None;
        out.push((nq, Rationale::DropResourceType(r.clone())));
    }
    if q.conjuncts.len() > 1 {
        for (i, c) in q.conjuncts.iter().enumerate() {
            let mut nq = q.clone();
            nq.conjuncts.remove(i);
            out.push((nq, Rationale::DropConjunct(c.keyword.clone())));
        }
    }
    if let Some(m) = &q.meta_filter {
        let mut nq = q.clone();
        nq.meta_filter = None;
        out.push((nq, Rationale::DropMetaTerm(m.clone())));
    }
    out
}

/// Candidate narrowings, highest priority first. Each retrieves a subset of
/// the original result. `com` supplies extra keywords for new conjuncts.
pub fn refine_query(
    q: &QueryExpr,
    t: &Terminology,
    index: &DocumentIndex,
    com: &[Proposition],
) -> Vec<(QueryExpr, Rationale)> {
    let mut out: Vec<(QueryExpr, Rationale)> = Vec::new();
    for (i, c) in q.conjuncts.iter().enumerate() {
        let Some(term) = t.get(&c.keyword) else { continue };
        for child in &term.narrower {
            let mut nq = q.clone();
            nq.conjuncts[i].keyword = child.clone();
            out.push((
                nq.dedup(),
                Rationale::Hyponym {
                    from: c.keyword.clone(),
                    to: child.clone(),
                },
            ));
        }
    }
    let current: Vec<&Document> = retrieve(q, t, index).unwrap_or_default();
    for (i, c) in q.conjuncts.iter().enumerate() {
        if c.subheading.is_some() {
            continue;
        }
        let subs: BTreeSet<&String> = current.iter().flat_map(|d| d.header.subheadings.iter()).collect();
        for s in subs {
            let mut nq = q.clone();
            nq.conjuncts[i].subheading = Some(s.clone());
            out.push((
                nq.dedup(),
                Rationale::AttachSubheading {
                    keyword: c.keyword.clone(),
                    subheading: s.clone(),
                },
            ));
        }
    }
    if q.meta_filter.is_none() {
        let metas: BTreeSet<&String> = q
            .conjuncts
            .iter()
            .filter_map(|c| t.get(&c.keyword))
            .flat_map(|k| k.meta_parents.iter())
            .collect();
        for m in metas {
            let mut nq = q.clone();
            nq.meta_filter = Some(m.clone());
            out.push((nq, Rationale::AttachMetaTerm(m.clone())));
        }
    }
    if q.resource_filter.is_none() {
        let types: BTreeSet<&String> = current.iter().map(|d| &d.header.resource_type).collect();
        for r in types {
            let mut nq = q.clone();
            nq.resource_filter = Some(r.clone());
            out.push((nq, Rationale::AttachResourceType(r.clone())));
        }
    }
    for p in com {
        if p.predicate != "keyword" {
            continue;
        }
        let Some(k) = p.arg(0) else { continue };
        if q.conjuncts.iter().any(|c| c.keyword == k) || t.kind_of(k) != Some(TermKind::Keyword) {
            continue;
        }
        let mut nq = q.clone();
        nq.conjuncts.push(Conjunct::bare(k));
        out.push((nq, Rationale::AddConjunct(k.to_string())));
    }
    out
}

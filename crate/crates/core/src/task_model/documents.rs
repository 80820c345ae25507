use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::terminology::{TermKind, Terminology};
use super::LoadError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub keywords: BTreeSet<String>,
    pub subheadings: BTreeSet<String>,
    pub resource_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub header: Header,
    pub description: String,
    pub url: String,
}

/// Documents keyed by id; iteration is in id order.
#[derive(Debug, Clone, Default)]
pub struct DocumentIndex {
    docs: BTreeMap<String, Document>,
}

impl DocumentIndex {
    /// Checks every header id against `terminology`.
    pub fn new(docs: impl IntoIterator<Item = Document>, terminology: &Terminology) -> Result<Self, LoadError> {
        let mut problems = Vec::new();
        let mut map = BTreeMap::new();
        for d in docs {
            let mut check = |id: &str, want: TermKind| match terminology.kind_of(id) {
                None => problems.push(format!("document `{}`: unknown term id `{id}`", d.id)),
                Some(k) if k != want => {
                    problems.push(format!("document `{}`: `{id}` is a {k}, expected a {want}", d.id))
                }
                Some(_) => {}
            };
            d.header.keywords.iter().for_each(|k| check(k, TermKind::Keyword));
            d.header.subheadings.iter().for_each(|s| check(s, TermKind::Subheading));
            check(&d.header.resource_type, TermKind::ResourceType);
            if d.header.keywords.is_empty() {
                problems.push(format!("document `{}`: no keywords", d.id));
            }
            if map.contains_key(&d.id) {
                problems.push(format!("duplicate document id `{}`", d.id));
            } else {
                map.insert(d.id.clone(), d);
            }
        }
        if problems.is_empty() {
            Ok(Self { docs: map })
        } else {
            Err(LoadError::Invalid(problems))
        }
    }

    /// Reads one tab-separated record per line:
    /// `id, title, keywords, subheadings, resource_type, url, description`.
    pub fn parse(src: &str, terminology: &Terminology) -> Result<Self, LoadError> {
        let mut docs = Vec::new();
        let mut problems = Vec::new();
        for (n, line) in src.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 7 {
                problems.push(format!("line {}: expected 7 tab-separated fields, got {}", n + 1, f.len()));
                continue;
            }
            let set = |s: &str| -> BTreeSet<String> {
                s.split(';').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
            };
            docs.push(Document {
                id: f[0].trim().into(),
                title: f[1].trim().into(),
                header: Header {
                    keywords: set(f[2]),
                    subheadings: set(f[3]),
                    resource_type: f[4].trim().into(),
                },
                url: f[5].trim().into(),
                description: f[6].trim().into(),
            });
        }
        if !problems.is_empty() {
            return Err(LoadError::Invalid(problems));
        }
        Self::new(docs, terminology)
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.docs.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.docs.values()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::LoadError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TermKind {
    MetaTerm,
    Keyword,
    Subheading,
    ResourceType,
}

impl TermKind {
    /// Predicate used for facts about terms of this kind.
    pub fn predicate(self) -> &'static str {
        match self {
            TermKind::MetaTerm => "metaTerm",
            TermKind::Keyword => "keyword",
            TermKind::Subheading => "subheading",
            TermKind::ResourceType => "resourceType",
        }
    }
}

impl FromStr for TermKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "metaterm" | "meta_term" | "meta" => Ok(TermKind::MetaTerm),
            "keyword" => Ok(TermKind::Keyword),
            "subheading" => Ok(TermKind::Subheading),
            "resourcetype" | "resource_type" => Ok(TermKind::ResourceType),
            other => Err(format!("unknown term kind `{other}`")),
        }
    }
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.predicate())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub id: String,
    pub label: String,
    pub kind: TermKind,
    pub synonyms: BTreeSet<String>,
    /// Hyperonyms.
    pub broader: BTreeSet<String>,
    /// Hyponyms; the inverse of `broader`.
    pub narrower: BTreeSet<String>,
    /// Specialties a keyword belongs to.
    pub meta_parents: BTreeSet<String>,
}

/// Case-folds, strips diacritics and collapses punctuation to single spaces.
pub fn normalize(s: &str) -> String {
    let folded: String = s
        .nfd()
        .filter(|c| !unicode_normalization::char::is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A recognized surface form; `ids` lists every term sharing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermMatch {
    pub ids: Vec<String>,
    pub span: (usize, usize),
}

/// Faceted terminology with a keyword hierarchy.
#[derive(Debug, Clone, Default)]
pub struct Terminology {
    terms: BTreeMap<String, Term>,
    /// Normalized surface form → term ids.
    surface: HashMap<String, Vec<String>>,
    /// Keyword → itself plus every transitive hyponym.
    closure: HashMap<String, BTreeSet<String>>,
    max_form_words: usize,
}

impl Terminology {
    /// Builds a terminology, deriving `narrower` from `broader` and checking
    /// ids, kinds and acyclicity.
    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Result<Self, LoadError> {
        let mut problems = Vec::new();
        let mut map: BTreeMap<String, Term> = BTreeMap::new();
        for mut t in terms {
            t.narrower.clear();
            if map.contains_key(&t.id) {
                problems.push(format!("duplicate term id `{}`", t.id));
                continue;
            }
            map.insert(t.id.clone(), t);
        }
        let mut edges = Vec::new();
        for t in map.values() {
            for b in &t.broader {
                match map.get(b) {
                    None => problems.push(format!("term `{}`: dangling broader id `{b}`", t.id)),
                    Some(parent) if parent.kind != t.kind => problems.push(format!(
                        "term `{}`: broader `{b}` is a {} but the term is a {}",
                        t.id, parent.kind, t.kind
                    )),
                    Some(_) => edges.push((b.clone(), t.id.clone())),
                }
            }
            if !t.meta_parents.is_empty() && t.kind != TermKind::Keyword {
                problems.push(format!("term `{}`: only keywords may have meta-term parents", t.id));
            }
            for m in &t.meta_parents {
                match map.get(m) {
                    None => problems.push(format!("term `{}`: dangling meta-term id `{m}`", t.id)),
                    Some(mt) if mt.kind != TermKind::MetaTerm => {
                        problems.push(format!("term `{}`: `{m}` is not a meta-term", t.id))
                    }
                    Some(_) => {}
                }
            }
        }
        for (parent, child) in edges {
            map.get_mut(&parent).expect("checked").narrower.insert(child);
        }
        let mut this = Self {
            terms: map,
            ..Self::default()
        };
        if let Some(cycle) = this.find_cycle() {
            problems.push(format!("hierarchy cycle through `{cycle}`"));
        }
        if !problems.is_empty() {
            return Err(LoadError::Invalid(problems));
        }
        this.index();
        Ok(this)
    }

    fn find_cycle(&self) -> Option<String> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut marks: HashMap<&str, Mark> = self.terms.keys().map(|k| (k.as_str(), Mark::New)).collect();
        fn visit<'a>(t: &'a Terminology, id: &'a str, marks: &mut HashMap<&'a str, Mark>) -> Option<String> {
            match marks.get(id) {
                Some(Mark::Active) => return Some(id.to_string()),
                Some(Mark::Done) | None => return None,
                Some(Mark::New) => {}
            }
            marks.insert(id, Mark::Active);
            for n in &t.terms[id].narrower {
                if let Some(c) = visit(t, n, marks) {
                    return Some(c);
                }
            }
            marks.insert(id, Mark::Done);
            None
        }
        let ids: Vec<&str> = self.terms.keys().map(String::as_str).collect();
        ids.into_iter().find_map(|id| visit(self, id, &mut marks))
    }

    fn index(&mut self) {
        for t in self.terms.values() {
            let forms = std::iter::once(t.label.as_str())
                .chain(std::iter::once(t.id.as_str()))
                .chain(t.synonyms.iter().map(String::as_str));
            for form in forms {
                let n = normalize(form);
                if n.is_empty() {
                    continue;
                }
                self.max_form_words = self.max_form_words.max(n.split(' ').count());
                let ids = self.surface.entry(n).or_default();
                if !ids.contains(&t.id) {
                    ids.push(t.id.clone());
                }
            }
        }
        let ids: Vec<String> = self.terms.keys().cloned().collect();
        for id in ids {
            let mut seen = BTreeSet::new();
            let mut stack = vec![id.clone()];
            while let Some(cur) = stack.pop() {
                if seen.insert(cur.clone()) {
                    stack.extend(self.terms[&cur].narrower.iter().cloned());
                }
            }
            self.closure.insert(id, seen);
        }
    }

    pub fn get(&self, id: &str) -> Option<&Term> {
        self.terms.get(id)
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.values()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn of_kind(&self, kind: TermKind) -> impl Iterator<Item = &Term> {
        self.terms.values().filter(move |t| t.kind == kind)
    }

    pub fn kind_of(&self, id: &str) -> Option<TermKind> {
        self.terms.get(id).map(|t| t.kind)
    }

    /// The term itself and all of its transitive hyponyms.
    pub fn descendants(&self, id: &str) -> Option<&BTreeSet<String>> {
        self.closure.get(id)
    }

    /// Ids whose label, id or synonym normalizes to `form`.
    pub fn lookup(&self, form: &str) -> &[String] {
        self.surface.get(&normalize(form)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Longest number of words in any surface form.
    pub fn max_form_words(&self) -> usize {
        self.max_form_words
    }

    /// Resolves a surface string (id, label or synonym) to a term of `kind`.
    pub fn resolve(&self, form: &str, kind: TermKind) -> Option<&Term> {
        if let Some(t) = self.terms.get(form).filter(|t| t.kind == kind) {
            return Some(t);
        }
        self.lookup(form)
            .iter()
            .filter_map(|id| self.terms.get(id))
            .find(|t| t.kind == kind)
    }

    /// Left-to-right, longest-first, non-overlapping recognition of surface
    /// forms in free text. Spans are byte ranges into `text`.
    pub fn recognize(&self, text: &str) -> Vec<TermMatch> {
        let mut words: Vec<(usize, usize, String)> = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
            let word_char = c.is_alphanumeric() || (start.is_some() && unicode_normalization::char::is_combining_mark(c));
            match (word_char, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    let n = normalize(&text[s..i]);
                    if !n.is_empty() {
                        words.push((s, i, n));
                    }
                    start = None;
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let longest = (1..=self.max_form_words.min(words.len() - i)).rev().find_map(|len| {
                let form = words[i..i + len].iter().map(|w| w.2.as_str()).collect::<Vec<_>>().join(" ");
                self.surface.get(&form).map(|ids| (len, ids))
            });
            match longest {
                Some((len, ids)) => {
                    out.push(TermMatch {
                        ids: ids.clone(),
                        span: (words[i].0, words[i + len - 1].1),
                    });
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }

    /// Reads the record format: one tab-separated record per line with
    /// `id, kind, label, synonyms, broader, meta_parents`; list fields are
    /// `;`-separated and may be empty. `#` starts a comment line.
    pub fn parse(src: &str) -> Result<Self, LoadError> {
        let mut terms = Vec::new();
        let mut problems = Vec::new();
        for (n, line) in src.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 3 {
                problems.push(format!("line {}: expected at least 3 tab-separated fields", n + 1));
                continue;
            }
            let list = |i: usize| -> BTreeSet<String> {
                fields
                    .get(i)
                    .map(|f| {
                        f.split(';')
                            .map(str::trim)
                            .filter(|s| !s.is_empty())
                            .map(String::from)
                            .collect()
                    })
                    .unwrap_or_default()
            };
            let kind = match fields[1].parse::<TermKind>() {
                Ok(k) => k,
                Err(e) => {
                    problems.push(format!("line {}: {e}", n + 1));
                    continue;
                }
            };
            terms.push(Term {
                id: fields[0].trim().to_string(),
                kind,
                label: fields[2].trim().to_string(),
                synonyms: list(3),
                broader: list(4),
                narrower: BTreeSet::new(),
                meta_parents: list(5),
            });
        }
        if !problems.is_empty() {
            return Err(LoadError::Invalid(problems));
        }
        Self::from_terms(terms)
    }
}

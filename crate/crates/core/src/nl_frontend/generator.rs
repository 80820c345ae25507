//! Template-based rendering of system acts.

use std::collections::{BTreeMap, BTreeSet};

use crate::plan_engine::plan::PlanItem;
use crate::plan_library::LibraryManifest;
use crate::semantics::{Proposition, Question};
use crate::speech_acts::{ActKind, Content, SpeechAct};
use crate::task_model::TaskModel;

use super::FrontendError;

pub const ENGLISH_TEMPLATES: &str = include_str!("../../data/en.templates");

const SLOTS: [&str; 7] = ["arg", "label", "title", "url", "description", "choices", "question"];

/// Template key: act kind plus payload shape.
///
/// Shapes: `-` empty content, a predicate name for facts, `?pred` for
/// questions about `pred`, `?set` for choice questions, `*` as fallback.
pub type TemplateKey = (ActKind, String);

#[derive(Debug, Clone, Default)]
pub struct Templates {
    map: BTreeMap<TemplateKey, String>,
}

/// Payload shape of an act, as used for template lookup.
pub fn shape(act: &SpeechAct) -> Vec<String> {
    match &act.content {
        Content::Empty | Content::Unknown => vec!["-".into()],
        Content::Props(ps) if ps.is_empty() => vec!["-".into()],
        Content::Props(ps) => ps.iter().map(|p| p.predicate.clone()).collect(),
        Content::Question(q) => vec![question_shape(q)],
    }
}

fn question_shape(q: &Question) -> String {
    match q {
        Question::Choice(_) => "?set".into(),
        Question::Total(p) => format!("?{}", p.predicate),
        Question::Partial { predicate, .. } => format!("?{predicate}"),
    }
}

impl Templates {
    /// Reads the template format: tab-separated `kind, shape, text`; slots
    /// in braces: `{arg}`, `{label}`, `{title}`, `{url}`, `{description}`,
    /// `{choices}`, `{question}`.
    pub fn parse(src: &str) -> Result<Self, FrontendError> {
        let mut map = BTreeMap::new();
        let mut problems = Vec::new();
        for (n, line) in src.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let at = |msg: String| format!("line {}: {msg}", n + 1);
            let f: Vec<&str> = line.splitn(3, '\t').collect();
            if f.len() != 3 || f[2].trim().is_empty() {
                problems.push(at("expected `kind<TAB>shape<TAB>text`".into()));
                continue;
            }
            let kind = match f[0].trim().parse::<ActKind>() {
                Ok(k) => k,
                Err(e) => {
                    problems.push(at(e.to_string()));
                    continue;
                }
            };
            let text = f[2].trim().to_string();
            for slot in slot_names(&text) {
                if !SLOTS.contains(&slot) {
                    problems.push(at(format!("unknown slot `{{{slot}}}`")));
                }
            }
            if map.insert((kind, f[1].trim().to_string()), text).is_some() {
                problems.push(at(format!("duplicate template for {kind} {}", f[1].trim())));
            }
        }
        if problems.is_empty() {
            Ok(Self { map })
        } else {
            Err(FrontendError::Templates(problems))
        }
    }

    pub fn english() -> Self {
        Self::parse(ENGLISH_TEMPLATES).expect("bundled templates are valid")
    }

    fn lookup(&self, kind: ActKind, shape: &str) -> Option<&str> {
        self.map
            .get(&(kind, shape.to_string()))
            .or_else(|| self.map.get(&(kind, "*".to_string())))
            .map(String::as_str)
    }

    /// Keys with no template, among `required`.
    pub fn missing<'k>(&self, required: impl IntoIterator<Item = &'k TemplateKey>) -> Vec<TemplateKey> {
        required
            .into_iter()
            .filter(|(k, s)| self.lookup(*k, s).is_none())
            .cloned()
            .collect()
    }
}

fn slot_names(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(i) = rest.find('{') {
        let Some(j) = rest[i..].find('}') else { break };
        out.push(&rest[i + 1..i + j]);
        rest = &rest[i + j + 1..];
    }
    out
}

/// Human-readable name for a term id, document id or bare constant.
fn label(arg: &str, task: &TaskModel) -> String {
    if let Some(t) = task.terminology.get(arg) {
        return t.label.clone();
    }
    if let Some(d) = task.index.get(arg) {
        return d.title.clone();
    }
    arg.replace('_', " ").to_lowercase()
}

fn question_text(q: &Question, task: &TaskModel) -> String {
    match q {
        Question::Total(p) => prop_text(p, task),
        Question::Partial { predicate, .. } => predicate.clone(),
        Question::Choice(alts) => choices(alts, task),
    }
}

fn prop_text(p: &Proposition, task: &TaskModel) -> String {
    match p.arg(0) {
        Some(a) => label(a, task),
        None => p.predicate.clone(),
    }
}

fn choices(alts: &[Question], task: &TaskModel) -> String {
    alts.iter()
        .enumerate()
        .map(|(i, a)| format!("({}) {}", i + 1, question_text(a, task)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn fill(text: &str, arg: Option<&str>, q: Option<&Question>, task: &TaskModel) -> String {
    let doc = arg.and_then(|a| task.index.get(a));
    let mut out = text.to_string();
    let raw = arg.unwrap_or("");
    out = out.replace("{arg}", raw);
    out = out.replace("{label}", &arg.map(|a| label(a, task)).unwrap_or_default());
    out = out.replace("{title}", &doc.map(|d| d.title.clone()).unwrap_or_else(|| raw.to_string()));
    out = out.replace("{url}", doc.map(|d| d.url.as_str()).unwrap_or(""));
    out = out.replace("{description}", doc.map(|d| d.description.as_str()).unwrap_or(""));
    let (choice_text, q_text) = match q {
        Some(Question::Choice(alts)) => (choices(alts, task), choices(alts, task)),
        Some(q) => (String::new(), question_text(q, task)),
        None => (String::new(), String::new()),
    };
    out = out.replace("{choices}", &choice_text);
    out.replace("{question}", &q_text)
}

/// Renders system acts as one line of text, in act order.
pub fn render(acts: &[SpeechAct], templates: &Templates, task: &TaskModel) -> Result<String, FrontendError> {
    let mut parts = Vec::new();
    for act in acts {
        match &act.content {
            Content::Props(ps) if !ps.is_empty() => {
                for p in ps {
                    let t = templates
                        .lookup(act.kind, &p.predicate)
                        .ok_or_else(|| FrontendError::MissingTemplate(act.kind, p.predicate.clone()))?;
                    parts.push(fill(t, p.arg(0), None, task));
                }
            }
            Content::Question(q) => {
                let s = question_shape(q);
                let t = templates
                    .lookup(act.kind, &s)
                    .ok_or_else(|| FrontendError::MissingTemplate(act.kind, s.clone()))?;
                let arg = match q {
                    Question::Total(p) => p.arg(0),
                    _ => None,
                };
                parts.push(fill(t, arg, Some(q), task));
            }
            _ => {
                let t = templates
                    .lookup(act.kind, "-")
                    .ok_or_else(|| FrontendError::MissingTemplate(act.kind, "-".into()))?;
                parts.push(fill(t, None, None, task));
            }
        }
    }
    Ok(parts.join(" "))
}

/// Every (kind, shape) the engine can emit with `library`: a static walk of
/// plan bodies plus the engine's own moves.
pub fn required_templates(library: &LibraryManifest) -> BTreeSet<TemplateKey> {
    let mut out: BTreeSet<TemplateKey> = BTreeSet::new();
    let mut add = |k: ActKind, s: &str| {
        out.insert((k, s.to_string()));
    };
    for plan in library.plans.values() {
        plan.walk(&mut |i| match i {
            PlanItem::Findout(q) | PlanItem::Raise(q) => add(ActKind::Ask, &question_shape(q)),
            PlanItem::Report(p) => add(ActKind::Inform, &p.predicate),
            PlanItem::CooperativeAction(p) => add(ActKind::Offer, &p.predicate),
            PlanItem::Say(k) => add(*k, "-"),
            PlanItem::CooperativeSearch { property, .. } => match property.predicate.as_str() {
                "specificTerm" | "generalTerm" => {
                    for s in [
                        "keyword",
                        "subheading",
                        "metaTerm",
                        "resourceType",
                        "dropSubheading",
                        "dropResourceType",
                        "dropKeyword",
                        "dropMetaTerm",
                    ] {
                        add(ActKind::Suggest, s);
                    }
                }
                other => add(ActKind::Suggest, other),
            },
            PlanItem::ConsultDB(_) => add(ActKind::Inform, "queryNotBuildable"),
            _ => {}
        });
    }
    for (k, s) in [
        (ActKind::Greet, "-"),
        (ActKind::Bye, "-"),
        (ActKind::Acknowledge, "-"),
        (ActKind::RequestDirective, "-"),
        (ActKind::Confirm, "-"),
        (ActKind::Confirm, "*"),
        (ActKind::Inform, "aborted"),
        (ActKind::Inform, "failed"),
        (ActKind::Suggest, "question"),
    ] {
        add(k, s);
    }
    out
}

//! Cue-phrase speech-act tagging.

use regex::{Regex, RegexBuilder};

use crate::info_state::PublicIS;
use crate::semantics::Proposition;
use crate::speech_acts::{ActKind, Content, SpeechAct};
use crate::task_model::terminology::{TermKind, TermMatch, Terminology};

use super::FrontendError;

pub const ENGLISH_RULES: &str = include_str!("../../data/en.tags");

/// Dialog context a rule requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleContext {
    Any,
    /// Some question is under discussion.
    Qud,
    NoQud,
}

/// Act a rule emits; `Reply` becomes Answer under a pending question and Inform otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleAct {
    Kind(ActKind),
    Reply,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentSpec {
    /// Fixed facts.
    Fact(Proposition),
    /// Terms recognized in the matched text.
    Terms,
}

#[derive(Debug, Clone)]
pub struct TagRule {
    pub priority: i32,
    pub context: RuleContext,
    pub act: RuleAct,
    pub content: Vec<ContentSpec>,
    pub cue: Regex,
}

/// An ordered rule set.
#[derive(Debug, Clone)]
pub struct Tagger {
    rules: Vec<TagRule>,
}

/// Reads the rule format: tab-separated `priority, context, act, content, cue`.
/// `context` is `any`, `qud` or `noqud`; `act` an act kind or `Reply`;
/// `content` is `-` or a `;`-separated list of facts and the word `terms`;
/// `cue` is a case-insensitive regex matched at the start of the remaining text.
pub fn parse_rules(src: &str) -> Result<Vec<TagRule>, FrontendError> {
    let mut rules = Vec::new();
    let mut problems = Vec::new();
    for (n, line) in src.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let at = |msg: String| format!("line {}: {msg}", n + 1);
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            problems.push(at(format!("expected 5 tab-separated fields, got {}", f.len())));
            continue;
        }
        let priority = match f[0].trim().parse::<i32>() {
            Ok(p) => p,
            Err(_) => {
                problems.push(at(format!("bad priority `{}`", f[0])));
                continue;
            }
        };
        let context = match f[1].trim() {
            "any" => RuleContext::Any,
            "qud" => RuleContext::Qud,
            "noqud" => RuleContext::NoQud,
            other => {
                problems.push(at(format!("bad context `{other}`")));
                continue;
            }
        };
        let act = match f[2].trim() {
            "Reply" => RuleAct::Reply,
            k => match k.parse::<ActKind>() {
                Ok(k) => RuleAct::Kind(k),
                Err(e) => {
                    problems.push(at(e.to_string()));
                    continue;
                }
            },
        };
        let mut content = Vec::new();
        if f[3].trim() != "-" {
            for c in f[3].split(';').map(str::trim).filter(|c| !c.is_empty()) {
                if c == "terms" {
                    content.push(ContentSpec::Terms);
                } else {
                    match c.parse::<Proposition>() {
                        Ok(p) => content.push(ContentSpec::Fact(p)),
                        Err(e) => problems.push(at(format!("bad content `{c}`: {e}"))),
                    }
                }
            }
        }
        let cue = match RegexBuilder::new(&format!("^(?:{})", f[4].trim())).case_insensitive(true).build() {
            Ok(r) => r,
            Err(e) => {
                problems.push(at(format!("bad cue: {e}")));
                continue;
            }
        };
        rules.push(TagRule {
            priority,
            context,
            act,
            content,
            cue,
        });
    }
    if !problems.is_empty() {
        return Err(FrontendError::Rules(problems));
    }
    rules.sort_by_key(|r| r.priority);
    Ok(rules)
}

/// Lowercases and straightens typographic quotes; drops double quotes.
fn normalize(text: &str) -> String {
    text.chars()
        .filter(|c| !matches!(c, '"' | '\u{201c}' | '\u{201d}' | '\u{ab}' | '\u{bb}'))
        .map(|c| if matches!(c, '\u{2019}' | '\u{2018}') { '\'' } else { c })
        .collect::<String>()
        .to_lowercase()
}

fn segments(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut after_stop = false;
    for (i, c) in text.char_indices() {
        let stop = matches!(c, '.' | '!' | '?');
        if after_stop && !stop {
            out.push(&text[start..i]);
            start = i;
        }
        after_stop = stop;
    }
    out.push(&text[start..]);
    out.into_iter().map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// Normalized longest-match term recognition, left to right.
pub fn recognize_terms(text: &str, terminology: &Terminology) -> Vec<TermMatch> {
    terminology.recognize(text)
}

/// Facts carried by recognized terms, shaped by the pending question.
fn term_props(text: &str, ctx: &PublicIS, terminology: &Terminology) -> Vec<Proposition> {
    let asks_keyword = ctx.qud.as_ref().is_some_and(|q| q.predicates().contains(&"keyword"));
    let mut out = Vec::new();
    for m in terminology.recognize(text) {
        let Some(term) = m.ids.first().and_then(|id| terminology.get(id)) else { continue };
        let pred = match term.kind {
            TermKind::Keyword if !asks_keyword => "term",
            k => k.predicate(),
        };
        let p = Proposition::unary(pred, term.id.clone());
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

impl Tagger {
    pub fn new(rules: Vec<TagRule>) -> Self {
        let mut rules = rules;
        rules.sort_by_key(|r| r.priority);
        Self { rules }
    }

    pub fn parse(src: &str) -> Result<Self, FrontendError> {
        parse_rules(src).map(Self::new)
    }

    /// The shipped English cue lexicon.
    pub fn english() -> Self {
        Self::parse(ENGLISH_RULES).expect("bundled tag rules are valid")
    }

    pub fn rules(&self) -> &[TagRule] {
        &self.rules
    }

    /// Tags user text into speech acts, in utterance order.
    pub fn tag(&self, text: &str, ctx: &PublicIS, terminology: &Terminology) -> Vec<SpeechAct> {
        let norm = normalize(text);
        let mut acts: Vec<SpeechAct> = Vec::new();
        let reply = |props: Vec<Proposition>| {
            let kind = if ctx.qud.is_some() { ActKind::Answer } else { ActKind::Inform };
            SpeechAct::user(kind, Content::Props(props))
        };
        for seg in segments(&norm) {
            let mut rest = seg;
            let mut emitted = false;
            loop {
                rest = rest.trim_start_matches(|c: char| c.is_whitespace() || ",;:.!?-".contains(c));
                if rest.is_empty() {
                    break;
                }
                let hit = self.rules.iter().find_map(|r| {
                    let ok = match r.context {
                        RuleContext::Any => true,
                        RuleContext::Qud => ctx.qud.is_some(),
                        RuleContext::NoQud => ctx.qud.is_none(),
                    };
                    if !ok {
                        return None;
                    }
                    r.cue.find(rest).filter(|m| m.end() > 0).map(|m| (r, m.end()))
                });
                match hit {
                    Some((rule, end)) => {
                        let matched = &rest[..end];
                        let mut props = Vec::new();
                        for c in &rule.content {
                            match c {
                                ContentSpec::Fact(p) => props.push(p.clone()),
                                ContentSpec::Terms => props.extend(term_props(matched, ctx, terminology)),
                            }
                        }
                        let content = if props.is_empty() { Content::Empty } else { Content::Props(props) };
                        let act = match rule.act {
                            RuleAct::Kind(k) => SpeechAct::user(k, content),
                            RuleAct::Reply if content.is_empty() => SpeechAct::user(ActKind::Inform, Content::Unknown),
                            RuleAct::Reply => reply(content.props().to_vec()),
                        };
                        acts.push(act);
                        emitted = true;
                        rest = &rest[end..];
                    }
                    None => {
                        let props = term_props(rest, ctx, terminology);
                        if !props.is_empty() {
                            acts.push(reply(props));
                        } else if !emitted {
                            acts.push(SpeechAct::user(ActKind::Inform, Content::Unknown));
                        }
                        break;
                    }
                }
            }
        }
        let mut acts = merge_repeats(acts);
        // A lone misunderstanding next to understood acts adds nothing.
        if acts.len() > 1 {
            acts.retain(|a| a.content != Content::Unknown);
        }
        for a in &mut acts {
            a.surface = Some(text.to_string());
        }
        acts
    }
}

/// Folds consecutive acts of the same kind into one, joining their facts.
fn merge_repeats(acts: Vec<SpeechAct>) -> Vec<SpeechAct> {
    let mut out: Vec<SpeechAct> = Vec::new();
    for a in acts {
        if let Some(last) = out.last_mut() {
            if last.kind == a.kind {
                match (&mut last.content, a.content) {
                    (Content::Props(ps), Content::Props(qs)) => {
                        for q in qs {
                            if !ps.contains(&q) {
                                ps.push(q);
                            }
                        }
                    }
                    (c @ (Content::Empty | Content::Unknown), Content::Props(qs)) => *c = Content::Props(qs),
                    _ => {}
                }
                continue;
            }
        }
        out.push(a);
    }
    out
}

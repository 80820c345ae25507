use std::fmt::Write as _;

use crate::speech_acts::{ActKind, Speaker};

use super::{Deployment, ServiceError, Session, TurnRecord};

/// A line of a dialog script.
///
/// Plain lines are user utterances. `=> Kind Kind ...` states the act kinds
/// of the most recent system turn (the opening turn when it comes first).
/// `#` starts a comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptLine {
    Say(String),
    Expect(Vec<ActKind>),
}

pub fn parse_script(src: &str) -> Result<Vec<ScriptLine>, ServiceError> {
    let mut out = Vec::new();
    let mut problems = Vec::new();
    for (n, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.strip_prefix("=>") {
            Some(rest) => {
                let kinds: Result<Vec<ActKind>, _> = rest.split_whitespace().map(str::parse).collect();
                match kinds {
                    Ok(k) => out.push(ScriptLine::Expect(k)),
                    Err(e) => problems.push(format!("line {}: {e}", n + 1)),
                }
            }
            None => out.push(ScriptLine::Say(line.to_string())),
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(ServiceError::Script(problems))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnMismatch {
    /// Transcript index of the system turn.
    pub turn: usize,
    pub expected: Vec<ActKind>,
    pub actual: Vec<ActKind>,
}

#[derive(Debug, Clone)]
pub struct ScriptReport {
    pub session: Session,
    pub mismatches: Vec<TurnMismatch>,
}

fn kinds(r: &TurnRecord) -> Vec<ActKind> {
    r.acts.iter().map(|a| a.kind).collect()
}

fn names(k: &[ActKind]) -> String {
    k.iter().map(|k| k.name()).collect::<Vec<_>>().join(" ")
}

impl ScriptReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn transcript(&self) -> &[TurnRecord] {
        &self.session.transcript
    }

    /// One JSON record per turn; byte-stable across runs.
    pub fn transcript_jsonl(&self) -> String {
        self.session
            .transcript
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }

    /// Readable transcript: one line per turn.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        for r in &self.session.transcript {
            let who = match r.speaker {
                Speaker::User => "U",
                Speaker::System => "S",
            };
            let _ = writeln!(out, "{who}{:>3}: {}  [{}]", r.index, r.text, names(&kinds(r)));
        }
        out
    }

    pub fn diff(&self) -> String {
        let mut out = String::new();
        for m in &self.mismatches {
            let _ = writeln!(out, "turn {}:", m.turn);
            let _ = writeln!(out, "- {}", names(&m.expected));
            let _ = writeln!(out, "+ {}", names(&m.actual));
        }
        out
    }
}

/// Drives a fresh session through `src` and checks every expectation.
pub fn run_script(dep: &Deployment, src: &str) -> Result<ScriptReport, ServiceError> {
    let lines = parse_script(src)?;
    let mut session = Session::open("script", dep)?;
    let mut mismatches = Vec::new();
    for line in lines {
        match line {
            ScriptLine::Say(text) => {
                session.post(dep, &text)?;
            }
            ScriptLine::Expect(expected) => {
                let last = session
                    .transcript
                    .iter()
                    .rev()
                    .find(|r| r.speaker == Speaker::System)
                    .expect("the opening turn is a system turn");
                let actual = kinds(last);
                if actual != expected {
                    mismatches.push(TurnMismatch {
                        turn: last.index,
                        expected,
                        actual,
                    });
                }
            }
        }
    }
    Ok(ScriptReport { session, mismatches })
}

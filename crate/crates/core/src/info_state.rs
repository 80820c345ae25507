//! The information state: a private half (agenda, beliefs, plan stack,
//! next moves) and a public half (shared facts, issues, focus, action).
//!
//! All mutation goes through the primitive operations defined here so that
//! every engine rule is auditable.

use std::collections::{BTreeMap, VecDeque};

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan_engine::plan::{PlanItem, PlanKind};
use crate::semantics::{resolves, Answer, Bindings, Pattern, Proposition, Question};
use crate::speech_acts::{SpeechAct, Speaker};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("engine bug: pop on empty agenda")]
    EmptyAgenda,
}

/// Where an agenda item came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Plan { plan: String, activation: u64 },
    Accommodation,
    Strategy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgendaEntry {
    pub item: PlanItem,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaitKind {
    Findout,
    Raise,
    Bind,
}

/// A question-posing item blocking its plan until the user replies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wait {
    pub kind: WaitKind,
    pub question: Question,
    /// Number of Ask moves emitted for this wait.
    pub asks: u32,
    /// Set when the user replied to the question without grounding a fact
    /// (a polar "no", a refused suggestion).
    pub answered: bool,
    /// Set when the frame was covered by an interruption.
    pub suspended: bool,
}

/// One activation of a plan on the plan stack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanFrame {
    pub activation: u64,
    pub plan: String,
    pub kind: PlanKind,
    pub goal: Option<Question>,
    pub persistent: bool,
    pub remaining: VecDeque<PlanItem>,
    pub bindings: Bindings,
    pub wait: Option<Wait>,
    /// Position of the next `member` result.
    pub cursor: usize,
    /// Turn index of the last persistent restart.
    pub restarted_turn: Option<u64>,
}

/// A suggestion awaiting the user's acceptance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingSuggestion {
    pub prop: Proposition,
    /// Facet facts the suggestion replaces when accepted.
    pub revision: Option<Revision>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    pub remove: Vec<Proposition>,
    pub add: Vec<Proposition>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateIS {
    pub agenda: Vec<AgendaEntry>,
    pub bel: IndexSet<Proposition>,
    pub plan: Vec<PlanFrame>,
    pub nextmove: VecDeque<SpeechAct>,
    pub pending: Option<PendingSuggestion>,
    /// Document ids of the last consultation, in stable order.
    pub results: Vec<String>,
    pub next_activation: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicIS {
    pub com: IndexSet<Proposition>,
    pub issue: Vec<Question>,
    pub qud: Option<Question>,
    /// Id of the PlanA in progress; `None` means idle.
    pub action: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InformationState {
    pub private: PrivateIS,
    pub public: PublicIS,
    pub turn: Speaker,
    pub turn_index: u64,
    pub abort_counters: BTreeMap<Question, u32>,
    pub ended: bool,
}

impl Default for InformationState {
    fn default() -> Self {
        Self::new()
    }
}

/// A broken state law found by [`InformationState::check_well_formed`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    QudNotTopOfIssue,
    ComNotInBel(Proposition),
    DanglingAgendaOrigin(Origin),
}

impl InformationState {
    pub fn new() -> Self {
        Self {
            private: PrivateIS::default(),
            public: PublicIS::default(),
            turn: Speaker::System,
            turn_index: 0,
            abort_counters: BTreeMap::new(),
            ended: false,
        }
    }

    fn sync_qud(&mut self) {
        self.public.qud = self.public.issue.last().cloned();
    }

    pub fn sync_action(&mut self) {
        self.public.action = self
            .private
            .plan
            .iter()
            .rev()
            .find(|f| f.kind == PlanKind::PlanA)
            .map(|f| f.plan.clone());
    }

    pub fn push_issue(&mut self, q: Question) {
        if self.public.issue.last() != Some(&q) {
            self.public.issue.retain(|i| *i != q);
            self.public.issue.push(q);
        }
        self.sync_qud();
    }

    pub fn pop_issue(&mut self) -> Option<Question> {
        let q = self.public.issue.pop();
        self.sync_qud();
        q
    }

    /// Removes `q` wherever it sits; no-op when absent.
    pub fn retract_issue(&mut self, q: &Question) {
        self.public.issue.retain(|i| i != q);
        self.sync_qud();
    }

    /// Adds `p` to the shared facts (and beliefs) and pops every issue it resolves.
    pub fn ground(&mut self, p: Proposition) {
        let answer = Answer::Instance(p.clone());
        self.public.issue.retain(|q| !resolves(&answer, q));
        self.private.bel.insert(p.clone());
        self.public.com.insert(p);
        self.sync_qud();
    }

    pub fn assume(&mut self, p: Proposition) {
        self.private.bel.insert(p);
    }

    /// Drops private beliefs matching `pat`; shared facts are untouched.
    pub fn forget(&mut self, pat: &Pattern) {
        let com = &self.public.com;
        self.private
            .bel
            .retain(|b| com.contains(b) || pat.match_prop(b, &Bindings::new()).is_none());
    }

    /// The clean-up primitive: removes stale facts from both halves.
    pub fn clean(&mut self, pat: &Pattern) -> Vec<Proposition> {
        let empty = Bindings::new();
        let stale: Vec<Proposition> = self
            .public
            .com
            .iter()
            .chain(self.private.bel.iter())
            .filter(|p| pat.match_prop(p, &empty).is_some())
            .cloned()
            .collect();
        for p in &stale {
            self.public.com.shift_remove(p);
            self.private.bel.shift_remove(p);
        }
        stale
    }

    /// Replaces facets of the shared query description.
    pub fn revise(&mut self, revision: &Revision) {
        for p in &revision.remove {
            self.public.com.shift_remove(p);
            self.private.bel.shift_remove(p);
        }
        for p in &revision.add {
            self.ground(p.clone());
        }
    }

    /// Facts visible to guards: beliefs first, then shared facts not yet believed.
    pub fn knows(&self, p: &Proposition) -> bool {
        self.private.bel.contains(p) || self.public.com.contains(p)
    }

    pub fn facts(&self) -> impl Iterator<Item = &Proposition> {
        self.private
            .bel
            .iter()
            .chain(self.public.com.iter().filter(|p| !self.private.bel.contains(*p)))
    }

    /// Whether some shared fact settles `q`.
    pub fn com_resolves(&self, q: &Question) -> Option<&Proposition> {
        self.public
            .com
            .iter()
            .rev()
            .find(|p| resolves(&Answer::Instance((*p).clone()), q))
    }

    pub fn enqueue_move(&mut self, act: SpeechAct) {
        self.private.nextmove.push_back(act);
    }

    pub fn drain_moves(&mut self) -> Vec<SpeechAct> {
        self.private.nextmove.drain(..).collect()
    }

    pub fn push_agenda(&mut self, item: PlanItem, origin: Origin) {
        self.private.agenda.push(AgendaEntry { item, origin });
    }

    pub fn pop_agenda(&mut self) -> Result<AgendaEntry, StateError> {
        self.private.agenda.pop().ok_or(StateError::EmptyAgenda)
    }

    pub fn snapshot(&self) -> PublicIS {
        self.public.clone()
    }

    pub fn check_well_formed(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.public.qud.as_ref() != self.public.issue.last() {
            out.push(Violation::QudNotTopOfIssue);
        }
        for p in &self.public.com {
            if !self.private.bel.contains(p) {
                out.push(Violation::ComNotInBel(p.clone()));
            }
        }
        for e in &self.private.agenda {
            if let Origin::Plan { plan, activation } = &e.origin {
                let live = self
                    .private
                    .plan
                    .iter()
                    .any(|f| f.activation == *activation && f.plan == *plan);
                if !live {
                    out.push(Violation::DanglingAgendaOrigin(e.origin.clone()));
                }
            }
        }
        out
    }
}

//! The update engine: integrates user moves, runs plans and selects system moves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::info_state::{
    InformationState, Origin, PendingSuggestion, PlanFrame, Revision, Violation, Wait, WaitKind,
};
use crate::plan_engine::plan::{Cond, Operand, PlanItem, PlanKind};
use crate::plan_engine::task::TaskInterface;
use crate::plan_library::LibraryManifest;
use crate::semantics::{relevant, Answer, Arg, Bindings, Pattern, Proposition, Question};
use crate::speech_acts::{ActKind, Content, SpeechAct, Speaker};
use crate::task_model::{SuggestOutcome, TaskError};

/// Predicates whose shared value is replaced rather than accumulated.
pub const EXCLUSIVE_PREDICATES: [&str; 1] = ["question"];

/// Facets removed from the shared query when a suggested rewrite is accepted.
const FACET_PREDICATES: [&str; 4] = ["keyword", "subheading", "metaTerm", "resourceType"];

/// Facts derived from the previous result list; cleared before each consultation.
const RESULT_PREDICATES: [&str; 7] = [
    "nbdocuments",
    "notEnoughDocument",
    "tooMuchDocuments",
    "interesting",
    "description",
    "noInterestingDocument",
    "documents",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Asks per findout before it is aborted.
    pub findout_limit: u32,
    /// Rule applications allowed per step.
    pub fuel: usize,
    /// Record before/after state hashes for every rule application.
    pub trace: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            findout_limit: 3,
            fuel: 10_000,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub turn: u64,
    pub rule: String,
    pub before: String,
    pub after: String,
    pub emitted: Vec<ActKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EngineEvent {
    PlanLoaded { plan: String, activation: u64, interruption: bool },
    PlanCompleted { plan: String, activation: u64 },
    PlanRestarted { plan: String, activation: u64 },
    Asked { question: Question, kind: WaitKind, activation: u64, count: u32 },
    Aborted { question: Question, activation: u64 },
    Accommodated { props: Vec<Proposition>, target: String, loaded: bool },
    NotUnderstood,
    SuggestionPosed { prop: Proposition },
    Ending,
    FuelExhausted,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutput {
    pub acts: Vec<SpeechAct>,
    pub trace: Vec<TraceRecord>,
    pub events: Vec<EngineEvent>,
    /// State-law violations with the rule that caused them.
    pub violations: Vec<(String, Violation)>,
}

pub struct Engine<'a> {
    pub library: &'a LibraryManifest,
    pub task: &'a dyn TaskInterface,
    pub config: EngineConfig,
    paths: BTreeMap<String, Vec<String>>,
}

impl<'a> Engine<'a> {
    pub fn new(library: &'a LibraryManifest, task: &'a dyn TaskInterface, config: EngineConfig) -> Self {
        Self {
            library,
            task,
            config,
            paths: library.paths(),
        }
    }

    /// Runs one system turn: integrates `incoming` user acts and returns the
    /// system's moves. The first call on a fresh state, with no input, opens
    /// the dialog.
    pub fn step(&self, state: &mut InformationState, incoming: &[SpeechAct]) -> StepOutput {
        let mut run = Run {
            eng: self,
            s: state,
            out: StepOutput::default(),
            used: 0,
            yielded: false,
            not_understood: false,
        };
        run.turn(incoming);
        run.out
    }
}

fn state_hash(s: &InformationState) -> String {
    let bytes = serde_json::to_vec(s).unwrap_or_default();
    let digest = Sha256::digest(&bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn wildcard(predicate: &str, arity: usize) -> Pattern {
    Pattern {
        predicate: predicate.to_string(),
        args: (0..arity).map(|i| Arg::Var(format!("_{i}"))).collect(),
    }
}

fn refused_marker(p: &Proposition) -> Proposition {
    Proposition::unary("refused", p.to_string())
}

fn inform(p: Proposition) -> SpeechAct {
    SpeechAct::system(ActKind::Inform, Content::Props(vec![p]))
}

/// Last variable among task-call arguments: the output slot.
fn output_var(args: &[Operand]) -> Option<&str> {
    args.iter().rev().find_map(|a| match a {
        Operand::Var(v) => Some(v.as_str()),
        _ => None,
    })
}

fn contains_item(items: &[PlanItem], pred: &mut dyn FnMut(&PlanItem) -> bool) -> bool {
    let mut hit = false;
    for i in items {
        i.walk(&mut |x| hit |= pred(x));
    }
    hit
}

struct Run<'e, 's> {
    eng: &'e Engine<'e>,
    s: &'s mut InformationState,
    out: StepOutput,
    used: usize,
    yielded: bool,
    not_understood: bool,
}

impl Run<'_, '_> {
    fn turn(&mut self, incoming: &[SpeechAct]) {
        if self.s.ended {
            return;
        }
        self.s.turn = Speaker::System;
        let opening = self.s.private.plan.is_empty() && self.s.private.next_activation == 0;
        if !incoming.is_empty() {
            self.s.turn_index += 1;
        }
        if opening {
            let entry = self.eng.library.entry.clone();
            self.apply("load.entry", |r| r.load(&entry, false));
        }
        if !incoming.is_empty() {
            let unexpected = self.integrate(incoming);
            if !self.s.ended && !unexpected.is_empty() {
                self.accommodate(unexpected);
            }
            if self.not_understood && !self.s.ended {
                self.apply("ground.negative", |r| r.negative_grounding());
            }
            if !self.s.ended {
                self.process_exchange();
            }
        }
        self.advance();
        self.strategy();
        if !self.s.ended && self.s.private.plan.is_empty() && self.s.private.nextmove.is_empty() {
            self.apply("select.idle", |r| {
                r.s.enqueue_move(SpeechAct::bare(ActKind::RequestDirective, Speaker::System))
            });
        }
        self.out.acts = self.s.drain_moves();
        if !self.s.ended {
            self.s.turn = Speaker::User;
        }
    }

    /// Applies one update rule, recording trace and state-law checks.
    fn apply<R>(&mut self, rule: &str, f: impl FnOnce(&mut Self) -> R) -> R {
        let before = if self.eng.config.trace { state_hash(self.s) } else { String::new() };
        let mark = self.s.private.nextmove.len();
        let r = f(self);
        self.used += 1;
        if self.eng.config.trace {
            let after = state_hash(self.s);
            let emitted = self.s.private.nextmove.iter().skip(mark).map(|a| a.kind).collect();
            self.out.trace.push(TraceRecord {
                turn: self.s.turn_index,
                rule: rule.to_string(),
                before,
                after,
                emitted,
            });
        }
        for v in self.s.check_well_formed() {
            self.out.violations.push((rule.to_string(), v));
        }
        r
    }

    // ---- plan stack ----

    fn load(&mut self, id: &str, interruption: bool) -> bool {
        let Some(def) = self.eng.library.get(id) else {
            self.s.enqueue_move(inform(Proposition::unary("failed", format!("loadPlan({id})"))));
            return false;
        };
        let activation = self.s.private.next_activation;
        self.s.private.next_activation += 1;
        for f in &mut self.s.private.plan {
            if let Some(w) = &mut f.wait {
                w.suspended = true;
            }
        }
        self.s.private.plan.push(PlanFrame {
            activation,
            plan: def.id.clone(),
            kind: def.kind,
            goal: def.goal.clone(),
            persistent: def.persistent,
            remaining: def.body.iter().cloned().collect(),
            bindings: Bindings::new(),
            wait: None,
            cursor: 0,
            restarted_turn: None,
        });
        if def.kind == PlanKind::PlanQ {
            if let Some(g) = &def.goal {
                self.s.push_issue(g.clone());
            }
        }
        self.s.sync_action();
        self.out.events.push(EngineEvent::PlanLoaded {
            plan: def.id.clone(),
            activation,
            interruption,
        });
        true
    }

    fn pop_frame(&mut self) {
        if let Some(f) = self.s.private.plan.pop() {
            if let Some(w) = &f.wait {
                self.s.retract_issue(&w.question);
            }
            if let Some(g) = &f.goal {
                if !self.s.private.plan.iter().any(|o| o.goal.as_ref() == Some(g)) {
                    self.s.retract_issue(g);
                }
            }
            self.s.sync_action();
            self.out.events.push(EngineEvent::PlanCompleted {
                plan: f.plan,
                activation: f.activation,
            });
        }
    }

    fn frame_index(&self, origin: &Origin) -> Option<usize> {
        match origin {
            Origin::Plan { activation, .. } => self.s.private.plan.iter().position(|f| f.activation == *activation),
            _ => self.s.private.plan.len().checked_sub(1),
        }
    }

    fn bindings(&self, fidx: Option<usize>) -> Bindings {
        fidx.map(|i| self.s.private.plan[i].bindings.clone()).unwrap_or_default()
    }

    fn bind(&mut self, fidx: Option<usize>, var: &str, val: impl Into<String>) {
        if let Some(i) = fidx {
            self.s.private.plan[i].bindings.insert(var.to_string(), val.into());
        }
    }

    /// Question the user is currently expected to reply to.
    fn focus(&self) -> Option<Question> {
        if let Some(w) = self.s.private.plan.last().and_then(|f| f.wait.as_ref()) {
            if !w.suspended {
                return Some(w.question.clone());
            }
        }
        let q = self.s.public.qud.clone()?;
        let is_goal = self.s.private.plan.iter().any(|f| f.goal.as_ref() == Some(&q));
        (!is_goal).then_some(q)
    }

    fn mark_answered(&mut self, q: &Question) {
        for f in self.s.private.plan.iter_mut().rev() {
            if let Some(w) = &mut f.wait {
                if w.question == *q {
                    w.answered = true;
                    return;
                }
            }
        }
    }

    // ---- integration ----

    /// Integrates user acts; returns propositions no open issue expected.
    fn integrate(&mut self, acts: &[SpeechAct]) -> Vec<Proposition> {
        let mut unexpected = Vec::new();
        for act in acts {
            if self.s.ended {
                break;
            }
            if act.speaker != Speaker::User || act.kind.is_system_only() || act.validate().is_err() {
                self.not_understood = true;
                continue;
            }
            if act.content == Content::Unknown {
                self.not_understood = true;
                continue;
            }
            match act.kind {
                ActKind::Bye => {
                    self.apply("integrate.bye", |r| r.ending());
                    break;
                }
                ActKind::Greet | ActKind::Acknowledge | ActKind::RequestDirective if act.content.is_empty() => {
                    self.apply("integrate.noop", |_| ());
                }
                ActKind::WantsNothing => {
                    self.apply("integrate.wants-nothing", |r| r.wants_nothing());
                }
                ActKind::Accept | ActKind::Refuse => {
                    let yes = act.kind == ActKind::Accept;
                    let props = act.content.props().to_vec();
                    if !props.is_empty() {
                        unexpected.extend(self.apply("integrate.props", |r| r.integrate_props(&props)));
                    }
                    self.apply(if yes { "integrate.accept" } else { "integrate.refuse" }, |r| r.polar(yes));
                }
                _ => match &act.content {
                    Content::Props(ps) => {
                        let ps = ps.clone();
                        unexpected.extend(self.apply("integrate.props", |r| r.integrate_props(&ps)));
                    }
                    Content::Question(q) => {
                        let q = q.clone();
                        self.apply("integrate.question", |r| r.s.push_issue(q));
                    }
                    _ => self.apply("integrate.noop", |_| ()),
                },
            }
            if self.s.public.com.contains(&Proposition::atom("endOfSearch")) && !self.s.ended {
                self.apply("ending", |r| r.ending());
            }
        }
        unexpected
    }

    fn integrate_props(&mut self, props: &[Proposition]) -> Vec<Proposition> {
        let mut unexpected = Vec::new();
        for p in props {
            if EXCLUSIVE_PREDICATES.contains(&p.predicate.as_str()) && !self.s.public.com.contains(p) {
                self.s.clean(&wildcard(&p.predicate, p.args.len()));
            }
            let a = Answer::Instance(p.clone());
            if self.s.public.issue.iter().any(|q| relevant(&a, q)) {
                self.s.ground(p.clone());
            } else {
                unexpected.push(p.clone());
            }
        }
        unexpected
    }

    /// A yes/no reply to the focused question.
    fn polar(&mut self, yes: bool) {
        let Some(q) = self.focus() else {
            if !yes {
                return;
            }
            self.not_understood = true;
            return;
        };
        if self.s.com_resolves(&q).is_some() {
            return;
        }
        let pending = self.s.private.pending.clone();
        if let Some(pending) = pending.filter(|p| Question::Total(p.prop.clone()) == q) {
            if yes {
                match &pending.revision {
                    Some(rev) => self.s.revise(rev),
                    None => self.s.ground(pending.prop.clone()),
                }
            } else {
                self.s.assume(refused_marker(&pending.prop));
            }
            self.s.retract_issue(&q);
            self.mark_answered(&q);
            self.s.private.pending = None;
            return;
        }
        match (&q, yes) {
            (Question::Total(p), true) => {
                let p = p.clone();
                self.s.ground(p);
                self.mark_answered(&q);
            }
            (_, false) => {
                self.s.retract_issue(&q);
                self.mark_answered(&q);
            }
            (_, true) => self.not_understood = true,
        }
    }

    fn wants_nothing(&mut self) {
        let end = Question::Total(Proposition::atom("endOfSearch"));
        if self.s.public.issue.contains(&end) || self.s.private.plan.is_empty() {
            self.s.ground(Proposition::atom("endOfSearch"));
        } else {
            self.polar(false);
        }
    }

    fn ending(&mut self) {
        self.s.private.agenda.clear();
        self.s.private.plan.clear();
        self.s.private.pending = None;
        while self.s.pop_issue().is_some() {}
        self.s.sync_action();
        self.s.enqueue_move(SpeechAct::bare(ActKind::Bye, Speaker::System));
        self.s.ended = true;
        self.out.events.push(EngineEvent::Ending);
    }

    fn negative_grounding(&mut self) {
        self.out.events.push(EngineEvent::NotUnderstood);
        if self.s.private.nextmove.iter().any(|a| a.kind == ActKind::Confirm) {
            return;
        }
        let content = match &self.s.public.qud {
            Some(q) => Content::Question(q.clone()),
            None => Content::Empty,
        };
        self.s.enqueue_move(SpeechAct::system(ActKind::Confirm, content));
    }

    // ---- accommodation ----

    fn targets(&self, p: &Proposition) -> Vec<&str> {
        let a = Answer::Instance(p.clone());
        self.eng
            .library
            .plans
            .values()
            .filter(|plan| {
                let mut hit = plan.goal.as_ref().is_some_and(|g| relevant(&a, g));
                plan.walk(&mut |i| {
                    if let PlanItem::Findout(q) | PlanItem::Raise(q) | PlanItem::Bind(q) = i {
                        hit |= relevant(&a, q);
                    }
                });
                hit
            })
            .map(|plan| plan.id.as_str())
            .collect()
    }

    /// Whether the running plans will reach `target` (and the question `p`
    /// answers) without a new activation.
    fn covered(&self, path: &[String], p: &Proposition) -> bool {
        let a = Answer::Instance(p.clone());
        for (i, id) in path.iter().enumerate() {
            for f in self.s.private.plan.iter().filter(|f| f.plan == *id) {
                let remaining: Vec<PlanItem> = if f.persistent {
                    self.eng.library.get(id).map(|d| d.body.clone()).unwrap_or_default()
                } else {
                    f.remaining.iter().cloned().collect()
                };
                let hit = match path.get(i + 1) {
                    Some(next) => contains_item(&remaining, &mut |x| matches!(x, PlanItem::LoadPlan(t) if t == next)),
                    None => {
                        f.wait.as_ref().is_some_and(|w| relevant(&a, &w.question))
                            || contains_item(&remaining, &mut |x| x.question().is_some_and(|q| relevant(&a, q)))
                    }
                };
                if hit {
                    return true;
                }
            }
        }
        false
    }

    fn accommodate(&mut self, props: Vec<Proposition>) {
        let order = |id: &str| self.eng.library.plans.get_index_of(id).unwrap_or(usize::MAX);
        let mut best: Option<(usize, usize, String, Proposition)> = None;
        let mut matched = Vec::new();
        for p in &props {
            let ts = self.targets(p);
            if ts.is_empty() {
                continue;
            }
            matched.push(p.clone());
            for t in ts {
                let depth = self.eng.paths.get(t).map_or(usize::MAX, |v| v.len());
                let key = (depth, order(t));
                if best.as_ref().is_none_or(|b| key < (b.0, b.1)) {
                    best = Some((key.0, key.1, t.to_string(), p.clone()));
                }
            }
        }
        let Some((_, _, target, witness)) = best else {
            self.not_understood = true;
            return;
        };
        self.apply("accommodate", |r| {
            let path = r.eng.paths.get(&target).cloned().unwrap_or_else(|| vec![target.clone()]);
            let loaded = !r.covered(&path, &witness) && r.load(&target, true);
            for p in &matched {
                r.s.ground(p.clone());
            }
            r.s.enqueue_move(SpeechAct::bare(ActKind::Acknowledge, Speaker::System));
            r.out.events.push(EngineEvent::Accommodated {
                props: matched.clone(),
                target: target.clone(),
                loaded,
            });
        });
    }

    // ---- waits ----

    /// After a user exchange: suspend covered waits and settle the top one.
    fn process_exchange(&mut self) {
        let n = self.s.private.plan.len();
        for (i, f) in self.s.private.plan.iter_mut().enumerate() {
            if let Some(w) = &mut f.wait {
                if i + 1 < n {
                    w.suspended = true;
                }
            }
        }
        let Some(top) = self.s.private.plan.last() else { return };
        let Some(w) = top.wait.clone() else { return };
        if w.suspended || w.answered || self.s.com_resolves(&w.question).is_some() {
            return;
        }
        match w.kind {
            WaitKind::Findout if w.asks < self.eng.config.findout_limit => {
                self.apply("wait.reask", |r| r.ask_again());
            }
            WaitKind::Findout => self.apply("wait.abort", |r| r.abort()),
            WaitKind::Raise | WaitKind::Bind => self.apply("wait.dismiss", |r| r.dismiss()),
        }
    }

    fn ask_again(&mut self) {
        let Some(f) = self.s.private.plan.last_mut() else { return };
        let Some(w) = &mut f.wait else { return };
        w.asks += 1;
        w.suspended = false;
        let (q, kind, count, activation) = (w.question.clone(), w.kind, w.asks, f.activation);
        self.s.push_issue(q.clone());
        self.s.enqueue_move(SpeechAct::system(ActKind::Ask, Content::Question(q.clone())));
        self.out.events.push(EngineEvent::Asked {
            question: q,
            kind,
            activation,
            count,
        });
    }

    fn abort(&mut self) {
        let Some(f) = self.s.private.plan.last_mut() else { return };
        let Some(w) = f.wait.take() else { return };
        let activation = f.activation;
        *self.s.abort_counters.entry(w.question.clone()).or_default() += 1;
        self.s.retract_issue(&w.question);
        self.s.enqueue_move(inform(Proposition::unary("aborted", w.question.to_string())));
        self.out.events.push(EngineEvent::Aborted {
            question: w.question,
            activation,
        });
    }

    fn dismiss(&mut self) {
        let Some(f) = self.s.private.plan.last_mut() else { return };
        let Some(w) = f.wait.take() else { return };
        self.s.retract_issue(&w.question);
        if self
            .s
            .private
            .pending
            .as_ref()
            .is_some_and(|p| Question::Total(p.prop.clone()) == w.question)
        {
            self.s.private.pending = None;
        }
    }

    /// Clears the top wait if it is settled; returns whether it was.
    fn settle_top_wait(&mut self) -> bool {
        let top = self.s.private.plan.len() - 1;
        let Some(w) = self.s.private.plan[top].wait.clone() else { return true };
        if let Some(p) = self.s.com_resolves(&w.question).cloned() {
            self.s.private.plan[top].wait = None;
            self.s.retract_issue(&w.question);
            if let Some((var, val)) = w.question.binding_from(&p) {
                self.bind(Some(top), &var, val);
            }
            return true;
        }
        if w.answered {
            self.s.private.plan[top].wait = None;
            self.s.retract_issue(&w.question);
            return true;
        }
        false
    }

    /// A covered frame is on top again.
    fn resume(&mut self) {
        let Some(w) = self.s.private.plan.last().and_then(|f| f.wait.clone()) else { return };
        match w.kind {
            WaitKind::Findout if w.asks >= self.eng.config.findout_limit => self.abort(),
            WaitKind::Findout => self.ask_again(),
            _ => {
                if let Some(w) = self.s.private.plan.last_mut().and_then(|f| f.wait.as_mut()) {
                    w.suspended = false;
                }
                self.s.push_issue(w.question);
            }
        }
    }

    // ---- plan execution ----

    fn dangling_goal(&self) -> Option<String> {
        self.s.public.issue.iter().rev().find_map(|q| {
            let p = self.eng.library.plan_for_goal(q)?;
            let running = self.s.private.plan.iter().any(|f| f.goal.as_ref() == Some(q));
            (!running).then(|| p.id.clone())
        })
    }

    fn advance(&mut self) {
        loop {
            if self.s.ended || self.yielded {
                return;
            }
            if self.used >= self.eng.config.fuel {
                self.out.events.push(EngineEvent::FuelExhausted);
                return;
            }
            if !self.s.private.agenda.is_empty() {
                self.exec_agenda();
                continue;
            }
            if let Some(id) = self.dangling_goal() {
                self.apply("load.issue", |r| r.load(&id, false));
                continue;
            }
            let Some(top) = self.s.private.plan.last() else { return };
            let (wait, done, persistent, restarted) = (
                top.wait.as_ref().map(|w| w.suspended),
                top.remaining.is_empty(),
                top.persistent,
                top.restarted_turn,
            );
            if let Some(suspended) = wait {
                if self.apply("wait.check", |r| r.settle_top_wait()) {
                    continue;
                }
                if suspended {
                    self.apply("wait.resume", |r| r.resume());
                    let still = self.s.private.plan.last().is_some_and(|f| f.wait.is_some());
                    if still {
                        return;
                    }
                    continue;
                }
                return;
            }
            if done {
                if persistent {
                    if restarted == Some(self.s.turn_index) {
                        return;
                    }
                    self.apply("plan.restart", |r| r.restart());
                } else {
                    self.apply("plan.complete", |r| r.pop_frame());
                }
                continue;
            }
            self.apply("plan.advance", |r| {
                let f = r.s.private.plan.last_mut().expect("checked above");
                let item = f.remaining.pop_front().expect("checked above");
                let origin = Origin::Plan {
                    plan: f.plan.clone(),
                    activation: f.activation,
                };
                r.s.push_agenda(item, origin);
            });
        }
    }

    fn restart(&mut self) {
        let turn = self.s.turn_index;
        let activation = self.s.private.next_activation;
        self.s.private.next_activation += 1;
        let Some(f) = self.s.private.plan.last_mut() else { return };
        let Some(def) = self.eng.library.get(&f.plan) else { return };
        f.activation = activation;
        f.remaining = def.body.iter().cloned().collect();
        f.bindings.clear();
        f.cursor = 0;
        f.restarted_turn = Some(turn);
        let plan = f.plan.clone();
        self.out.events.push(EngineEvent::PlanRestarted { plan, activation });
    }

    fn exec_agenda(&mut self) {
        let Some(entry) = self.s.private.agenda.last() else { return };
        let rule = format!("exec.{}", entry.item.name());
        self.apply(&rule, |r| {
            if let Ok(entry) = r.s.pop_agenda() {
                let fidx = r.frame_index(&entry.origin);
                r.exec(entry.item, fidx, entry.origin);
            }
        });
        if !self.s.ended && self.s.public.com.contains(&Proposition::atom("endOfSearch")) {
            self.apply("ending", |r| r.ending());
        }
    }

    fn splice(&mut self, fidx: Option<usize>, items: Vec<PlanItem>, origin: &Origin) {
        match fidx {
            Some(i) => {
                let f = &mut self.s.private.plan[i];
                for item in items.into_iter().rev() {
                    f.remaining.push_front(item);
                }
            }
            None => {
                for item in items.into_iter().rev() {
                    self.s.push_agenda(item, origin.clone());
                }
            }
        }
    }

    fn authoring_error(&mut self, what: &str) {
        self.s.enqueue_move(inform(Proposition::unary("failed", what.to_string())));
    }

    fn exec(&mut self, item: PlanItem, fidx: Option<usize>, origin: Origin) {
        let b = self.bindings(fidx);
        match item {
            PlanItem::Findout(q) => self.pose(q.instantiate(&b), WaitKind::Findout, fidx),
            PlanItem::Raise(q) => self.pose(q.instantiate(&b), WaitKind::Raise, fidx),
            PlanItem::Bind(q) => self.pose(q.instantiate(&b), WaitKind::Bind, fidx),
            PlanItem::Assume(pat) => match pat.instantiate(&b) {
                Ok(p) => self.s.assume(p),
                Err(_) => self.authoring_error("assume"),
            },
            PlanItem::AssumeAction(inner) => self.s.push_agenda(*inner, origin),
            PlanItem::AssumeIssue(q) => self.s.push_issue(q.instantiate(&b)),
            PlanItem::ConsultDB(_) => self.consult(),
            PlanItem::CooperativeSearch {
                property,
                source,
                result,
            } => self.cooperative_search(&property, &source, &result, fidx, &b),
            PlanItem::CooperativeAction(pat) => match pat.instantiate(&b) {
                Ok(p) => self.s.enqueue_move(SpeechAct::system(ActKind::Offer, Content::Props(vec![p]))),
                Err(_) => self.authoring_error("cooperativeAction"),
            },
            PlanItem::Report(pat) => match pat.instantiate(&b) {
                Ok(p) => {
                    self.s.ground(p.clone());
                    self.s.enqueue_move(inform(p));
                }
                Err(_) => self.authoring_error("report"),
            },
            PlanItem::Say(kind) => {
                self.s.enqueue_move(SpeechAct::bare(kind, Speaker::System));
                if kind == ActKind::Greet {
                    self.yielded = true;
                }
            }
            PlanItem::LoadPlan(id) => {
                if let Some(i) = fidx.filter(|i| *i + 1 == self.s.private.plan.len()) {
                    let f = &self.s.private.plan[i];
                    if f.remaining.is_empty() && !f.persistent && f.wait.is_none() {
                        self.pop_frame();
                    }
                }
                self.load(&id, false);
            }
            PlanItem::PostCond(pred, v) => match v.resolve(&b) {
                Some(v) => {
                    self.s.forget(&wildcard(&pred, 1));
                    self.s.assume(Proposition::unary(pred, v));
                }
                None => self.authoring_error("postCond"),
            },
            PlanItem::IfThen(c, items) => {
                if self.eval(&c, &b) {
                    self.splice(fidx, items, &origin);
                }
            }
            PlanItem::IfThenElse(c, a, e) => {
                let branch = if self.eval(&c, &b) { a } else { e };
                self.splice(fidx, branch, &origin);
            }
            PlanItem::While(c, items) => {
                if self.eval(&c, &b) {
                    let mut body = items.clone();
                    body.push(PlanItem::While(c, items));
                    self.splice(fidx, body, &origin);
                }
            }
            PlanItem::TaskCall { name, args } => self.task_call(&name, &args, fidx, &b),
        }
    }

    fn pose(&mut self, q: Question, kind: WaitKind, fidx: Option<usize>) {
        if let Some(p) = self.s.com_resolves(&q).cloned() {
            if let Some((var, val)) = q.binding_from(&p) {
                self.bind(fidx, &var, val);
            }
            return;
        }
        let Some(i) = fidx else { return };
        self.s.push_issue(q.clone());
        let asks = if kind == WaitKind::Bind { 0 } else { 1 };
        let activation = self.s.private.plan[i].activation;
        if kind != WaitKind::Bind {
            self.s.enqueue_move(SpeechAct::system(ActKind::Ask, Content::Question(q.clone())));
            self.out.events.push(EngineEvent::Asked {
                question: q.clone(),
                kind,
                activation,
                count: 1,
            });
        }
        self.s.private.plan[i].wait = Some(Wait {
            kind,
            question: q,
            asks,
            answered: false,
            suspended: false,
        });
    }

    fn consult(&mut self) {
        for p in RESULT_PREDICATES {
            for arity in 0..=1 {
                self.s.clean(&wildcard(p, arity));
            }
        }
        let com: Vec<Proposition> = self.s.public.com.iter().cloned().collect();
        match self.eng.task.consult(&com) {
            Ok(ids) => {
                let n = ids.len();
                self.s.private.results = ids;
                self.s.assume(Proposition::unary("documents", n.to_string()));
            }
            Err(TaskError::NotBuildable) => {
                self.s.private.results.clear();
                self.s.enqueue_move(inform(Proposition::atom("queryNotBuildable")));
            }
            Err(_) => {
                self.s.private.results.clear();
                self.authoring_error("consultDB");
            }
        }
    }

    fn cooperative_search(
        &mut self,
        property: &Pattern,
        source: &Pattern,
        result: &str,
        fidx: Option<usize>,
        b: &Bindings,
    ) {
        let mut pool: Vec<String> = Vec::new();
        for p in &self.s.public.com {
            if source.match_prop(p, b).is_some() {
                if let Some(a) = p.arg(0) {
                    if !pool.iter().any(|x| x == a) {
                        pool.push(a.to_string());
                    }
                }
            }
        }
        let com: Vec<Proposition> = self.s.public.com.iter().cloned().collect();
        let outcome = match self.eng.task.suggest(&property.predicate, &pool, &com) {
            Ok(o) => o,
            Err(_) => {
                self.authoring_error("cooperativeSearch");
                SuggestOutcome::Failure
            }
        };
        let mut success = false;
        if let SuggestOutcome::Success(list) = outcome {
            if property.predicate == "keyword" {
                for sug in &list {
                    if !self.s.public.com.contains(&sug.prop) {
                        self.s
                            .enqueue_move(SpeechAct::system(ActKind::Suggest, Content::Props(vec![sug.prop.clone()])));
                        self.s.ground(sug.prop.clone());
                    }
                }
                if let Some(nb) = list.first().and_then(|s| property.match_prop(&s.prop, b)) {
                    if let Some(i) = fidx {
                        self.s.private.plan[i].bindings = nb;
                    }
                }
                success = true;
            } else {
                let fresh = list
                    .into_iter()
                    .find(|s| !self.s.knows(&s.prop) && !self.s.private.bel.contains(&refused_marker(&s.prop)));
                if let (Some(sug), Some(i)) = (fresh, fidx) {
                    let revision = sug.query.as_ref().map(|q| Revision {
                        remove: self
                            .s
                            .public
                            .com
                            .iter()
                            .filter(|p| FACET_PREDICATES.contains(&p.predicate.as_str()))
                            .cloned()
                            .collect(),
                        add: q.to_props(),
                    });
                    let q = Question::Total(sug.prop.clone());
                    self.s.private.pending = Some(PendingSuggestion {
                        prop: sug.prop.clone(),
                        revision,
                    });
                    self.s.push_issue(q.clone());
                    self.s
                        .enqueue_move(SpeechAct::system(ActKind::Suggest, Content::Props(vec![sug.prop.clone()])));
                    self.s.private.plan[i].wait = Some(Wait {
                        kind: WaitKind::Raise,
                        question: q,
                        asks: 1,
                        answered: false,
                        suspended: false,
                    });
                    self.out.events.push(EngineEvent::SuggestionPosed { prop: sug.prop });
                    success = true;
                }
            }
        }
        self.bind(fidx, result, if success { "success" } else { "failure" });
    }

    fn task_call(&mut self, name: &str, args: &[Operand], fidx: Option<usize>, b: &Bindings) {
        match name {
            "getNbDocuments" => {
                let n = self
                    .s
                    .private
                    .bel
                    .iter()
                    .find(|p| p.predicate == "documents" && p.args.len() == 1)
                    .and_then(|p| p.args[0].parse::<usize>().ok())
                    .unwrap_or(self.s.private.results.len());
                self.s.forget(&wildcard("documents", 1));
                if let Some(v) = output_var(args) {
                    self.bind(fidx, v, n.to_string());
                }
            }
            "member" => {
                let Some(i) = fidx else { return };
                let cursor = self.s.private.plan[i].cursor;
                let next = crate::task_model::member_next(&self.s.private.results, cursor)
                    .map(|(id, c)| (id.clone(), c));
                match next {
                    Some((id, c)) => {
                        self.s.private.plan[i].cursor = c;
                        if let Some(v) = output_var(args) {
                            self.bind(fidx, v, id);
                        }
                    }
                    None => {
                        // List exhausted: leave the enclosing loop.
                        let f = &mut self.s.private.plan[i];
                        if let Some(pos) = f.remaining.iter().position(|x| matches!(x, PlanItem::While(..))) {
                            f.remaining.drain(..=pos);
                        }
                    }
                }
            }
            _ => {
                let resolved: Option<Vec<String>> = args.iter().map(|a| a.resolve(b)).collect();
                let Some(resolved) = resolved else {
                    self.authoring_error(name);
                    return;
                };
                match self.eng.task.call(name, &resolved) {
                    Ok(props) => props.into_iter().for_each(|p| self.s.assume(p)),
                    Err(_) => self.authoring_error(name),
                }
            }
        }
    }

    fn eval(&self, c: &Cond, b: &Bindings) -> bool {
        match c {
            Cond::True => true,
            Cond::Holds(pat) => self.s.facts().any(|f| pat.match_prop(f, b).is_some()),
            Cond::Bound(v) => b.contains_key(v),
            Cond::Cmp { op, lhs, rhs } => {
                let (Some(l), Some(r)) = (self.operand(lhs, b), self.operand(rhs, b)) else {
                    return false;
                };
                match (l.parse::<i64>(), r.parse::<i64>()) {
                    (Ok(l), Ok(r)) => op.eval(l, r),
                    _ => match op {
                        crate::syntax::CmpOp::Eq => l == r,
                        crate::syntax::CmpOp::Ne => l != r,
                        _ => false,
                    },
                }
            }
            Cond::Not(c) => !self.eval(c, b),
            Cond::And(a, c) => self.eval(a, b) && self.eval(c, b),
            Cond::Or(a, c) => self.eval(a, b) || self.eval(c, b),
        }
    }

    fn operand(&self, o: &Operand, b: &Bindings) -> Option<String> {
        match o {
            Operand::Const(c) => Some(self.eng.task.parameter(c).map_or_else(|| c.clone(), |n| n.to_string())),
            other => other.resolve(b),
        }
    }

    // ---- strategy ----

    /// At most one unsolicited suggestion per turn: offer an explanation of
    /// the search strategy after a fruitless list or a misunderstanding.
    fn strategy(&mut self) {
        if self.s.ended {
            return;
        }
        let marker = Proposition::atom("explanationSuggested");
        let trigger = self.s.knows(&Proposition::atom("noInterestingDocument"))
            || self.s.private.nextmove.iter().any(|a| a.kind == ActKind::Confirm);
        let already = self.s.private.nextmove.iter().any(|a| a.kind == ActKind::Suggest);
        if trigger && !already && !self.s.private.bel.contains(&marker) {
            self.apply("strategy.suggest-explanation", |r| {
                r.s.enqueue_move(SpeechAct::system(
                    ActKind::Suggest,
                    Content::Props(vec![Proposition::unary("question", "Explanation")]),
                ));
                r.s.assume(marker);
            });
        }
    }
}

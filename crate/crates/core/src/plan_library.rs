//! The plan library: built-in dialog plans, loading and static validation.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::plan_engine::dsl::{parse_plans, DslError};
use crate::plan_engine::plan::{Cond, PlanDef, PlanItem, PlanKind};
use crate::semantics::Question;

pub const BUILTIN_PLANS: &str = include_str!("../plans/builtin.plans");
pub const ENTRY_PLAN: &str = "Opening";

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("plan file: {0}")]
    Syntax(#[from] DslError),
    #[error("invalid plan library: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    DuplicatePlan(String),
    MissingEntry(String),
    UnknownTarget { plan: String, target: String },
    GuardNeverChanges { plan: String, guard: String },
    PlanQWithoutGoal(String),
    Unreachable(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicatePlan(p) => write!(f, "duplicate plan `{p}`"),
            Diagnostic::MissingEntry(p) => write!(f, "entry plan `{p}` is not defined"),
            Diagnostic::UnknownTarget { plan, target } => {
                write!(f, "plan `{plan}`: unknown target `{target}` in loadPlan")
            }
            Diagnostic::GuardNeverChanges { plan, guard } => {
                write!(f, "plan `{plan}`: guard never changes in while({guard}, ...)")
            }
            Diagnostic::PlanQWithoutGoal(p) => write!(f, "planQ `{p}` has no goal question"),
            Diagnostic::Unreachable(p) => write!(f, "plan `{p}` is unreachable from the entry plan"),
        }
    }
}

/// Plans keyed by id, in file order.
#[derive(Debug, Clone)]
pub struct LibraryManifest {
    pub plans: IndexMap<String, PlanDef>,
    pub entry: String,
}

impl LibraryManifest {
    /// Builds a manifest without validating it; duplicates keep the first plan.
    pub fn from_plans(plans: Vec<PlanDef>, entry: impl Into<String>) -> Self {
        let mut map = IndexMap::new();
        for p in plans {
            map.entry(p.id.clone()).or_insert(p);
        }
        Self {
            plans: map,
            entry: entry.into(),
        }
    }

    /// Parses and validates a plan file.
    pub fn parse(src: &str, entry: &str) -> Result<Self, LibraryError> {
        let plans = parse_plans(src)?;
        let mut dups = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for p in &plans {
            if !seen.insert(p.id.clone()) {
                dups.push(Diagnostic::DuplicatePlan(p.id.clone()));
            }
        }
        let lib = Self::from_plans(plans, entry);
        dups.extend(validate(&lib));
        if dups.is_empty() {
            Ok(lib)
        } else {
            Err(LibraryError::Invalid(dups))
        }
    }

    pub fn get(&self, id: &str) -> Option<&PlanDef> {
        self.plans.get(id)
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    /// The PlanQ whose goal is `q`.
    pub fn plan_for_goal(&self, q: &Question) -> Option<&PlanDef> {
        self.plans
            .values()
            .find(|p| p.kind == PlanKind::PlanQ && p.goal.as_ref() == Some(q))
    }

    /// Plans a plan can start: loadPlan targets and planQs whose goal it assumes.
    pub fn successors<'a>(&'a self, plan: &'a PlanDef) -> Vec<&'a str> {
        let mut out: Vec<&'a str> = Vec::new();
        plan.walk(&mut |i| {
            let target = match i {
                PlanItem::LoadPlan(id) => Some(id.as_str()),
                PlanItem::AssumeIssue(q) => self.plan_for_goal(q).map(|p| p.id.as_str()),
                _ => None,
            };
            if let Some(t) = target {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        });
        out
    }

    /// Shortest load path from the entry plan to every reachable plan.
    pub fn paths(&self) -> BTreeMap<String, Vec<String>> {
        let mut paths: BTreeMap<String, Vec<String>> = BTreeMap::new();
        if !self.plans.contains_key(&self.entry) {
            return paths;
        }
        paths.insert(self.entry.clone(), vec![self.entry.clone()]);
        let mut queue = VecDeque::from([self.entry.clone()]);
        while let Some(id) = queue.pop_front() {
            let Some(plan) = self.plans.get(&id) else { continue };
            for next in self.successors(plan) {
                if self.plans.contains_key(next) && !paths.contains_key(next) {
                    let mut path = paths[&id].clone();
                    path.push(next.to_string());
                    paths.insert(next.to_string(), path);
                    queue.push_back(next.to_string());
                }
            }
        }
        paths
    }
}

/// The bundled plans.
pub fn builtin_library() -> LibraryManifest {
    LibraryManifest::parse(BUILTIN_PLANS, ENTRY_PLAN).expect("bundled plans are valid")
}

/// Whether executing `item` can change what `guard` reads.
fn changes_guard(item: &PlanItem, preds: &[&str], vars: &[&str]) -> bool {
    let mut hit = false;
    item.walk(&mut |i| {
        hit |= match i {
            PlanItem::Findout(q) | PlanItem::Raise(q) | PlanItem::Bind(q) => {
                q.predicates().iter().any(|p| preds.contains(p))
                    || matches!(q, Question::Partial { var, .. } if vars.contains(&var.as_str()))
            }
            PlanItem::Assume(p) | PlanItem::Report(p) => preds.contains(&p.predicate.as_str()),
            PlanItem::PostCond(p, _) => preds.contains(&p.as_str()),
            PlanItem::ConsultDB(_) => true,
            PlanItem::CooperativeSearch { property, result, .. } => {
                preds.contains(&property.predicate.as_str())
                    || vars.contains(&result.as_str())
                    || property.vars().iter().any(|v| vars.contains(v))
            }
            PlanItem::TaskCall { args, .. } => args
                .iter()
                .any(|a| matches!(a, crate::plan_engine::plan::Operand::Var(v) if vars.contains(&v.as_str()))),
            _ => false,
        };
    });
    hit
}

/// Static checks: unknown targets, stuck loops, goalless planQs, unreachable plans.
pub fn validate(lib: &LibraryManifest) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !lib.plans.contains_key(&lib.entry) {
        out.push(Diagnostic::MissingEntry(lib.entry.clone()));
    }
    for plan in lib.plans.values() {
        if plan.kind == PlanKind::PlanQ && plan.goal.is_none() {
            out.push(Diagnostic::PlanQWithoutGoal(plan.id.clone()));
        }
        for target in plan.load_targets() {
            if !lib.plans.contains_key(target) {
                out.push(Diagnostic::UnknownTarget {
                    plan: plan.id.clone(),
                    target: target.to_string(),
                });
            }
        }
        plan.walk(&mut |i| {
            if let PlanItem::While(guard, body) = i {
                let (preds, vars) = guard.mentions();
                let live = !matches!(guard, Cond::True) && body.iter().any(|b| changes_guard(b, &preds, &vars));
                if !live {
                    out.push(Diagnostic::GuardNeverChanges {
                        plan: plan.id.clone(),
                        guard: guard.to_string(),
                    });
                }
            }
        });
    }
    if lib.plans.contains_key(&lib.entry) {
        let reachable = lib.paths();
        for id in lib.plans.keys() {
            if !reachable.contains_key(id) {
                out.push(Diagnostic::Unreachable(id.clone()));
            }
        }
    }
    out
}

//! Declarative plan representation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::semantics::{Bindings, Pattern, Question};
use crate::speech_acts::ActKind;
use crate::syntax::CmpOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlanKind {
    /// Runs a sequence of actions.
    PlanA,
    /// Answers an inquiry by returning data.
    PlanQ,
}

/// Comparison operand in a guard or task-call argument.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operand {
    Var(String),
    Const(String),
    Number(i64),
}

impl Operand {
    pub fn resolve(&self, b: &Bindings) -> Option<String> {
        match self {
            Operand::Var(v) => b.get(v).cloned(),
            Operand::Const(c) => Some(c.clone()),
            Operand::Number(n) => Some(n.to_string()),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) | Operand::Const(v) => f.write_str(v),
            Operand::Number(n) => write!(f, "{n}"),
        }
    }
}

/// Guard over beliefs, shared facts and plan variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cond {
    True,
    /// Some fact in bel ∪ com matches the pattern (bound variables substituted).
    Holds(Pattern),
    /// A plan variable has a value.
    Bound(String),
    Cmp { op: CmpOp, lhs: Operand, rhs: Operand },
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

impl Cond {
    /// Facts and variables the guard reads.
    pub fn mentions(&self) -> (Vec<&str>, Vec<&str>) {
        let mut preds = Vec::new();
        let mut vars = Vec::new();
        self.collect(&mut preds, &mut vars);
        (preds, vars)
    }

    fn collect<'a>(&'a self, preds: &mut Vec<&'a str>, vars: &mut Vec<&'a str>) {
        match self {
            Cond::True => {}
            Cond::Holds(p) => {
                preds.push(&p.predicate);
                vars.extend(p.vars());
            }
            Cond::Bound(v) => vars.push(v),
            Cond::Cmp { lhs, rhs, .. } => {
                for o in [lhs, rhs] {
                    if let Operand::Var(v) = o {
                        vars.push(v);
                    }
                }
            }
            Cond::Not(c) => c.collect(preds, vars),
            Cond::And(a, b) | Cond::Or(a, b) => {
                a.collect(preds, vars);
                b.collect(preds, vars);
            }
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::True => f.write_str("true"),
            Cond::Holds(p) => write!(f, "{p}"),
            Cond::Bound(v) => f.write_str(v),
            Cond::Cmp { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
            Cond::Not(c) => write!(f, "not ({c})"),
            Cond::And(a, b) => write!(f, "({a} and {b})"),
            Cond::Or(a, b) => write!(f, "({a} or {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlanItem {
    /// Ask until answered or aborted.
    Findout(Question),
    /// Ask once, optionally.
    Raise(Question),
    /// Expect an answer without asking.
    Bind(Question),
    Assume(Pattern),
    AssumeAction(Box<PlanItem>),
    AssumeIssue(Question),
    /// Query the document base; the argument names the result set.
    ConsultDB(String),
    CooperativeSearch {
        property: Pattern,
        source: Pattern,
        result: String,
    },
    CooperativeAction(Pattern),
    Report(Pattern),
    Say(ActKind),
    LoadPlan(String),
    PostCond(String, Operand),
    IfThen(Cond, Vec<PlanItem>),
    IfThenElse(Cond, Vec<PlanItem>, Vec<PlanItem>),
    While(Cond, Vec<PlanItem>),
    TaskCall { name: String, args: Vec<Operand> },
}

impl PlanItem {
    pub fn name(&self) -> &'static str {
        match self {
            PlanItem::Findout(_) => "findout",
            PlanItem::Raise(_) => "raise",
            PlanItem::Bind(_) => "bind",
            PlanItem::Assume(_) => "assume",
            PlanItem::AssumeAction(_) => "assumeAction",
            PlanItem::AssumeIssue(_) => "assumeIssue",
            PlanItem::ConsultDB(_) => "consultDB",
            PlanItem::CooperativeSearch { .. } => "cooperativeSearch",
            PlanItem::CooperativeAction(_) => "cooperativeAction",
            PlanItem::Report(_) => "report",
            PlanItem::Say(_) => "say",
            PlanItem::LoadPlan(_) => "loadPlan",
            PlanItem::PostCond(..) => "postCond",
            PlanItem::IfThen(..) => "ifThen",
            PlanItem::IfThenElse(..) => "ifThenElse",
            PlanItem::While(..) => "while",
            PlanItem::TaskCall { .. } => "taskCall",
        }
    }

    /// Depth-first walk over this item and every nested item.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a PlanItem)) {
        f(self);
        match self {
            PlanItem::AssumeAction(inner) => inner.walk(f),
            PlanItem::IfThen(_, items) | PlanItem::While(_, items) => items.iter().for_each(|i| i.walk(f)),
            PlanItem::IfThenElse(_, a, b) => a.iter().chain(b).for_each(|i| i.walk(f)),
            _ => {}
        }
    }

    /// The question a question-posing item is about.
    pub fn question(&self) -> Option<&Question> {
        match self {
            PlanItem::Findout(q) | PlanItem::Raise(q) | PlanItem::Bind(q) | PlanItem::AssumeIssue(q) => Some(q),
            _ => None,
        }
    }
}

impl fmt::Display for PlanItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, items: &[PlanItem]) -> fmt::Result {
            f.write_str("[")?;
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{it}")?;
            }
            f.write_str("]")
        }
        match self {
            PlanItem::Findout(q) => write!(f, "findout({q})"),
            PlanItem::Raise(q) => write!(f, "raise({q})"),
            PlanItem::Bind(q) => write!(f, "bind({q})"),
            PlanItem::Assume(p) => write!(f, "assume({p})"),
            PlanItem::AssumeAction(a) => write!(f, "assumeAction({a})"),
            PlanItem::AssumeIssue(q) => write!(f, "assumeIssue({q})"),
            PlanItem::ConsultDB(d) => write!(f, "consultDB({d})"),
            PlanItem::CooperativeSearch { property, source, result } => {
                write!(f, "cooperativeSearch({property}, {source}, {result})")
            }
            PlanItem::CooperativeAction(p) => write!(f, "cooperativeAction({p})"),
            PlanItem::Report(p) => write!(f, "report({p})"),
            PlanItem::Say(k) => write!(f, "say({})", k.name().to_lowercase()),
            PlanItem::LoadPlan(id) => write!(f, "loadPlan({id})"),
            PlanItem::PostCond(p, v) => write!(f, "postCond({p}, {v})"),
            PlanItem::IfThen(c, items) => {
                write!(f, "ifThen({c}, ")?;
                list(f, items)?;
                f.write_str(")")
            }
            PlanItem::IfThenElse(c, a, b) => {
                write!(f, "ifThenElse({c}, ")?;
                list(f, a)?;
                f.write_str(", ")?;
                list(f, b)?;
                f.write_str(")")
            }
            PlanItem::While(c, items) => {
                write!(f, "while({c}, ")?;
                list(f, items)?;
                f.write_str(")")
            }
            PlanItem::TaskCall { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanDef {
    pub id: String,
    pub kind: PlanKind,
    /// Goal question of a PlanQ.
    pub goal: Option<Question>,
    pub body: Vec<PlanItem>,
    /// Restarts its body when it completes instead of being popped.
    pub persistent: bool,
}

impl PlanDef {
    pub fn action_label(&self) -> Option<&str> {
        (self.kind == PlanKind::PlanA).then_some(self.id.as_str())
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a PlanItem)) {
        for item in &self.body {
            item.walk(f);
        }
    }

    /// Ids of plans this plan can load directly.
    pub fn load_targets(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |i| {
            if let PlanItem::LoadPlan(id) = i {
                out.push(id.as_str());
            }
        });
        out
    }
}

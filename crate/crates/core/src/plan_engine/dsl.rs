//! Plan file format.
//!
//! One plan per block, terminated by a dot:
//!
//! ```text
//! planA(Opening, [say(greet), loadPlan(QueryAnalysis)]).
//! planA(DocumentSearch, persistent, [findout(?term(t)), ...]).
//! planQ(ListEvaluation, ?listEvaluation, [getNbDocuments(d, nb), ...]).
//! ```
//!
//! Item functors are matched case-insensitively. Any functor that is not a
//! built-in action is a task call (`getNbDocuments(d, nb)`, `member(d, x)`).

use std::fmt;

use thiserror::Error;

use super::plan::{Cond, Operand, PlanDef, PlanItem, PlanKind};
use crate::semantics::{is_variable_name, Pattern, Question, SemanticsError};
use crate::speech_acts::ActKind;
use crate::syntax::{Expr, Pos, Reader, SyntaxError, Tok};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {}, column {}: {message}", pos.line, pos.col)]
pub struct DslError {
    pub pos: Pos,
    pub message: String,
}

impl DslError {
    fn at(pos: Pos, message: impl Into<String>) -> Self {
        Self {
            pos,
            message: message.into(),
        }
    }
}

impl From<SyntaxError> for DslError {
    fn from(e: SyntaxError) -> Self {
        Self {
            pos: e.pos,
            message: e.message,
        }
    }
}

fn sem(pos: Pos) -> impl Fn(SemanticsError) -> DslError {
    move |e| match e {
        SemanticsError::Syntax(s) => s.into(),
        other => DslError::at(pos, other.to_string()),
    }
}

pub fn parse_plans(src: &str) -> Result<Vec<PlanDef>, DslError> {
    let mut r = Reader::new(src)?;
    let mut plans = Vec::new();
    while !r.at_eof() {
        let e = r.expr()?;
        plans.push(plan_from_expr(&e)?);
        r.expect(Tok::Dot, "'.' after plan block")?;
    }
    Ok(plans)
}

fn plan_from_expr(e: &Expr) -> Result<PlanDef, DslError> {
    let (name, args, pos) = match e {
        Expr::Compound { name, args, pos } => (name.as_str(), args.as_slice(), *pos),
        other => return Err(DslError::at(other.pos(), "expected planA(...) or planQ(...)")),
    };
    let kind = match name.to_ascii_lowercase().as_str() {
        "plana" => PlanKind::PlanA,
        "planq" => PlanKind::PlanQ,
        _ => return Err(DslError::at(pos, format!("unknown block `{name}`"))),
    };
    let mut it = args.iter();
    let id = match it.next() {
        Some(Expr::Atom { name, .. }) => name.clone(),
        Some(other) => return Err(DslError::at(other.pos(), "plan id must be an atom")),
        None => return Err(DslError::at(pos, "missing plan id")),
    };
    let mut goal = None;
    let mut persistent = false;
    let mut body = None;
    for a in it {
        match a {
            Expr::Question { pos, .. } if goal.is_none() => {
                goal = Some(Question::from_expr(a).map_err(sem(*pos))?);
            }
            Expr::Atom { name, quoted: false, .. } if name == "persistent" => persistent = true,
            Expr::List { items, .. } if body.is_none() => body = Some(items_from(items)?),
            other => return Err(DslError::at(other.pos(), "unexpected plan argument")),
        }
    }
    let body = body.ok_or_else(|| DslError::at(pos, format!("plan `{id}` has no body list")))?;
    if kind == PlanKind::PlanQ && goal.is_none() {
        return Err(DslError::at(pos, format!("planQ `{id}` needs a goal question")));
    }
    Ok(PlanDef {
        id,
        kind,
        goal,
        body,
        persistent,
    })
}

fn items_from(exprs: &[Expr]) -> Result<Vec<PlanItem>, DslError> {
    exprs.iter().map(item_from).collect()
}

/// A branch may be a list of items or a single item.
fn branch(e: &Expr) -> Result<Vec<PlanItem>, DslError> {
    match e {
        Expr::List { items, .. } => items_from(items),
        other => Ok(vec![item_from(other)?]),
    }
}

fn question(e: &Expr) -> Result<Question, DslError> {
    Question::from_expr(e).map_err(sem(e.pos()))
}

fn pattern(e: &Expr) -> Result<Pattern, DslError> {
    Pattern::from_expr(e).map_err(sem(e.pos()))
}

fn operand(e: &Expr) -> Result<Operand, DslError> {
    match e {
        Expr::Atom { name, quoted, .. } => Ok(if !quoted && is_variable_name(name) {
            Operand::Var(name.clone())
        } else {
            Operand::Const(name.clone())
        }),
        Expr::Number { value, .. } => Ok(Operand::Number(*value)),
        other => Err(DslError::at(other.pos(), "expected a variable, atom or number")),
    }
}

fn arity(name: &str, args: &[Expr], n: usize, pos: Pos) -> Result<(), DslError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(DslError::at(pos, format!("`{name}` takes {n} argument(s), got {}", args.len())))
    }
}

fn item_from(e: &Expr) -> Result<PlanItem, DslError> {
    let pos = e.pos();
    let (name, args) = match e {
        Expr::Compound { name, args, .. } => (name.as_str(), args.as_slice()),
        Expr::Atom { name, quoted: false, .. } => (name.as_str(), &[][..]),
        _ => return Err(DslError::at(pos, "expected a plan action")),
    };
    let lname = name.to_ascii_lowercase();
    let item = match lname.as_str() {
        "findout" | "raise" | "bind" | "assumeissue" | "assume_issue" => {
            arity(name, args, 1, pos)?;
            let q = question(&args[0])?;
            match lname.as_str() {
                "findout" => PlanItem::Findout(q),
                "raise" => PlanItem::Raise(q),
                "bind" => PlanItem::Bind(q),
                _ => PlanItem::AssumeIssue(q),
            }
        }
        "assume" => {
            arity(name, args, 1, pos)?;
            PlanItem::Assume(pattern(&args[0])?)
        }
        "assumeaction" | "assume_action" => {
            arity(name, args, 1, pos)?;
            PlanItem::AssumeAction(Box::new(item_from(&args[0])?))
        }
        "consultdb" => {
            arity(name, args, 1, pos)?;
            match &args[0] {
                Expr::Atom { name, .. } => PlanItem::ConsultDB(name.clone()),
                other => return Err(DslError::at(other.pos(), "consultDB takes a result-set name")),
            }
        }
        "cooperativesearch" => {
            arity(name, args, 3, pos)?;
            let result = match &args[2] {
                Expr::Atom { name, quoted: false, .. } if is_variable_name(name) => name.clone(),
                other => return Err(DslError::at(other.pos(), "result must be a variable")),
            };
            PlanItem::CooperativeSearch {
                property: pattern(&args[0])?,
                source: pattern(&args[1])?,
                result,
            }
        }
        "cooperativeaction" => {
            arity(name, args, 1, pos)?;
            PlanItem::CooperativeAction(pattern(&args[0])?)
        }
        "report" => {
            arity(name, args, 1, pos)?;
            PlanItem::Report(pattern(&args[0])?)
        }
        "say" => {
            arity(name, args, 1, pos)?;
            let kind = match &args[0] {
                Expr::Atom { name, .. } => name
                    .parse::<ActKind>()
                    .map_err(|err| DslError::at(args[0].pos(), err.to_string()))?,
                other => return Err(DslError::at(other.pos(), "say takes an act kind")),
            };
            PlanItem::Say(kind)
        }
        "loadplan" => {
            arity(name, args, 1, pos)?;
            match &args[0] {
                Expr::Atom { name, .. } => PlanItem::LoadPlan(name.clone()),
                // loadPlan(QueryBuilding(t)): parameters are carried in the IS.
                Expr::Compound { name, .. } => PlanItem::LoadPlan(name.clone()),
                other => return Err(DslError::at(other.pos(), "loadPlan takes a plan id")),
            }
        }
        "postcond" => {
            arity(name, args, 2, pos)?;
            let pred = match &args[0] {
                Expr::Atom { name, .. } => name.clone(),
                other => return Err(DslError::at(other.pos(), "postCond takes a predicate name")),
            };
            PlanItem::PostCond(pred, operand(&args[1])?)
        }
        "ifthen" => {
            arity(name, args, 2, pos)?;
            PlanItem::IfThen(cond(&args[0])?, branch(&args[1])?)
        }
        "ifthenelse" => {
            arity(name, args, 3, pos)?;
            PlanItem::IfThenElse(cond(&args[0])?, branch(&args[1])?, branch(&args[2])?)
        }
        "while" => {
            arity(name, args, 2, pos)?;
            PlanItem::While(cond(&args[0])?, branch(&args[1])?)
        }
        _ => PlanItem::TaskCall {
            name: name.to_string(),
            args: args.iter().map(operand).collect::<Result<_, _>>()?,
        },
    };
    Ok(item)
}

pub fn cond(e: &Expr) -> Result<Cond, DslError> {
    Ok(match e {
        Expr::Atom { name, quoted: false, .. } if name == "true" => Cond::True,
        Expr::Atom { name, quoted: false, .. } if is_variable_name(name) => Cond::Bound(name.clone()),
        Expr::Atom { .. } | Expr::Compound { .. } => Cond::Holds(pattern(e)?),
        Expr::Not { inner, .. } => Cond::Not(Box::new(cond(inner)?)),
        Expr::And { lhs, rhs, .. } => Cond::And(Box::new(cond(lhs)?), Box::new(cond(rhs)?)),
        Expr::Or { lhs, rhs, .. } => Cond::Or(Box::new(cond(lhs)?), Box::new(cond(rhs)?)),
        Expr::Cmp { op, lhs, rhs, .. } => Cond::Cmp {
            op: *op,
            lhs: operand(lhs)?,
            rhs: operand(rhs)?,
        },
        other => return Err(DslError::at(other.pos(), "expected a condition")),
    })
}

/// Renders plans back into the file format.
pub struct PlanFile<'a>(pub &'a [PlanDef]);

impl fmt::Display for PlanFile<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.0 {
            let kw = match p.kind {
                PlanKind::PlanA => "planA",
                PlanKind::PlanQ => "planQ",
            };
            write!(f, "{kw}({}", p.id)?;
            if let Some(g) = &p.goal {
                write!(f, ", {g}")?;
            }
            if p.persistent {
                f.write_str(", persistent")?;
            }
            f.write_str(", [")?;
            for (i, it) in p.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "\n    {it}")?;
            }
            f.write_str("\n]).\n")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_opening() {
        let plans = parse_plans("planA(Opening, [say(greet), loadPlan(QueryAnalysis)]).").unwrap();
        assert_eq!(plans.len(), 1);
        assert_eq!(
            plans[0].body,
            vec![PlanItem::Say(ActKind::Greet), PlanItem::LoadPlan("QueryAnalysis".into())]
        );
        assert!(!plans[0].persistent);
    }

    #[test]
    fn parses_guards_and_loops() {
        let src = "planQ(D, ?documentDescription, [
            while(not interesting(x), [member(d, x), report(description(x)),
                  cooperativeAction(interesting(x)), bind(?interesting(x))]),
            ifThen(interesting(x), raise(?endOfSearch))
        ]).";
        let plans = parse_plans(src).unwrap();
        match &plans[0].body[0] {
            PlanItem::While(Cond::Not(inner), body) => {
                assert!(matches!(**inner, Cond::Holds(_)));
                assert_eq!(body.len(), 4);
                assert!(matches!(body[0], PlanItem::TaskCall { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comparison_guard() {
        let plans = parse_plans("planA(X, [ifThen(nb < deltaMin, assume(notEnoughDocument))]).").unwrap();
        match &plans[0].body[0] {
            PlanItem::IfThen(Cond::Cmp { lhs, rhs, .. }, _) => {
                assert_eq!(*lhs, Operand::Var("nb".into()));
                assert_eq!(*rhs, Operand::Const("deltaMin".into()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_and_column() {
        let err = parse_plans("planA(Opening, [\n  say(greet),\n  say(shrug)\n]).").unwrap_err();
        assert_eq!((err.pos.line, err.pos.col), (3, 7));
        let err = parse_plans("planA(Opening, [say(greet)])").unwrap_err();
        assert!(err.message.contains("'.'"), "{err}");
    }

    #[test]
    fn planq_requires_goal() {
        assert!(parse_plans("planQ(X, [say(greet)]).").is_err());
    }

    #[test]
    fn printed_plans_parse_back() {
        let src = "planA(S, persistent, [findout(?term(t)), ifThen(t, loadPlan(B)),
            ifThenElse(r = failure, [report(noKeyword)], [consultDB(d)]),
            cooperativeSearch(metaTerm(m), term(t), r), postCond(step, 2)]).";
        let plans = parse_plans(src).unwrap();
        let printed = PlanFile(&plans).to_string();
        assert_eq!(parse_plans(&printed).unwrap(), plans);
    }
}

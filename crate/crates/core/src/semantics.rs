//! Propositions, questions under the `?` operator, and the answerhood
//! relations between them.
//!
//! Textual forms:
//!
//! * ground atom: `p`, `p(c1, c2)`
//! * total question: `?p`, `?p(c)`
//! * partial question: `?p(x)` where `x` is a variable
//! * choice question: `?set(p1(c), p2(d), ...)`
//!
//! An unquoted lowercase identifier of at most three characters in argument
//! position is a variable (`t`, `nb`, `def`). Anything else, or any quoted
//! atom, is a constant.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::syntax::{read_one, Expr, SyntaxError};

/// Variable name → constant.
pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("substitution needs a partial question, got {0}")]
    NotPartial(String),
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    Invalid(String),
}

pub fn is_variable_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    s.len() <= 3 && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
}

fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

fn write_const(f: &mut fmt::Formatter<'_>, c: &str) -> fmt::Result {
    let numeric = c.parse::<i64>().is_ok_and(|n| n.to_string() == c);
    if numeric || (is_plain_ident(c) && !is_variable_name(c) && !matches!(c, "not" | "and" | "or")) {
        f.write_str(c)
    } else {
        write!(f, "'{}'", c.replace('\\', "\\\\").replace('\'', "\\'"))
    }
}

/// A ground fact `predicate(arg, ...)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Proposition {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Proposition {
    pub fn new<P: Into<String>, A: Into<String>>(predicate: P, args: impl IntoIterator<Item = A>) -> Self {
        Self {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn atom(predicate: impl Into<String>) -> Self {
        Self {
            predicate: predicate.into(),
            args: Vec::new(),
        }
    }

    pub fn unary(predicate: impl Into<String>, arg: impl Into<String>) -> Self {
        Self {
            predicate: predicate.into(),
            args: vec![arg.into()],
        }
    }

    pub fn arg(&self, i: usize) -> Option<&str> {
        self.args.get(i).map(String::as_str)
    }

    pub(crate) fn from_expr(e: &Expr) -> Result<Self, SemanticsError> {
        let pat = Pattern::from_expr(e)?;
        let vars = pat.vars();
        if let Some(v) = vars.first() {
            return Err(SemanticsError::Invalid(format!(
                "proposition `{pat}` is not ground (variable `{v}`)"
            )));
        }
        pat.instantiate(&Bindings::new())
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_const(f, a)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl FromStr for Proposition {
    type Err = SemanticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_expr(&read_one(s)?)
    }
}

/// Argument of a [`Pattern`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arg {
    Var(String),
    Const(String),
}

/// A proposition template that may contain variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    pub predicate: String,
    pub args: Vec<Arg>,
}

impl Pattern {
    pub fn atom(predicate: impl Into<String>) -> Self {
        Self {
            predicate: predicate.into(),
            args: Vec::new(),
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        self.args
            .iter()
            .filter_map(|a| match a {
                Arg::Var(v) => Some(v.as_str()),
                Arg::Const(_) => None,
            })
            .collect()
    }

    pub fn instantiate(&self, b: &Bindings) -> Result<Proposition, SemanticsError> {
        let args = self
            .args
            .iter()
            .map(|a| match a {
                Arg::Const(c) => Ok(c.clone()),
                Arg::Var(v) => b
                    .get(v)
                    .cloned()
                    .ok_or_else(|| SemanticsError::UnboundVariable(v.clone())),
            })
            .collect::<Result<_, _>>()?;
        Ok(Proposition {
            predicate: self.predicate.clone(),
            args,
        })
    }

    /// Unifies against a ground proposition, extending `b` on success.
    pub fn match_prop(&self, p: &Proposition, b: &Bindings) -> Option<Bindings> {
        if self.predicate != p.predicate || self.args.len() != p.args.len() {
            return None;
        }
        let mut out = b.clone();
        for (a, v) in self.args.iter().zip(&p.args) {
            match a {
                Arg::Const(c) if c == v => {}
                Arg::Const(_) => return None,
                Arg::Var(name) => match out.get(name) {
                    Some(bound) if bound == v => {}
                    Some(_) => return None,
                    None => {
                        out.insert(name.clone(), v.clone());
                    }
                },
            }
        }
        Some(out)
    }

    pub(crate) fn from_expr(e: &Expr) -> Result<Self, SemanticsError> {
        match e {
            Expr::Atom { name, quoted: false, .. } => Ok(Pattern::atom(name.clone())),
            Expr::Compound { name, args, .. } => {
                let args = args
                    .iter()
                    .map(|a| match a {
                        Expr::Atom { name, quoted, .. } => Ok(if !quoted && is_variable_name(name) {
                            Arg::Var(name.clone())
                        } else {
                            Arg::Const(name.clone())
                        }),
                        Expr::Number { value, .. } => Ok(Arg::Const(value.to_string())),
                        other => Err(SemanticsError::Invalid(format!(
                            "{}: nested terms are not supported as arguments",
                            other.pos()
                        ))),
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Pattern {
                    predicate: name.clone(),
                    args,
                })
            }
            other => Err(SemanticsError::Invalid(format!(
                "{}: expected an atom or compound term",
                other.pos()
            ))),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                match a {
                    Arg::Var(v) => f.write_str(v)?,
                    Arg::Const(c) => write_const(f, c)?,
                }
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = SemanticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_expr(&read_one(s)?)
    }
}

/// A question built with the `?` operator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Question {
    /// `?P` — polar question about a ground proposition.
    Total(Proposition),
    /// `?P(x)` — asks for a value of `x`.
    Partial { predicate: String, var: String },
    /// `?set(P1, P2, ...)` — pick one alternative.
    Choice(Vec<Question>),
}

impl Question {
    pub fn total(p: Proposition) -> Self {
        Question::Total(p)
    }

    pub fn partial(predicate: impl Into<String>, var: impl Into<String>) -> Self {
        Question::Partial {
            predicate: predicate.into(),
            var: var.into(),
        }
    }

    pub fn choice(alts: Vec<Question>) -> Self {
        Question::Choice(alts)
    }

    pub fn is_well_formed(&self) -> bool {
        match self {
            Question::Total(_) => true,
            Question::Partial { var, .. } => !var.is_empty(),
            Question::Choice(alts) => {
                alts.len() >= 2 && alts.iter().all(|a| !matches!(a, Question::Choice(_)) && a.is_well_formed())
            }
        }
    }

    /// Predicates the question is about.
    pub fn predicates(&self) -> Vec<&str> {
        match self {
            Question::Total(p) => vec![p.predicate.as_str()],
            Question::Partial { predicate, .. } => vec![predicate.as_str()],
            Question::Choice(alts) => alts.iter().flat_map(|a| a.predicates()).collect(),
        }
    }

    /// Replaces bound variables: a partial question whose variable is bound
    /// becomes the corresponding total question.
    pub fn instantiate(&self, b: &Bindings) -> Question {
        match self {
            Question::Partial { predicate, var } => match b.get(var) {
                Some(c) => Question::Total(Proposition::unary(predicate.clone(), c.clone())),
                None => self.clone(),
            },
            Question::Choice(alts) => Question::Choice(alts.iter().map(|a| a.instantiate(b)).collect()),
            Question::Total(_) => self.clone(),
        }
    }

    /// Variable binding produced when `p` answers this question.
    pub fn binding_from(&self, p: &Proposition) -> Option<(String, String)> {
        match self {
            Question::Partial { predicate, var } if *predicate == p.predicate => {
                p.args.first().map(|c| (var.clone(), c.clone()))
            }
            _ => None,
        }
    }

    pub(crate) fn from_expr(e: &Expr) -> Result<Self, SemanticsError> {
        let body = match e {
            Expr::Question { body, .. } => body.as_ref(),
            other => {
                return Err(SemanticsError::Invalid(format!(
                    "{}: expected a question starting with '?'",
                    other.pos()
                )))
            }
        };
        Self::from_body(body)
    }

    fn from_body(body: &Expr) -> Result<Self, SemanticsError> {
        if let Expr::Compound { name, args, pos } = body {
            if name == "set" {
                let alts = args
                    .iter()
                    .map(|a| match a {
                        Expr::Question { body, .. } => Self::from_body(body),
                        other => Self::from_body(other),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let q = Question::Choice(alts);
                if !q.is_well_formed() {
                    return Err(SemanticsError::Invalid(format!(
                        "{pos}: a choice question needs at least two non-choice alternatives"
                    )));
                }
                return Ok(q);
            }
        }
        let pat = Pattern::from_expr(body)?;
        let vars = pat.vars();
        match (vars.len(), pat.args.len()) {
            (0, _) => Ok(Question::Total(pat.instantiate(&Bindings::new())?)),
            (1, 1) => Ok(Question::partial(pat.predicate.clone(), vars[0])),
            _ => Err(SemanticsError::Invalid(format!(
                "{}: partial questions take exactly one variable argument (`?{pat}`)",
                body.pos()
            ))),
        }
    }
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Question::Total(p) => write!(f, "?{p}"),
            Question::Partial { predicate, var } => write!(f, "?{predicate}({var})"),
            Question::Choice(alts) => {
                f.write_str("?set(")?;
                for (i, a) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match a {
                        Question::Total(p) => write!(f, "{p}")?,
                        Question::Partial { predicate, var } => write!(f, "{predicate}({var})")?,
                        Question::Choice(_) => write!(f, "{a}")?,
                    }
                }
                f.write_str(")")
            }
        }
    }
}

impl FromStr for Question {
    type Err = SemanticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_expr(&read_one(s)?)
    }
}

macro_rules! text_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

text_serde!(Proposition);
text_serde!(Question);
text_serde!(Pattern);

/// Content of an answer move, relative to some question.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    Instance(Proposition),
    Unknown,
}

/// Whether `a` settles `q`.
pub fn resolves(a: &Answer, q: &Question) -> bool {
    match (a, q) {
        (Answer::Unknown, _) => false,
        (Answer::Yes | Answer::No, Question::Total(_)) => true,
        (Answer::Instance(p), Question::Total(t)) => p == t,
        (Answer::Instance(p), Question::Partial { predicate, .. }) => {
            p.predicate == *predicate && !p.args.is_empty()
        }
        (_, Question::Choice(alts)) => alts.iter().filter(|alt| resolves(a, alt)).count() == 1,
        (Answer::Yes | Answer::No, Question::Partial { .. }) => false,
    }
}

/// Whether `a` is about `q` at all, without necessarily settling it.
pub fn relevant(a: &Answer, q: &Question) -> bool {
    match a {
        Answer::Unknown => false,
        Answer::Yes | Answer::No => true,
        Answer::Instance(p) => q.predicates().contains(&p.predicate.as_str()),
    }
}

/// Grounds a partial question with `binding`.
pub fn substitute(q: &Question, binding: &Bindings) -> Result<Proposition, SemanticsError> {
    match q {
        Question::Partial { predicate, var } => binding
            .get(var)
            .map(|c| Proposition::unary(predicate.clone(), c.clone()))
            .ok_or_else(|| SemanticsError::UnboundVariable(var.clone())),
        other => Err(SemanticsError::NotPartial(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Proposition {
        s.parse().unwrap()
    }

    fn q(s: &str) -> Question {
        s.parse().unwrap()
    }

    #[test]
    fn parses_the_three_question_forms() {
        assert_eq!(q("?question(Document)"), Question::Total(p("question(Document)")));
        assert_eq!(q("?term(t)"), Question::partial("term", "t"));
        assert_eq!(
            q("?set(question(Definition), question(Document), question(Explanation))"),
            Question::Choice(vec![
                q("?question(Definition)"),
                q("?question(Document)"),
                q("?question(Explanation)"),
            ])
        );
        assert_eq!(q("?endOfSearch"), Question::Total(Proposition::atom("endOfSearch")));
    }

    #[test]
    fn choice_needs_two_alternatives() {
        assert!("?set(question(Document))".parse::<Question>().is_err());
    }

    #[test]
    fn polar_answer_resolves_total() {
        assert!(resolves(&Answer::Yes, &q("?question(Document)")));
    }

    #[test]
    fn instance_selects_one_choice_alternative() {
        let set = q("?set(question(Definition), question(Document), question(Explanation))");
        assert!(resolves(&Answer::Instance(p("question(Definition)")), &set));
        assert!(!resolves(&Answer::Yes, &set));
    }

    #[test]
    fn partial_needs_matching_predicate() {
        assert!(resolves(&Answer::Instance(p("term(parasomny)")), &q("?term(t)")));
        assert!(!resolves(&Answer::Instance(p("keyword(parasomny)")), &q("?term(t)")));
    }

    #[test]
    fn relevance_examples() {
        assert!(relevant(&Answer::No, &q("?term(t)")));
        assert!(!resolves(&Answer::No, &q("?term(t)")));
        assert!(!relevant(&Answer::Instance(p("metaTerm(cardiology)")), &q("?term(t)")));
        assert!(!relevant(&Answer::Unknown, &q("?term(t)")));
    }

    #[test]
    fn substitution() {
        let mut b = Bindings::new();
        b.insert("t".into(), "parasomny".into());
        assert_eq!(substitute(&q("?term(t)"), &b).unwrap(), p("term(parasomny)"));
        b.insert("m".into(), "cardiology".into());
        assert_eq!(substitute(&q("?metaTerm(m)"), &b).unwrap(), p("metaTerm(cardiology)"));
        assert_eq!(
            substitute(&q("?term(t)"), &Bindings::new()),
            Err(SemanticsError::UnboundVariable("t".into()))
        );
    }

    #[test]
    fn instantiate_turns_bound_partial_into_total() {
        let mut b = Bindings::new();
        b.insert("x".into(), "doc07".into());
        assert_eq!(q("?interesting(x)").instantiate(&b), q("?interesting(doc07)"));
        assert_eq!(q("?interesting(y)").instantiate(&b), q("?interesting(y)"));
    }

    #[test]
    fn short_lowercase_constants_are_quoted() {
        let prop = Proposition::unary("keyword", "flu");
        assert_eq!(prop.to_string(), "keyword('flu')");
        assert_eq!(prop.to_string().parse::<Proposition>().unwrap(), prop);
    }

    #[test]
    fn non_ground_proposition_rejected() {
        assert!("keyword(k)".parse::<Proposition>().is_err());
    }

    #[test]
    fn pattern_matching_extends_bindings() {
        let pat: Pattern = "documents(d)".parse().unwrap();
        let b = pat.match_prop(&p("documents(12)"), &Bindings::new()).unwrap();
        assert_eq!(b.get("d").map(String::as_str), Some("12"));
        assert!(pat.match_prop(&p("documents(12)"), &b).is_some());
        let mut other = Bindings::new();
        other.insert("d".into(), "3".into());
        assert!(pat.match_prop(&p("documents(12)"), &other).is_none());
    }

    // Brute-force matcher written independently of `resolves`: enumerates
    // the ground instances each question shape admits.
    fn oracle_resolves(a: &Answer, q: &Question, universe: &[Proposition]) -> bool {
        fn settles(a: &Answer, q: &Question, universe: &[Proposition]) -> bool {
            match q {
                Question::Total(t) => match a {
                    Answer::Yes | Answer::No => true,
                    Answer::Instance(x) => x == t,
                    Answer::Unknown => false,
                },
                Question::Partial { predicate, .. } => match a {
                    Answer::Instance(x) => universe
                        .iter()
                        .any(|u| u == x && &u.predicate == predicate && !u.args.is_empty()),
                    _ => false,
                },
                Question::Choice(alts) => {
                    let mut hits = 0;
                    for alt in alts {
                        if settles(a, alt, universe) {
                            hits += 1;
                        }
                    }
                    hits == 1
                }
            }
        }
        settles(a, q, universe)
    }

    fn small_universe() -> (Vec<Proposition>, Vec<Question>, Vec<Answer>) {
        let preds = ["term", "keyword", "metaTerm", "question"];
        let consts = ["parasomny", "asthma", "cardiology"];
        let mut props = Vec::new();
        for pr in preds {
            props.push(Proposition::atom(pr));
            for c in consts {
                props.push(Proposition::unary(pr, c));
            }
        }
        let mut questions: Vec<Question> = props.iter().cloned().map(Question::Total).collect();
        for pr in preds {
            questions.push(Question::partial(pr, "x"));
        }
        questions.push(Question::Choice(vec![
            Question::Total(Proposition::unary("question", "asthma")),
            Question::Total(Proposition::unary("question", "cardiology")),
        ]));
        questions.push(Question::Choice(vec![
            Question::partial("term", "t"),
            Question::partial("keyword", "k"),
        ]));
        questions.push(Question::Choice(vec![
            Question::Total(Proposition::unary("term", "asthma")),
            Question::partial("term", "t"),
        ]));
        let mut answers = vec![Answer::Yes, Answer::No, Answer::Unknown];
        answers.extend(props.iter().cloned().map(Answer::Instance));
        (props, questions, answers)
    }

    #[test]
    fn resolves_matches_brute_force_oracle() {
        let (props, questions, answers) = small_universe();
        let mut checked = 0;
        for a in &answers {
            for qq in &questions {
                assert_eq!(resolves(a, qq), oracle_resolves(a, qq, &props), "{a:?} vs {qq}");
                checked += 1;
            }
        }
        assert_eq!(checked, answers.len() * questions.len());
    }

    #[test]
    fn resolves_implies_relevant_exhaustive() {
        let (_, questions, answers) = small_universe();
        for a in &answers {
            for qq in &questions {
                if resolves(a, qq) {
                    assert!(relevant(a, qq), "{a:?} resolves but is not relevant to {qq}");
                }
            }
        }
    }

    #[test]
    fn distinct_predicate_choice_never_doubly_resolved() {
        let (_, _, answers) = small_universe();
        let choice = vec![Question::partial("term", "t"), Question::partial("keyword", "k")];
        for a in &answers {
            let hits = choice.iter().filter(|alt| resolves(a, alt)).count();
            assert!(hits <= 1);
        }
    }

    fn arb_const() -> impl Strategy<Value = String> {
        prop_oneof![
            "[a-z][a-z_]{0,10}",
            "[A-Z][a-zA-Z]{0,8}",
            "[0-9]{1,4}",
            "[a-z ]{1,6}",
        ]
    }

    fn arb_prop() -> impl Strategy<Value = Proposition> {
        ("[a-z][a-zA-Z]{0,8}", prop::collection::vec(arb_const(), 0..3)).prop_map(|(pr, args)| {
            let pr = if matches!(pr.as_str(), "not" | "and" | "or" | "set") {
                format!("{pr}X")
            } else {
                pr
            };
            Proposition::new(pr, args)
        })
    }

    proptest! {
        #[test]
        fn proposition_text_round_trips(prop in arb_prop()) {
            let back: Proposition = prop.to_string().parse().unwrap();
            prop_assert_eq!(back, prop);
        }

        #[test]
        fn question_text_round_trips(a in arb_prop(), b in arb_prop()) {
            for qq in [Question::Total(a.clone()), Question::Choice(vec![Question::Total(a.clone()), Question::Total(b.clone())])] {
                let back: Question = qq.to_string().parse().unwrap();
                prop_assert_eq!(back, qq);
            }
        }
    }
}

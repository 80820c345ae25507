//! Dialog moves: the closed act taxonomy, illocutionary-force classes and
//! explicit grounding roles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantics::{Proposition, Question};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActKind {
    Inform,
    RequestInfo,
    Offer,
    RequestDirective,
    Answer,
    Accept,
    Refuse,
    Acknowledge,
    WantsNothing,
    Confirm,
    Bye,
    Greet,
    InformIntent,
    Ask,
    Suggest,
}

impl ActKind {
    pub const ALL: [ActKind; 15] = [
        ActKind::Inform,
        ActKind::RequestInfo,
        ActKind::Offer,
        ActKind::RequestDirective,
        ActKind::Answer,
        ActKind::Accept,
        ActKind::Refuse,
        ActKind::Acknowledge,
        ActKind::WantsNothing,
        ActKind::Confirm,
        ActKind::Bye,
        ActKind::Greet,
        ActKind::InformIntent,
        ActKind::Ask,
        ActKind::Suggest,
    ];

    /// Acts only the system produces.
    pub fn is_system_only(self) -> bool {
        matches!(self, ActKind::Ask | ActKind::Suggest | ActKind::Offer)
    }

    pub fn name(self) -> &'static str {
        match self {
            ActKind::Inform => "Inform",
            ActKind::RequestInfo => "RequestInfo",
            ActKind::Offer => "Offer",
            ActKind::RequestDirective => "RequestDirective",
            ActKind::Answer => "Answer",
            ActKind::Accept => "Accept",
            ActKind::Refuse => "Refuse",
            ActKind::Acknowledge => "Acknowledge",
            ActKind::WantsNothing => "WantsNothing",
            ActKind::Confirm => "Confirm",
            ActKind::Bye => "Bye",
            ActKind::Greet => "Greet",
            ActKind::InformIntent => "InformIntent",
            ActKind::Ask => "Ask",
            ActKind::Suggest => "Suggest",
        }
    }
}

impl fmt::Display for ActKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown act kind `{0}`")]
pub struct UnknownActKind(pub String);

impl FromStr for ActKind {
    type Err = UnknownActKind;

    /// Case-insensitive, so plan files may write `say(greet)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownActKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ForceClass {
    InitiativeAssertive,
    InitiativeDirective,
    ReactiveAssertive,
    ReactiveDirective,
    Declarative,
    Promissive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroundingRole {
    ExplicitPositive,
    ExplicitNegative,
    Request,
    None,
}

pub fn classify_force(kind: ActKind) -> ForceClass {
    use ActKind::*;
    match kind {
        Inform => ForceClass::InitiativeAssertive,
        RequestInfo | Offer | RequestDirective | Ask | Suggest => ForceClass::InitiativeDirective,
        Answer | Accept | Refuse | Acknowledge | WantsNothing => ForceClass::ReactiveAssertive,
        Confirm => ForceClass::ReactiveDirective,
        Bye | Greet => ForceClass::Declarative,
        InformIntent => ForceClass::Promissive,
    }
}

pub fn grounding_role(kind: ActKind) -> GroundingRole {
    use ActKind::*;
    match kind {
        Accept | Acknowledge => GroundingRole::ExplicitPositive,
        Refuse | WantsNothing => GroundingRole::ExplicitNegative,
        Confirm => GroundingRole::Request,
        _ => GroundingRole::None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    System,
}

/// Semantic payload of a move.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Content {
    /// No payload; reactive acts with empty content refer to the current QUD.
    Empty,
    Props(Vec<Proposition>),
    Question(Question),
    /// The tagger could not interpret the utterance.
    Unknown,
}

impl Content {
    pub fn props(&self) -> &[Proposition] {
        match self {
            Content::Props(ps) => ps,
            _ => &[],
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Content::Empty => true,
            Content::Props(ps) => ps.is_empty(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpeechAct {
    pub kind: ActKind,
    pub content: Content,
    pub speaker: Speaker,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MalformedAct {
    #[error("{0} must carry empty content")]
    UnexpectedContent(ActKind),
    #[error("{0} needs content")]
    MissingContent(ActKind),
}

impl SpeechAct {
    pub fn new(kind: ActKind, content: Content, speaker: Speaker) -> Self {
        Self {
            kind,
            content,
            speaker,
            surface: None,
        }
    }

    pub fn system(kind: ActKind, content: Content) -> Self {
        Self::new(kind, content, Speaker::System)
    }

    pub fn user(kind: ActKind, content: Content) -> Self {
        Self::new(kind, content, Speaker::User)
    }

    pub fn bare(kind: ActKind, speaker: Speaker) -> Self {
        Self::new(kind, Content::Empty, speaker)
    }

    pub fn with_surface(mut self, surface: impl Into<String>) -> Self {
        self.surface = Some(surface.into());
        self
    }

    pub fn force(&self) -> ForceClass {
        classify_force(self.kind)
    }

    pub fn grounding(&self) -> GroundingRole {
        grounding_role(self.kind)
    }

    /// Checks the per-kind content constraints.
    pub fn validate(&self) -> Result<(), MalformedAct> {
        match self.kind {
            ActKind::Greet | ActKind::Bye if !self.content.is_empty() => {
                Err(MalformedAct::UnexpectedContent(self.kind))
            }
            ActKind::Answer | ActKind::Ask if self.content.is_empty() => Err(MalformedAct::MissingContent(self.kind)),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn force_examples() {
        assert_eq!(classify_force(ActKind::Inform), ForceClass::InitiativeAssertive);
        assert_eq!(classify_force(ActKind::Confirm), ForceClass::ReactiveDirective);
        assert_eq!(classify_force(ActKind::Bye), ForceClass::Declarative);
        assert_eq!(classify_force(ActKind::InformIntent), ForceClass::Promissive);
    }

    #[test]
    fn grounding_examples() {
        assert_eq!(grounding_role(ActKind::Accept), GroundingRole::ExplicitPositive);
        assert_eq!(grounding_role(ActKind::Refuse), GroundingRole::ExplicitNegative);
        assert_eq!(grounding_role(ActKind::Greet), GroundingRole::None);
        assert_eq!(grounding_role(ActKind::Confirm), GroundingRole::Request);
    }

    #[test]
    fn explicit_grounding_set_is_exactly_five() {
        let set: Vec<_> = ActKind::ALL
            .into_iter()
            .filter(|k| grounding_role(*k) != GroundingRole::None)
            .collect();
        assert_eq!(
            set,
            vec![
                ActKind::Accept,
                ActKind::Refuse,
                ActKind::Acknowledge,
                ActKind::WantsNothing,
                ActKind::Confirm
            ]
        );
    }

    #[test]
    fn force_classes_partition_the_kinds() {
        let classes = [
            ForceClass::InitiativeAssertive,
            ForceClass::InitiativeDirective,
            ForceClass::ReactiveAssertive,
            ForceClass::ReactiveDirective,
            ForceClass::Declarative,
            ForceClass::Promissive,
        ];
        let mut total = 0;
        for c in classes {
            let bucket = ActKind::ALL.iter().filter(|k| classify_force(**k) == c).count();
            assert!(bucket > 0, "{c:?} empty");
            total += bucket;
        }
        assert_eq!(total, ActKind::ALL.len());
    }

    #[test]
    fn kind_names_parse_case_insensitively() {
        for k in ActKind::ALL {
            assert_eq!(k.name().to_lowercase().parse::<ActKind>().unwrap(), k);
        }
        assert!("Shrug".parse::<ActKind>().is_err());
    }

    #[test]
    fn greet_with_content_is_malformed() {
        let act = SpeechAct::user(ActKind::Greet, Content::Props(vec!["term(asthma)".parse().unwrap()]));
        assert!(act.validate().is_err());
        assert!(SpeechAct::user(ActKind::Answer, Content::Empty).validate().is_err());
        assert!(SpeechAct::bare(ActKind::Accept, Speaker::User).validate().is_ok());
    }

    #[test]
    fn wire_shape() {
        let act = SpeechAct::system(ActKind::Ask, Content::Question("?term(t)".parse().unwrap()));
        let json = serde_json::to_value(&act).unwrap();
        assert_eq!(json["kind"], "Ask");
        assert_eq!(json["content"]["type"], "question");
        assert_eq!(json["content"]["value"], "?term(t)");
        assert_eq!(json["speaker"], "system");
        let back: SpeechAct = serde_json::from_value(json).unwrap();
        assert_eq!(back, act);
    }
}

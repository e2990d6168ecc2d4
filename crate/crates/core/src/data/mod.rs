//! WIQA-format examples: ingestion, statistics, baselines, a synthetic
//! influence-graph task, and polarity-flipped question pairs.

mod baselines;
mod flip;
mod stats;
mod synth;
mod wiqa;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoder::tokenize;
use crate::error::Error;

pub use baselines::{majority_baseline, random_baseline, BaselineReport, MajorityBaseline};
pub use flip::{flip_question, POLARITY_PAIRS};
pub use stats::{stats, DatasetStats};
pub use synth::{
    default_entity_names, synth_generate, InfluenceGraph, SignedEdge, SyntheticSpec,
};
pub use wiqa::{load_wiqa, read_jsonl, write_jsonl, FieldMap, LoadOptions, LoadOutcome};

/// Answer to a "what if" question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    More,
    Less,
    NoEffect,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::More, Label::Less, Label::NoEffect];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self, Error> {
        Self::ALL.get(i).copied().ok_or(Error::InvalidLabel(i))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::More => "more",
            Label::Less => "less",
            Label::NoEffect => "no_effect",
        }
    }

    /// more ↔ less; no_effect unchanged.
    pub fn flipped(self) -> Self {
        match self {
            Label::More => Label::Less,
            Label::Less => Label::More,
            Label::NoEffect => Label::NoEffect,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "more" => Ok(Label::More),
            "less" => Ok(Label::Less),
            "no_effect" => Ok(Label::NoEffect),
            _ => Err(Error::Data(format!("unknown label {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    InPara,
    OutOfPara,
    NoEffect,
}

impl QuestionType {
    pub const ALL: [QuestionType; 3] = [
        QuestionType::InPara,
        QuestionType::OutOfPara,
        QuestionType::NoEffect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::InPara => "in_para",
            QuestionType::OutOfPara => "out_of_para",
            QuestionType::NoEffect => "no_effect",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One question over one procedural paragraph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WiqaExample {
    pub id: String,
    pub question: String,
    /// Paragraph steps in order.
    pub paragraph: Vec<String>,
    pub question_tokens: Vec<String>,
    /// All steps as one token stream, each step closed by ".".
    pub paragraph_tokens: Vec<String>,
    pub label: Option<Label>,
    pub question_type: Option<QuestionType>,
    pub hops: Option<u8>,
}

impl WiqaExample {
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        paragraph: Vec<String>,
        label: Option<Label>,
        question_type: Option<QuestionType>,
        hops: Option<u8>,
    ) -> Self {
        let question = question.into();
        let question_tokens = tokenize(&question);
        let paragraph_tokens = paragraph_tokens(&paragraph);
        Self {
            id: id.into(),
            question,
            paragraph,
            question_tokens,
            paragraph_tokens,
            label,
            question_type,
            hops,
        }
    }
}

/// Joins steps into one token stream with "." separators.
pub fn paragraph_tokens(steps: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    for step in steps {
        let toks = tokenize(step);
        if toks.is_empty() {
            continue;
        }
        let closed = toks.last().map(String::as_str) == Some(".");
        out.extend(toks);
        if !closed {
            out.push(".".into());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_are_joined_with_separators() {
        let steps = vec!["Rain falls".to_string(), "Water pools.".to_string()];
        assert_eq!(
            paragraph_tokens(&steps),
            ["rain", "falls", ".", "water", "pools", "."]
        );
    }

    #[test]
    fn label_round_trips() {
        for l in Label::ALL {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
            assert_eq!(Label::from_index(l.index()).unwrap(), l);
            assert_eq!(l.flipped().flipped(), l);
        }
        assert!(Label::from_index(3).is_err());
    }
}

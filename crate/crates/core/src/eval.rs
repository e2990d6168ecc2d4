//! Accuracy breakdowns by question type and hop count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{Label, WiqaExample};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
}

impl Accuracy {
    fn add(&mut self, hit: bool) {
        self.correct += u64::from(hit);
        self.total += 1;
        self.accuracy = self.correct as f64 / self.total as f64;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: Accuracy,
    /// Keyed by question type; examples without a type fall under `unknown`.
    pub by_question_type: BTreeMap<String, Accuracy>,
    /// Only hop counts present in the data appear.
    pub by_hops: BTreeMap<String, Accuracy>,
    /// `confusion[gold][predicted]` in label order more, less, no_effect.
    pub confusion: [[u64; 3]; 3],
    pub label_order: [String; 3],
    pub config_fingerprint: String,
}

impl EvalReport {
    pub fn new(
        examples: &[WiqaExample],
        predictions: &[Label],
        config_fingerprint: impl Into<String>,
    ) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Data("evaluation over an empty dataset".into()));
        }
        if examples.len() != predictions.len() {
            return Err(Error::InvalidArgument(format!(
                "{} predictions for {} examples",
                predictions.len(),
                examples.len()
            )));
        }
        let mut report = EvalReport {
            overall: Accuracy::default(),
            by_question_type: BTreeMap::new(),
            by_hops: BTreeMap::new(),
            confusion: [[0; 3]; 3],
            label_order: Label::ALL.map(|l| l.as_str().to_string()),
            config_fingerprint: config_fingerprint.into(),
        };
        for (ex, &pred) in examples.iter().zip(predictions) {
            let gold = ex
                .label
                .ok_or_else(|| Error::Data(format!("example {} has no label", ex.id)))?;
            let hit = gold == pred;
            report.overall.add(hit);
            report.confusion[gold.index()][pred.index()] += 1;
            let qt = ex.question_type.map_or("unknown", |q| q.as_str());
            report
                .by_question_type
                .entry(qt.to_string())
                .or_default()
                .add(hit);
            if let Some(h) = ex.hops {
                report.by_hops.entry(h.to_string()).or_default().add(hit);
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::QuestionType;
    use proptest::prelude::*;

    fn example(label: Label, qt: QuestionType, hops: u8) -> WiqaExample {
        WiqaExample::new("e", "q", vec![], Some(label), Some(qt), Some(hops))
    }

    #[test]
    fn majority_stub_on_test_v2_composition() {
        // in-para 530, out-of-para 1218, no-effect 1255
        let mut data = Vec::new();
        for (n, label, qt, hops) in [
            (530, Label::More, QuestionType::InPara, 1),
            (1218, Label::Less, QuestionType::OutOfPara, 2),
            (1255, Label::NoEffect, QuestionType::NoEffect, 0),
        ] {
            data.extend((0..n).map(|_| example(label, qt, hops)));
        }
        let preds = vec![Label::NoEffect; data.len()];
        let r = EvalReport::new(&data, &preds, "x").unwrap();
        assert!((r.overall.accuracy * 100.0 - 41.79).abs() < 0.005);
        assert_eq!(r.by_question_type["in_para"].accuracy, 0.0);
        assert_eq!(r.by_question_type["out_of_para"].accuracy, 0.0);
        assert_eq!(r.by_question_type["no_effect"].accuracy, 1.0);
        assert!(!r.by_hops.contains_key("3"));
    }

    #[test]
    fn empty_is_a_data_error() {
        assert!(matches!(EvalReport::new(&[], &[], "x"), Err(Error::Data(_))));
    }

    proptest! {
        #[test]
        fn breakdowns_are_consistent(
            rows in prop::collection::vec((0usize..3, 0usize..3, 0usize..3, 0u8..4), 1..60)
        ) {
            let data: Vec<_> = rows
                .iter()
                .map(|&(g, _, q, h)| example(Label::ALL[g], QuestionType::ALL[q], h))
                .collect();
            let preds: Vec<_> = rows.iter().map(|&(_, p, _, _)| Label::ALL[p]).collect();
            let r = EvalReport::new(&data, &preds, "x").unwrap();
            let weighted: f64 = r
                .by_question_type
                .values()
                .map(|a| a.accuracy * a.total as f64)
                .sum::<f64>()
                / r.overall.total as f64;
            prop_assert!((weighted - r.overall.accuracy).abs() < 1e-9);
            for (g, row) in r.confusion.iter().enumerate() {
                let gold = rows.iter().filter(|x| x.0 == g).count() as u64;
                prop_assert_eq!(row.iter().sum::<u64>(), gold);
            }
        }
    }
}

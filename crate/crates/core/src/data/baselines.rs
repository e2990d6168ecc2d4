use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Label, WiqaExample};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub name: String,
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
    /// Accuracy per question type, for types present in the examples.
    pub by_question_type: BTreeMap<String, f64>,
    pub predictions: Vec<Label>,
}

fn gold(examples: &[WiqaExample]) -> Result<Vec<Label>> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("baseline over no examples".into()));
    }
    examples
        .iter()
        .map(|e| {
            e.label
                .ok_or_else(|| Error::Data(format!("example {} has no label", e.id)))
        })
        .collect()
}

fn report(
    name: &str,
    examples: &[WiqaExample],
    gold: &[Label],
    predictions: Vec<Label>,
) -> BaselineReport {
    let mut per_type: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for ((ex, g), p) in examples.iter().zip(gold).zip(&predictions) {
        if let Some(qt) = ex.question_type {
            let cell = per_type.entry(qt.as_str().into()).or_default();
            cell.0 += u64::from(g == p);
            cell.1 += 1;
        }
    }
    let correct = gold
        .iter()
        .zip(&predictions)
        .filter(|(g, p)| g == p)
        .count() as u64;
    let total = gold.len() as u64;
    BaselineReport {
        name: name.into(),
        correct,
        total,
        accuracy: correct as f64 / total as f64,
        by_question_type: per_type
            .into_iter()
            .map(|(k, (c, t))| (k, c as f64 / t as f64))
            .collect(),
        predictions,
    }
}

/// Predicts the most frequent label of a fitting set; ties go to the
/// lowest label index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MajorityBaseline {
    pub label: Label,
}

impl MajorityBaseline {
    pub fn fit(train: &[WiqaExample]) -> Result<Self> {
        let labels = gold(train)?;
        let mut counts = [0usize; 3];
        for l in labels {
            counts[l.index()] += 1;
        }
        let best = (0..3).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
        Ok(Self {
            label: Label::from_index(best)?,
        })
    }

    pub fn evaluate(&self, examples: &[WiqaExample]) -> Result<BaselineReport> {
        let g = gold(examples)?;
        Ok(report("majority", examples, &g, vec![self.label; g.len()]))
    }
}

/// Majority label of `examples` scored on the same examples.
pub fn majority_baseline(examples: &[WiqaExample]) -> Result<BaselineReport> {
    MajorityBaseline::fit(examples)?.evaluate(examples)
}

/// Uniform random label per example from a seeded ChaCha8 stream.
pub fn random_baseline(examples: &[WiqaExample], seed: u64) -> Result<BaselineReport> {
    let g = gold(examples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let predictions = g
        .iter()
        .map(|_| Label::ALL[rng.gen_range(0..3)])
        .collect();
    Ok(report("random", examples, &g, predictions))
}

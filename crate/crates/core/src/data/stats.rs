use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::WiqaExample;

/// Counts by label, question type and hop count.
///
/// Every key of the closed label and type sets is present; examples without
/// a value are counted under `unknown`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: u64,
    pub labels: BTreeMap<String, u64>,
    pub question_types: BTreeMap<String, u64>,
    pub hops: BTreeMap<String, u64>,
}

pub fn stats(examples: &[WiqaExample]) -> DatasetStats {
    let mut s = DatasetStats {
        total: examples.len() as u64,
        ..DatasetStats::default()
    };
    for l in super::Label::ALL {
        s.labels.insert(l.as_str().into(), 0);
    }
    for q in super::QuestionType::ALL {
        s.question_types.insert(q.as_str().into(), 0);
    }
    for h in 0..=3u8 {
        s.hops.insert(h.to_string(), 0);
    }
    for ex in examples {
        let label = ex.label.map_or("unknown", |l| l.as_str());
        *s.labels.entry(label.into()).or_default() += 1;
        let qt = ex.question_type.map_or("unknown", |q| q.as_str());
        *s.question_types.entry(qt.into()).or_default() += 1;
        let hops = ex.hops.map_or_else(|| "unknown".to_string(), |h| h.to_string());
        *s.hops.entry(hops).or_default() += 1;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::super::{Label, QuestionType};
    use super::*;

    fn ex(label: Label, qt: QuestionType, hops: u8) -> WiqaExample {
        WiqaExample::new("x", "q", vec![], Some(label), Some(qt), Some(hops))
    }

    #[test]
    fn counts_sum_to_total() {
        let data = vec![
            ex(Label::More, QuestionType::InPara, 1),
            ex(Label::Less, QuestionType::OutOfPara, 3),
            ex(Label::NoEffect, QuestionType::NoEffect, 0),
            WiqaExample::new("y", "q", vec![], None, None, None),
        ];
        let s = stats(&data);
        assert_eq!(s.total, 4);
        for m in [&s.labels, &s.question_types, &s.hops] {
            assert_eq!(m.values().sum::<u64>(), 4);
        }
        assert_eq!(s.hops["2"], 0);
        assert_eq!(s.labels["unknown"], 1);
    }
}

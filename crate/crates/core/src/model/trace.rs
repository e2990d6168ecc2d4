use serde::{Deserialize, Serialize};

use super::Forward;
use crate::data::WiqaExample;
use crate::gating::{GatedEntities, Side};
use crate::numerics::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntityTrace {
    /// Output row of the gate.
    pub slot: usize,
    pub token: String,
    /// Position in the (truncated) token sequence of its side.
    pub position: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationEnd {
    pub side: String,
    pub slot: usize,
    /// Index into the pooled 2k rows.
    pub pooled_index: usize,
    /// `None` when the slot is padding.
    pub token: Option<String>,
    pub position: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationTrace {
    pub candidate: usize,
    pub left: RelationEnd,
    pub right: RelationEnd,
    pub score: f64,
}

/// What the gates kept for one example.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateTrace {
    pub example_id: String,
    pub config_fingerprint: String,
    pub question_entities: Vec<EntityTrace>,
    pub paragraph_entities: Vec<EntityTrace>,
    /// Full score distribution over question positions.
    pub question_scores: Vec<f64>,
    pub paragraph_scores: Vec<f64>,
    pub relations: Vec<RelationTrace>,
    /// Full score distribution over relation candidates.
    pub relation_scores: Vec<f64>,
}

fn entities<T: Real>(g: &GatedEntities<T>, tokens: &[String]) -> Vec<EntityTrace> {
    g.indices
        .iter()
        .enumerate()
        .filter_map(|(slot, &pos)| {
            pos.map(|p| EntityTrace {
                slot,
                token: tokens.get(p).cloned().unwrap_or_default(),
                position: p,
                score: g.scores[p].as_f64(),
            })
        })
        .collect()
}

impl GateTrace {
    pub fn build<T: Real>(
        ex: &WiqaExample,
        fwd: &Forward<T>,
        fingerprint: String,
    ) -> Self {
        let q_tokens = &ex.question_tokens;
        let c_tokens = &ex.paragraph_tokens;
        let mut trace = GateTrace {
            example_id: ex.id.clone(),
            config_fingerprint: fingerprint,
            ..GateTrace::default()
        };
        let to_f64 = |s: &[T]| s.iter().map(|v| v.as_f64()).collect::<Vec<_>>();
        if let Some(g) = &fwd.question {
            trace.question_entities = entities(g, q_tokens);
            trace.question_scores = to_f64(&g.scores);
        }
        if let Some(g) = &fwd.paragraph {
            trace.paragraph_entities = entities(g, c_tokens);
            trace.paragraph_scores = to_f64(&g.scores);
        }
        if let Some(r) = &fwd.relations {
            let end = |i: usize| {
                let p = fwd.provenance[i];
                let tokens = match p.side {
                    Side::Question => q_tokens,
                    Side::Paragraph => c_tokens,
                };
                RelationEnd {
                    side: match p.side {
                        Side::Question => "question".into(),
                        Side::Paragraph => "paragraph".into(),
                    },
                    slot: p.slot,
                    pooled_index: i,
                    token: p.position.and_then(|pos| tokens.get(pos).cloned()),
                    position: p.position,
                }
            };
            trace.relations = r
                .selected
                .iter()
                .zip(&r.pairs)
                .map(|(&cand, &(a, b))| RelationTrace {
                    candidate: cand,
                    left: end(a),
                    right: end(b),
                    score: r.scores[cand].as_f64(),
                })
                .collect();
            trace.relation_scores = to_f64(&r.scores);
        }
        trace
    }
}

//! Entity and relation gating.
//!
//! Both gates follow the same pattern: score each row with an MLP,
//! softmax-normalise the scores over the valid rows, scale every row by its
//! score, and keep the `k` best rows. The selection itself is a constant
//! under differentiation, so gradients reach the score MLP only through the
//! score factors of the rows that were kept.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::nn::{Linear, Mlp};
use crate::numerics::{topk_select, Real, Tape, Var};

#[derive(Clone, Debug)]
pub struct GatedEntities<T: Real = f32> {
    /// k×d selected rows, each scaled by its score; padding rows are zero.
    pub v: Var,
    /// Source row of each output row; `None` for padding.
    pub indices: Vec<Option<usize>>,
    /// Softmax scores over the whole sequence (zero on masked rows).
    pub scores: Vec<T>,
    pub validity: Vec<bool>,
    /// Gap between the selection and the nearest alternative selection.
    pub margin: f64,
}

pub fn entity_gate<T: Real>(
    tape: &mut Tape<'_, T>,
    e: Var,
    mask: &[bool],
    k: usize,
    score_mlp: &Mlp,
) -> Result<GatedEntities<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("entity gate needs k >= 1".into()));
    }
    let rows = tape.shape(e).0;
    if mask.len() != rows {
        return Err(Error::Dimension {
            op: "entity_gate",
            left: tape.shape(e),
            right: (mask.len(), 1),
        });
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::InvalidArgument(
            "entity gate over a sequence with no real tokens".into(),
        ));
    }
    let raw = score_mlp.forward(tape, e)?;
    let raw = tape.transpose(raw);
    let u = tape.row_softmax(raw, Some(mask))?;
    let scaled = tape.scale_rows(e, u)?;

    let scores = tape.value(u).as_slice().to_vec();
    let (indices, margin) = select(tape, &scores, Some(mask), k)?;
    let v = tape.gather_rows(scaled, &indices)?;
    Ok(GatedEntities {
        v,
        validity: indices.iter().map(Option::is_some).collect(),
        indices,
        scores,
        margin,
    })
}

fn select<T: Real>(
    tape: &mut Tape<'_, T>,
    scores: &[T],
    mask: Option<&[bool]>,
    k: usize,
) -> Result<(Vec<Option<usize>>, f64)> {
    let candidates: Vec<T> = scores
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if mask.map_or(true, |m| m[i]) {
                s
            } else {
                T::neg_infinity()
            }
        })
        .collect();
    let top = topk_select(&candidates, k)?;
    tape.note_discrete(top.indices.iter().map(|&i| i as u64));
    let margin = top.margin(&candidates);
    let mut indices: Vec<Option<usize>> = top.indices.iter().map(|&i| Some(i)).collect();
    indices.resize(k, None);
    Ok((indices, margin))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Question,
    Paragraph,
}

/// Where a pooled entity row came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub side: Side,
    /// Rank within its side's gate output.
    pub slot: usize,
    /// Token position in the side's sequence; `None` for padding rows.
    pub position: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct PooledEntities {
    /// 2k×d: question rows first, then paragraph rows.
    pub v: Var,
    pub provenance: Vec<Provenance>,
}

pub fn pool_entities<T: Real>(
    tape: &mut Tape<'_, T>,
    vq: &GatedEntities<T>,
    vc: &GatedEntities<T>,
) -> Result<PooledEntities> {
    let (qs, cs) = (tape.shape(vq.v), tape.shape(vc.v));
    if qs != cs {
        return Err(Error::Dimension {
            op: "pool_entities",
            left: qs,
            right: cs,
        });
    }
    let v = tape.concat_rows(&[vq.v, vc.v])?;
    let provenance = vq
        .indices
        .iter()
        .enumerate()
        .map(|(slot, &position)| Provenance {
            side: Side::Question,
            slot,
            position,
        })
        .chain(vc.indices.iter().enumerate().map(|(slot, &position)| Provenance {
            side: Side::Paragraph,
            slot,
            position,
        }))
        .collect();
    Ok(PooledEntities { v, provenance })
}

/// Number of unordered pairs among `2k` pooled entities.
pub fn relation_count(k: usize) -> usize {
    2 * k * (2 * k).saturating_sub(1) / 2
}

/// All `(i, j)` with `i < j < n`, lexicographically ordered.
pub fn candidate_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct RelationCandidates {
    pub pairs: Vec<(usize, usize)>,
    /// r×2d after the non-linear map.
    pub v_rel: Var,
}

/// Concatenates every unordered pair of pooled rows and maps it through a
/// 2d→2d ReLU layer.
pub fn relation_candidates<T: Real>(
    tape: &mut Tape<'_, T>,
    pooled: &PooledEntities,
    map: &Linear,
) -> Result<RelationCandidates> {
    let (n, d) = tape.shape(pooled.v);
    if map.input != 2 * d || map.output != 2 * d {
        return Err(Error::Dimension {
            op: "relation_candidates",
            left: (n, d),
            right: (map.input, map.output),
        });
    }
    let pairs = candidate_pairs(n);
    let left: Vec<Option<usize>> = pairs.iter().map(|&(i, _)| Some(i)).collect();
    let right: Vec<Option<usize>> = pairs.iter().map(|&(_, j)| Some(j)).collect();
    let l = tape.gather_rows(pooled.v, &left)?;
    let r = tape.gather_rows(pooled.v, &right)?;
    let joined = tape.concat_cols(&[l, r])?;
    let mapped = map.forward(tape, joined)?;
    let v_rel = tape.relu(mapped);
    Ok(RelationCandidates { pairs, v_rel })
}

#[derive(Clone, Debug)]
pub struct GatedRelations<T: Real = f32> {
    /// k×2d selected candidate rows scaled by their scores.
    pub f_rel: Var,
    /// Index into the candidate list for each selected row.
    pub selected: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
    /// Softmax scores over all r candidates.
    pub scores: Vec<T>,
    pub margin: f64,
}

pub fn relation_gate<T: Real>(
    tape: &mut Tape<'_, T>,
    cands: &RelationCandidates,
    k: usize,
    score_mlp: &Mlp,
) -> Result<GatedRelations<T>> {
    let r = cands.pairs.len();
    if k == 0 || k > r {
        return Err(Error::InvalidArgument(format!(
            "relation gate needs 1 <= k <= {r}, got {k}"
        )));
    }
    let raw = score_mlp.forward(tape, cands.v_rel)?;
    let raw = tape.transpose(raw);
    let t = tape.row_softmax(raw, None)?;
    let scaled = tape.scale_rows(cands.v_rel, t)?;
    let scores = tape.value(t).as_slice().to_vec();
    let (indices, margin) = select(tape, &scores, None, k)?;
    let f_rel = tape.gather_rows(scaled, &indices)?;
    let selected: Vec<usize> = indices.into_iter().flatten().collect();
    Ok(GatedRelations {
        f_rel,
        pairs: selected.iter().map(|&i| cands.pairs[i]).collect(),
        selected,
        scores,
        margin,
    })
}

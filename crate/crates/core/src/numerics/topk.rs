use std::cmp::Ordering;

use super::matrix::Real;
use crate::error::{Error, Result};

/// Result of a hard top-k selection.
#[derive(Clone, Debug, PartialEq)]
pub struct TopK {
    /// Selected positions, best first; ties go to the lower index.
    pub indices: Vec<usize>,
    /// 0/1 membership over the full score vector.
    pub mask: Vec<bool>,
    /// How many of the requested `k` could not be filled.
    pub deficit: usize,
}

impl TopK {
    /// Smallest score gap that separates the selection from a different one:
    /// adjacent selected scores and the last selected vs. the best rejected.
    pub fn margin<T: Real>(&self, scores: &[T]) -> f64 {
        let mut margin = f64::INFINITY;
        for w in self.indices.windows(2) {
            margin = margin.min(scores[w[0]].as_f64() - scores[w[1]].as_f64());
        }
        if let Some(&last) = self.indices.last() {
            let best_rejected = scores
                .iter()
                .enumerate()
                .filter(|(i, s)| !self.mask[*i] && s.is_finite())
                .map(|(_, s)| s.as_f64())
                .fold(f64::NEG_INFINITY, f64::max);
            margin = margin.min(scores[last].as_f64() - best_rejected);
        }
        margin
    }
}

/// Selects the `k` largest finite scores. Non-finite scores are unavailable.
pub fn topk_select<T: Real>(scores: &[T], k: usize) -> Result<TopK> {
    if k == 0 {
        return Err(Error::InvalidArgument("top-k requires k >= 1".into()));
    }
    let mut order: Vec<usize> = (0..scores.len())
        .filter(|&i| scores[i].is_finite())
        .collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let available = order.len();
    order.truncate(k);
    let mut mask = vec![false; scores.len()];
    for &i in &order {
        mask[i] = true;
    }
    Ok(TopK {
        indices: order,
        mask,
        deficit: k.saturating_sub(available),
    })
}

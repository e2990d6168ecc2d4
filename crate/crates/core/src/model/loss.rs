use super::Prediction;
use crate::error::Result;
use crate::numerics::{Matrix, Real, Tape, Var};

/// Swaps the more/less entries of a class distribution.
pub fn mirror_probabilities(p: [f64; 3]) -> [f64; 3] {
    [p[1], p[0], p[2]]
}

/// `|p_more(x) − p_less(x′)| + |p_less(x) − p_more(x′)| + |p_no(x) − p_no(x′)|`.
///
/// Zero exactly when the flipped prediction mirrors the original; at most 2.
pub fn consistency_loss(x: &Prediction, flipped: &Prediction) -> f64 {
    let m = mirror_probabilities(flipped.probabilities);
    x.probabilities
        .iter()
        .zip(m)
        .map(|(a, b)| (a - b).abs())
        .sum()
}

/// [`consistency_loss`] on two 1×3 logit rows, differentiable in both.
pub fn consistency_loss_on_tape<T: Real>(
    tape: &mut Tape<'_, T>,
    logits: Var,
    flipped_logits: Var,
) -> Result<Var> {
    let p = tape.row_softmax(logits, None)?;
    let q = tape.row_softmax(flipped_logits, None)?;
    let swap = tape.constant(Matrix::from_rows(&[
        vec![T::zero(), T::one(), T::zero()],
        vec![T::one(), T::zero(), T::zero()],
        vec![T::zero(), T::zero(), T::one()],
    ])?);
    let mirrored = tape.matmul(q, swap)?;
    let diff = tape.sub(p, mirrored)?;
    let abs = tape.abs(diff);
    Ok(tape.sum_all(abs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use proptest::prelude::*;

    fn pred(p: [f64; 3]) -> Prediction {
        Prediction {
            logits: p.map(f64::ln),
            probabilities: p,
            label: Label::More,
        }
    }

    #[test]
    fn spec_cases() {
        assert_eq!(consistency_loss(&pred([0.7, 0.2, 0.1]), &pred([0.2, 0.7, 0.1])), 0.0);
        let u = pred([1.0 / 3.0; 3]);
        assert_eq!(consistency_loss(&u, &u), 0.0);
        assert_eq!(consistency_loss(&pred([1.0, 0.0, 0.0]), &pred([1.0, 0.0, 0.0])), 2.0);
    }

    #[test]
    fn tape_version_matches() {
        let mut t = Tape::<f64>::detached();
        let a = t.constant(Matrix::row_vector(&[0.3, -1.0, 2.0]));
        let b = t.constant(Matrix::row_vector(&[1.5, 0.2, -0.4]));
        let l = consistency_loss_on_tape(&mut t, a, b).unwrap();
        let pa = Prediction::from_logits(&[0.3f64, -1.0, 2.0]).unwrap();
        let pb = Prediction::from_logits(&[1.5f64, 0.2, -0.4]).unwrap();
        assert!((t.scalar(l) - consistency_loss(&pa, &pb)).abs() < 1e-12);
    }

    fn distribution() -> impl Strategy<Value = [f64; 3]> {
        prop::array::uniform3(-6.0f64..6.0).prop_map(|l| {
            Prediction::from_logits(&l).unwrap().probabilities
        })
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in distribution(), b in distribution()) {
            let (pa, pb) = (pred(a), pred(b));
            let l = consistency_loss(&pa, &pb);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&l));
            prop_assert!((l - consistency_loss(&pb, &pa)).abs() < 1e-12);
        }

        #[test]
        fn zero_on_mirrors(a in distribution()) {
            let l = consistency_loss(&pred(a), &pred(mirror_probabilities(a)));
            prop_assert_eq!(l, 0.0);
        }
    }
}

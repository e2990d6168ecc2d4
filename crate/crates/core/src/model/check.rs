use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Rgn, RgnConfig};
use crate::encoder::UNK;
use crate::error::{Error, Result};
use crate::numerics::{grad_check, GradCheckConfig, GradCheckReport, ParamStore, Tape};

/// Gate margins below this count as ties.
pub const TIE_MARGIN: f64 = 1e-9;

/// A random example sized to fill both sequences.
fn random_input(config: &RgnConfig, seed: u64) -> (Vec<usize>, Vec<usize>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut ids = |len: usize| -> Vec<usize> {
        (0..len)
            .map(|_| rng.gen_range(UNK + 1..config.vocab_size))
            .collect()
    };
    let q = ids(config.encoder.max_question_tokens());
    let c = ids(config.encoder.max_paragraph_tokens());
    let gold = rng.gen_range(0..3);
    (q, c, gold)
}

fn loss(
    rgn: &Rgn,
    store: &ParamStore<f64>,
    q: &[usize],
    c: &[usize],
    gold: usize,
) -> Result<(f64, u64, f64)> {
    let mut tape = Tape::new(store);
    tape.track_signature(true);
    let f = rgn.forward(&mut tape, q, c)?;
    let ce = tape.cross_entropy(f.logits, gold)?;
    let margin = [
        f.question.as_ref().map(|g| g.margin),
        f.paragraph.as_ref().map(|g| g.margin),
        f.relations.as_ref().map(|g| g.margin),
    ]
    .into_iter()
    .flatten()
    .fold(f64::INFINITY, f64::min);
    Ok((tape.scalar(ce), tape.signature(), margin))
}

/// Finite-difference check of every parameter of a freshly initialised
/// model (seeded by `seed`) on one random example, in `f64`.
///
/// Fails with [`Error::Tie`] when a gate selection sits on a tie.
pub fn check_model_gradients(
    config: &RgnConfig,
    seed: u64,
    check: &GradCheckConfig,
) -> Result<GradCheckReport> {
    if config.vocab_size <= UNK + 1 {
        return Err(Error::Config(format!(
            "gradient check needs a vocabulary larger than {}",
            UNK + 1
        )));
    }
    let config = RgnConfig {
        seed,
        ..config.clone()
    };
    let (rgn, store) = Rgn::initialize::<f64>(&config)?;
    let (q, c, gold) = random_input(&config, seed);

    let (_, _, margin) = loss(&rgn, &store, &q, &c, gold)?;
    if margin < TIE_MARGIN {
        return Err(Error::Tie(format!(
            "top-k margin {margin:e} at seed {seed}"
        )));
    }
    let mut tape = Tape::new(&store);
    let f = rgn.forward(&mut tape, &q, &c)?;
    let ce = tape.cross_entropy(f.logits, gold)?;
    let analytic = tape.backward(ce)?;
    drop(tape);

    grad_check(
        &store,
        &analytic,
        |s| loss(&rgn, s, &q, &c, gold).map(|(l, sig, _)| (l, sig)),
        check,
    )
}

//! Scores a short sequence with an MLP, keeps the top k rows and shows
//! which positions survive. Masked rows never get selected and short
//! sequences are zero padded.
//!
//! ```bash
//! cargo run --example entity_gating
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rgn::gating::entity_gate;
use rgn::numerics::nn::{Activation, Mlp};
use rgn::numerics::{Matrix, ParamStore, Tape};

fn main() -> rgn::Result<()> {
    let d = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut store = ParamStore::<f32>::new();
    let scorer = Mlp::new(&mut store, "gate", &[d, 8, 1], Activation::Relu, &mut rng)?;

    let e = Matrix::uniform(6, d, 1.0, &mut rng);
    let mask = [true, true, true, true, false, false];
    for k in [2, 3, 5] {
        let mut tape = Tape::new(&store);
        let ev = tape.constant(e.clone());
        let gated = entity_gate(&mut tape, ev, &mask, k, &scorer)?;
        println!("k={k}");
        println!("  scores   {:?}", gated.scores);
        println!("  selected {:?}  (margin {:.2e})", gated.indices, gated.margin);
        for (slot, row) in (0..k).map(|i| (i, tape.value(gated.v).row(i))) {
            println!("  slot {slot}: {row:?}");
        }
    }
    Ok(())
}

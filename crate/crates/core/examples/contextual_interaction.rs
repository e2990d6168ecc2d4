//! Bilinear contextual interaction against a stack of self-attention
//! layers over the same gated rows: output shapes, FLOPs and wall time.
//!
//! ```bash
//! cargo run --release --example contextual_interaction -- [d] [k]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rgn::bench::{run_bench, BenchConfig};
use rgn::interaction::{cim, InteractionMode, InteractionParams, MultiHeadConfig, MultiHeadInteraction};
use rgn::numerics::{Matrix, ParamStore, Tape};

fn arg(i: usize, default: usize) -> usize {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> rgn::Result<()> {
    let d = arg(1, 128);
    let k = arg(2, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut store = ParamStore::<f32>::new();
    let params = InteractionParams::new(&mut store, "cim", d, k, &mut rng)?;
    let mh_cfg = MultiHeadConfig {
        layers: 2,
        ..MultiHeadConfig::default()
    };
    let mh = MultiHeadInteraction::new(&mut store, "mh", d, &mh_cfg, &mut rng)?;

    let mut tape = Tape::new(&store);
    let v_q = tape.constant(Matrix::uniform(k, d, 1.0, &mut rng));
    let v_c = tape.constant(Matrix::uniform(k, d, 1.0, &mut rng));
    let a = cim(&mut tape, v_q, v_c, &params)?;
    let b = mh.forward(&mut tape, v_q, v_c)?;
    println!("CIM        f_q {:?}  f_c {:?}", tape.shape(a.f_q), tape.shape(a.f_c));
    println!("multi-head f_q {:?}  f_c {:?}", tape.shape(b.f_q), tape.shape(b.f_c));

    for (mode, layers) in [(InteractionMode::Cim, 0), (InteractionMode::MultiHead, 2)] {
        let r = run_bench(&BenchConfig {
            mode,
            k,
            d,
            layers,
            iterations: 5,
            ..BenchConfig::default()
        })?;
        println!(
            "{mode:?}: median {:.3} ms/batch, p95 {:.3}, {} FLOPs/batch",
            r.median_ms, r.p95_ms, r.flops_per_batch
        );
    }
    Ok(())
}

//! Forward-pass timing of the interaction block: bilinear CIM against a
//! stack of self-attention layers.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{
    cim, cim_flops, multi_head_flops, InteractionMode, InteractionParams, MultiHeadConfig,
    MultiHeadInteraction,
};
use crate::numerics::{Matrix, ParamStore, Tape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub mode: InteractionMode,
    pub k: usize,
    pub d: usize,
    /// Multi-head only.
    pub layers: usize,
    pub heads: usize,
    /// Examples per timed batch.
    pub batch: usize,
    pub iterations: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            mode: InteractionMode::Cim,
            k: 10,
            d: 768,
            layers: 6,
            heads: 4,
            batch: 4,
            iterations: 5,
            warmup: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub mode: InteractionMode,
    pub k: usize,
    pub d: usize,
    pub layers: usize,
    pub batch: usize,
    pub iterations: usize,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub flops_per_batch: u64,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k", self.k),
            ("d", self.d),
            ("batch", self.batch),
            ("iterations", self.iterations),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("bench {name} must be positive")));
            }
        }
        match self.mode {
            InteractionMode::MultiHead if self.layers == 0 => {
                Err(Error::Config("multi-head bench needs at least one layer".into()))
            }
            InteractionMode::MultiHead if self.heads == 0 || self.d % self.heads != 0 => Err(
                Error::Config(format!("{} heads do not divide width {}", self.heads, self.d)),
            ),
            InteractionMode::None => Err(Error::Config(
                "bench mode must be cim or multi_head".into(),
            )),
            _ => Ok(()),
        }
    }
}

enum Block {
    Cim(InteractionParams),
    MultiHead(MultiHeadInteraction),
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut store = ParamStore::<f32>::new();
    let mh = MultiHeadConfig {
        layers: config.layers,
        heads: config.heads,
        ffn_hidden: None,
    };
    let (block, flops) = match config.mode {
        InteractionMode::Cim => (
            Block::Cim(InteractionParams::new(
                &mut store,
                "interaction",
                config.d,
                config.k,
                &mut rng,
            )?),
            cim_flops(config.k, config.d),
        ),
        _ => (
            Block::MultiHead(MultiHeadInteraction::new(
                &mut store,
                "interaction",
                config.d,
                &mh,
                &mut rng,
            )?),
            multi_head_flops(config.k, config.d, &mh),
        ),
    };
    let inputs: Vec<(Matrix<f32>, Matrix<f32>)> = (0..config.batch)
        .map(|_| {
            (
                Matrix::uniform(config.k, config.d, 1.0, &mut rng),
                Matrix::uniform(config.k, config.d, 1.0, &mut rng),
            )
        })
        .collect();

    let run_batch = || -> Result<()> {
        for (q, c) in &inputs {
            let mut tape = Tape::new(&store);
            let v_q = tape.constant(q.clone());
            let v_c = tape.constant(c.clone());
            let out = match &block {
                Block::Cim(p) => cim(&mut tape, v_q, v_c, p)?,
                Block::MultiHead(m) => m.forward(&mut tape, v_q, v_c)?,
            };
            std::hint::black_box(tape.value(out.f_c));
        }
        Ok(())
    };

    for _ in 0..config.warmup {
        run_batch()?;
    }
    let mut times = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let start = Instant::now();
        run_batch()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let (median_ms, p95_ms) = summarize(&mut times);
    Ok(BenchReport {
        mode: config.mode,
        k: config.k,
        d: config.d,
        layers: match config.mode {
            InteractionMode::Cim => 0,
            _ => config.layers,
        },
        batch: config.batch,
        iterations: config.iterations,
        median_ms,
        p95_ms,
        flops_per_batch: flops * config.batch as u64,
    })
}

/// Median and nearest-rank 95th percentile of a non-empty sample.
fn summarize(times: &mut [f64]) -> (f64, f64) {
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let median = if n % 2 == 1 {
        times[n / 2]
    } else {
        (times[n / 2 - 1] + times[n / 2]) / 2.0
    };
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    (median, times[rank - 1])
}

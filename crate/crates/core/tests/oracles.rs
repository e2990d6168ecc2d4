//! Independent reference implementations checked against the library.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::{bilinear_reference, check_synthetic, random_matrix};
use rgn::data::{synth_generate, Label, SyntheticSpec};
use rgn::interaction::bilinear_interact;
use rgn::numerics::{Matrix, ParamStore, Tape};

#[test]
fn bilinear_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let store = ParamStore::<f64>::new();
    for _ in 0..100 {
        let k = rng.gen_range(1..=4);
        let d = rng.gen_range(1..=8);
        let a = random_matrix(&mut rng, k, d);
        let b = random_matrix(&mut rng, k, d);
        let w = random_matrix(&mut rng, d, k);
        let mut tape = Tape::new(&store);
        let va = tape.constant(Matrix::from_rows(&a).unwrap());
        let vb = tape.constant(Matrix::from_rows(&b).unwrap());
        let vw = tape.constant(Matrix::from_rows(&w).unwrap());
        let out = bilinear_interact(&mut tape, va, vb, vw).unwrap();
        let got = tape.value(out);
        let want = bilinear_reference(&a, &b, &w);
        for i in 0..k {
            for c in 0..d {
                assert!(
                    (got.get(i, c) - want[i][c]).abs() < 1e-6,
                    "k={k} d={d} ({i},{c}): {} vs {}",
                    got.get(i, c),
                    want[i][c]
                );
            }
        }
    }
}

#[test]
fn bilinear_rejects_bad_shapes() {
    let store = ParamStore::<f64>::new();
    let mut tape = Tape::new(&store);
    let a = tape.constant(Matrix::zeros(2, 3));
    let b = tape.constant(Matrix::zeros(2, 3));
    let w = tape.constant(Matrix::zeros(2, 3));
    assert!(bilinear_interact(&mut tape, a, b, w).is_err());
}

#[test]
fn synthetic_labels_match_path_enumeration() {
    for seed in 0..3 {
        let data = synth_generate(&SyntheticSpec {
            num_examples: 1000,
            num_entities: 6,
            max_hops: 3,
            seed,
            ..SyntheticSpec::default()
        })
        .unwrap();
        assert_eq!(data.len(), 1000);
        for ex in &data {
            check_synthetic(ex).unwrap();
        }
        let count = |l| data.iter().filter(|e| e.label == Some(l)).count() as f64;
        for l in Label::ALL {
            assert!((count(l) / 1000.0 - 1.0 / 3.0).abs() <= 0.1 / 3.0);
        }
    }
}

#[test]
fn synthetic_generation_is_deterministic() {
    let spec = SyntheticSpec {
        num_examples: 200,
        seed: 9,
        ..SyntheticSpec::default()
    };
    assert_eq!(synth_generate(&spec).unwrap(), synth_generate(&spec).unwrap());
}

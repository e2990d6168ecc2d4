//! Reverse-mode differentiation on a tape, checked against a central
//! finite difference.
//!
//! ```bash
//! cargo run --example autodiff_basics
//! ```

use rgn::numerics::{Matrix, ParamStore, Tape};

fn loss(store: &ParamStore<f64>, x: &Matrix<f64>, gold: usize) -> rgn::Result<f64> {
    let mut tape = Tape::new(store);
    let w = tape.param(store.id("w").expect("w exists"));
    let x = tape.constant(x.clone());
    let h = tape.matmul(x, w)?;
    let h = tape.relu(h);
    let ce = tape.cross_entropy(h, gold)?;
    Ok(tape.scalar(ce))
}

fn main() -> rgn::Result<()> {
    let mut store = ParamStore::<f64>::new();
    let w = store.add(
        "w",
        Matrix::from_rows(&[
            vec![0.5, -0.2, 0.1],
            vec![0.3, 0.8, -0.4],
        ])?,
    )?;
    let x = Matrix::row_vector(&[1.0, 2.0]);

    let mut tape = Tape::new(&store);
    let wv = tape.param(w);
    let xv = tape.constant(x.clone());
    let h = tape.matmul(xv, wv)?;
    let h = tape.relu(h);
    let ce = tape.cross_entropy(h, 1)?;
    println!("loss {:.6}", tape.scalar(ce));
    let grads = tape.backward(ce)?;
    let analytic = grads.get(w).expect("w reached").clone();
    drop(tape);

    let eps = 1e-6;
    for r in 0..2 {
        for c in 0..3 {
            let mut plus = store.clone();
            plus.get_mut(w).value.set(r, c, store.value(w).get(r, c) + eps);
            let mut minus = store.clone();
            minus.get_mut(w).value.set(r, c, store.value(w).get(r, c) - eps);
            let numeric = (loss(&plus, &x, 1)? - loss(&minus, &x, 1)?) / (2.0 * eps);
            println!(
                "dL/dw[{r}][{c}]  analytic {:+.6}  numeric {:+.6}",
                analytic.get(r, c),
                numeric
            );
        }
    }
    Ok(())
}

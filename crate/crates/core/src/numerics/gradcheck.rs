//! Central-difference verification of analytic gradients.
//!
//! Runs in `f64` so that the finite-difference error is dominated by the
//! method, not by rounding. Entries whose ±ε perturbation changes any
//! discrete branch (ReLU sign, top-k membership or order) are skipped and
//! counted, since the function is not differentiable across them.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::matrix::Matrix;
use super::param::{Gradients, ParamStore};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    pub epsilon: f64,
    /// Larger tensors are sampled down to this many entries.
    pub max_entries_per_param: usize,
    /// Denominator floor for the relative error.
    pub floor: f64,
    pub seed: u64,
    /// Test hook: multiply the analytic gradient of this parameter by 1.5.
    pub break_param: Option<String>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_entries_per_param: 24,
            floor: 1e-6,
            seed: 0,
            break_param: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryReport {
    pub param: String,
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamReport {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst: Option<EntryReport>,
    pub checked: usize,
    pub skipped_discontinuous: usize,
    pub params: Vec<ParamReport>,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.checked > 0 && self.max_rel_error < tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `analytic` against central differences of `loss`.
///
/// `loss` returns the scalar loss and the tape's branch signature.
pub fn grad_check<F>(
    store: &ParamStore<f64>,
    analytic: &Gradients<f64>,
    loss: F,
    config: &GradCheckConfig,
) -> Result<GradCheckReport>
where
    F: Fn(&ParamStore<f64>) -> Result<(f64, u64)>,
{
    if config.epsilon <= 0.0 {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let eval = |s: &ParamStore<f64>| -> Result<(f64, u64)> {
        let (l, sig) = loss(s)?;
        if !l.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss {l}")));
        }
        Ok((l, sig))
    };
    let (_, base_sig) = eval(store)?;

    let mut work = store.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        skipped_discontinuous: 0,
        params: Vec::new(),
    };

    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    for id in ids {
        let param = store.get(id);
        let shape = param.value.shape();
        let mut grad: Matrix<f64> = analytic.dense(id, shape);
        if config.break_param.as_deref() == Some(param.name.as_str()) {
            grad.scale_assign(1.5);
            // keep a broken all-zero gradient detectable
            for v in grad.as_mut_slice() {
                *v += 1e-3;
            }
        }
        let n = param.value.len();
        let entries: Vec<usize> = if n <= config.max_entries_per_param {
            (0..n).collect()
        } else {
            let mut v = sample(&mut rng, n, config.max_entries_per_param).into_vec();
            v.sort_unstable();
            v
        };

        let mut pr = ParamReport {
            name: param.name.clone(),
            checked: 0,
            max_rel_error: 0.0,
        };
        for e in entries {
            let original = work.value(id).as_slice()[e];
            work.get_mut(id).value.as_mut_slice()[e] = original + config.epsilon;
            let (plus, sig_plus) = eval(&work)?;
            work.get_mut(id).value.as_mut_slice()[e] = original - config.epsilon;
            let (minus, sig_minus) = eval(&work)?;
            work.get_mut(id).value.as_mut_slice()[e] = original;

            if sig_plus != base_sig || sig_minus != base_sig {
                report.skipped_discontinuous += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * config.epsilon);
            let a = grad.as_slice()[e];
            let rel = relative_error(a, numeric, config.floor);
            pr.checked += 1;
            pr.max_rel_error = pr.max_rel_error.max(rel);
            report.checked += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some(EntryReport {
                    param: param.name.clone(),
                    row: e / shape.1,
                    col: e % shape.1,
                    analytic: a,
                    numeric,
                    rel_error: rel,
                });
            }
        }
        report.params.push(pr);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tape;

    fn quadratic(store: &ParamStore<f64>) -> Result<(f64, Gradients<f64>)> {
        // L = sum((A x)^2) with A and x both parameters
        let mut t = Tape::new(store);
        let a = t.param(store.id("a").unwrap());
        let x = t.param(store.id("x").unwrap());
        let y = t.matmul(a, x)?;
        let tr = t.transpose(y);
        let sq = t.matmul(tr, y)?;
        let l = t.sum_all(sq);
        let v = t.scalar(l);
        Ok((v, t.backward(l)?))
    }

    fn store() -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.add(
            "a",
            Matrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![0.3, 0.7, -1.1]]).unwrap(),
        )
        .unwrap();
        s.add("x", Matrix::column_vector(&[0.2, -0.4, 1.5])).unwrap();
        s
    }

    #[test]
    fn quadratic_model_is_exact() {
        let s = store();
        let (_, g) = quadratic(&s).unwrap();
        let report = grad_check(
            &s,
            &g,
            |s| quadratic(s).map(|(l, _)| (l, 0)),
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-6, "{report:?}");
        assert_eq!(report.checked, 9);
    }

    #[test]
    fn broken_gradient_names_the_parameter() {
        let s = store();
        let (_, g) = quadratic(&s).unwrap();
        let cfg = GradCheckConfig {
            break_param: Some("x".into()),
            ..GradCheckConfig::default()
        };
        let report = grad_check(&s, &g, |s| quadratic(s).map(|(l, _)| (l, 0)), &cfg).unwrap();
        assert!(!report.passes(5e-3));
        assert_eq!(report.worst.unwrap().param, "x");
    }

    #[test]
    fn non_finite_loss_is_a_numeric_error() {
        let s = store();
        let g = Gradients::empty(2);
        let err = grad_check(&s, &g, |_| Ok((f64::NAN, 0)), &GradCheckConfig::default());
        assert!(matches!(err, Err(Error::Numeric(_))));
    }
}

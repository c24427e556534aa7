//! Central finite-difference checks for tape gradients.

use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Magnitude below which errors are measured absolutely rather than relatively.
pub const RELATIVE_FLOOR: f64 = 1e-3;

/// `|a - b| / max(|a|, |b|, RELATIVE_FLOOR)`.
pub fn relative_error<T: Scalar>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs()).max(T::lit(RELATIVE_FLOOR));
    (a - b).abs() / scale
}

/// Worst mismatch found by [`check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport<T> {
    pub max_relative_error: T,
    /// (input index, flat element index) of the worst entry.
    pub worst: (usize, usize),
    pub analytic: T,
    pub numeric: T,
    pub checked: usize,
}

/// Compares the tape gradient of the scalar produced by `f` against central
/// differences of step `h` taken on every element of every input.
pub fn check<T, F>(inputs: &[Tensor<T>], h: T, f: F) -> Result<GradCheckReport<T>>
where
    T: Scalar,
    F: for<'t> Fn(&'t Tape<T>, &[Var<'t, T>]) -> Result<Var<'t, T>>,
{
    let analytic: Vec<Tensor<T>> = {
        let tape = Tape::new();
        let vars: Vec<_> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
        let out = f(&tape, &vars)?;
        let grads = out.backward()?;
        vars.iter().map(|&v| grads.wrt(v)).collect()
    };

    let eval = |xs: &[Tensor<T>]| -> Result<T> {
        let tape = Tape::new();
        let vars: Vec<_> = xs.iter().map(|x| tape.leaf(x.clone())).collect();
        f(&tape, &vars)?
            .item()
            .ok_or_else(|| Error::Contract("gradient check needs a scalar output".into()))
    };

    let mut report = GradCheckReport {
        max_relative_error: T::zero(),
        worst: (0, 0),
        analytic: T::zero(),
        numeric: T::zero(),
        checked: 0,
    };
    let mut work = inputs.to_vec();
    for i in 0..inputs.len() {
        for e in 0..inputs[i].len() {
            let orig = inputs[i].data()[e];
            work[i].data_mut()[e] = orig + h;
            let plus = eval(&work)?;
            work[i].data_mut()[e] = orig - h;
            let minus = eval(&work)?;
            work[i].data_mut()[e] = orig;
            let numeric = (plus - minus) / (T::lit(2.0) * h);
            let a = analytic[i].data()[e];
            let err = relative_error(a, numeric);
            report.checked += 1;
            if err > report.max_relative_error || err.is_nan() {
                report = GradCheckReport {
                    max_relative_error: err,
                    worst: (i, e),
                    analytic: a,
                    numeric,
                    checked: report.checked,
                };
            }
        }
    }
    Ok(report)
}

//! Finite-difference verification of the tape's backward rules.

use crate::error::Result;
use crate::numcore::tape::{Tape, Var};
use crate::numcore::tensor::Tensor;

/// Compare backward() gradients of a scalar-valued tensor function against
/// central finite differences and return the worst relative error.
///
/// The function must be composed only of tape operations and end in a
/// scalar. Relative error is |a-n| / max(|a|, |n|, 1e-8) per element.
pub fn grad_check<F>(f: F, inputs: &[Tensor], epsilon: f64) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    // Analytic gradients.
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|t| tape.leaf(t.clone(), true))
        .collect();
    let out = f(&mut tape, &vars)?;
    tape.backward(out)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .map(|&v| tape.grad(v).map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; tape.value(v).len()]))
        .collect();

    let eval = |inputs: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs
            .iter()
            .map(|t| tape.leaf(t.clone(), false))
            .collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).item())
    };

    let mut max_err: f64 = 0.0;
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (ti, input) in inputs.iter().enumerate() {
        for ei in 0..input.len() {
            let orig = input.data()[ei];
            work[ti].data_mut()[ei] = orig + epsilon;
            let plus = eval(&work)?;
            work[ti].data_mut()[ei] = orig - epsilon;
            let minus = eval(&work)?;
            work[ti].data_mut()[ei] = orig;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic[ti][ei];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            max_err = max_err.max(err);
        }
    }
    Ok(max_err)
}

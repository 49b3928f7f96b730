//! Unsupervised training loss: fidelity to the raw input plus L1 penalties on
//! second and third differences of the prediction. There is no first-order
//! term; the TV front end takes care of it.

use crate::convex::{DiffStencils, Lambdas};
use crate::error::{Error, Result};

/// Loss value and its gradient with respect to `y`. The subgradient of `|.|`
/// at 0 is taken as 0.
pub fn loss(y: &[f64], x: &[f64], lambdas: &Lambdas) -> Result<(f64, Vec<f64>)> {
    if y.len() != x.len() {
        return Err(Error::LengthMismatch {
            what: "prediction vs raw window",
            left: y.len(),
            right: x.len(),
        });
    }
    let mut grad: Vec<f64> = y
        .iter()
        .zip(x)
        .map(|(a, b)| 2.0 * lambdas.l0 * (a - b))
        .collect();
    let mut value = lambdas.l0 * y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    for (order, w) in [(2, lambdas.l2), (3, lambdas.l3)] {
        if w == 0.0 {
            continue;
        }
        let s = DiffStencils::of_order(order);
        for i in 0..y.len().saturating_sub(order) {
            let d: f64 = s.iter().zip(&y[i..]).map(|(c, v)| c * v).sum();
            value += w * d.abs();
            let sg = if d > 0.0 {
                w
            } else if d < 0.0 {
                -w
            } else {
                0.0
            };
            for (k, c) in s.iter().enumerate() {
                grad[i + k] += sg * c;
            }
        }
    }
    Ok((value, grad))
}

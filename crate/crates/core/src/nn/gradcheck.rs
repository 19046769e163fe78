use ndarray::ArrayView2;

use super::{
    backward, cross_entropy, forward, Gradients, LayerParams, Mode, NetworkParams,
};
use crate::{Error, Result};

/// Max relative error between `analytic` and central finite differences of
/// `loss` over every parameter in `layers`.
///
/// Relative error is `|a − n| / max(|a|, |n|, 1e-8)`. Each parameter is
/// restored bit-exactly after it is perturbed.
pub fn central_difference_check<F>(
    layers: &mut [LayerParams],
    analytic: &Gradients,
    eps: f64,
    mut loss: F,
) -> Result<f64>
where
    F: FnMut(&[LayerParams]) -> Result<f64>,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidEpsilon(eps));
    }
    if !analytic.matches(layers) {
        return Err(Error::Shape("gradients do not match parameter shapes".into()));
    }
    let mut worst = 0.0f64;
    let mut compare = |a: f64, n: f64| {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
        worst = worst.max(rel);
    };
    for l in 0..layers.len() {
        let (rows, cols) = layers[l].weights.dim();
        for r in 0..rows {
            for c in 0..cols {
                let orig = layers[l].weights[[r, c]];
                layers[l].weights[[r, c]] = orig + eps;
                let plus = loss(layers)?;
                layers[l].weights[[r, c]] = orig - eps;
                let minus = loss(layers)?;
                layers[l].weights[[r, c]] = orig;
                compare(analytic.layers[l].weights[[r, c]], (plus - minus) / (2.0 * eps));
            }
        }
        for r in 0..layers[l].bias.len() {
            let orig = layers[l].bias[r];
            layers[l].bias[r] = orig + eps;
            let plus = loss(layers)?;
            layers[l].bias[r] = orig - eps;
            let minus = loss(layers)?;
            layers[l].bias[r] = orig;
            compare(analytic.layers[l].bias[r], (plus - minus) / (2.0 * eps));
        }
    }
    Ok(worst)
}

/// Compares [`backward`] against central differences on one sample, with
/// dropout disabled on both sides.
pub fn grad_check(params: &NetworkParams, x: &[f64], label: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let trace = forward(params, x, Mode::Eval, 0.0, None)?;
    let analytic = backward(params, &trace, label)?;
    let xv = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::Shape(e.to_string()))?;
    let mut layers = params.layers().to_vec();
    central_difference_check(&mut layers, &analytic, eps, |layers| {
        let net = NetworkParams::new(layers.to_vec())?;
        let probs = net.predict_proba(xv)?;
        cross_entropy(probs.row(0), label)
    })
}

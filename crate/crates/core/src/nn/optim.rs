use ndarray::Zip;

use super::{Gradients, LayerParams, Optimizer};
use crate::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Optimizer state. Adam keeps first/second moments shape-matched to the
/// parameters it was created for.
#[derive(Clone, Debug)]
pub struct OptState {
    optimizer: Optimizer,
    step: u64,
    moments: Option<(Gradients, Gradients)>,
}

impl OptState {
    pub fn new(optimizer: Optimizer, layers: &[LayerParams]) -> Self {
        let moments = match optimizer {
            Optimizer::Sgd => None,
            Optimizer::Adam => Some((Gradients::zeros_like(layers), Gradients::zeros_like(layers))),
        };
        Self {
            optimizer,
            step: 0,
            moments,
        }
    }

    pub fn optimizer(&self) -> Optimizer {
        self.optimizer
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Applies one update in place. Non-finite gradients leave the parameters
/// and state untouched.
pub fn optimizer_step(
    layers: &mut [LayerParams],
    grads: &Gradients,
    state: &mut OptState,
    lr: f64,
) -> Result<()> {
    if !grads.matches(layers) {
        return Err(Error::Shape("gradients do not match parameter shapes".into()));
    }
    if !grads.is_finite() {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    match &mut state.moments {
        None => {
            for (p, g) in layers.iter_mut().zip(&grads.layers) {
                p.weights.scaled_add(-lr, &g.weights);
                p.bias.scaled_add(-lr, &g.bias);
            }
        }
        Some((m, v)) => {
            if !m.matches(layers) {
                return Err(Error::Shape("optimizer state does not match parameter shapes".into()));
            }
            let t = (state.step + 1) as i32;
            let c1 = 1.0 - ADAM_BETA1.powi(t);
            let c2 = 1.0 - ADAM_BETA2.powi(t);
            let update = |p: &mut f64, &g: &f64, m: &mut f64, v: &mut f64| {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            };
            for (((p, g), m), v) in layers
                .iter_mut()
                .zip(&grads.layers)
                .zip(m.layers.iter_mut())
                .zip(v.layers.iter_mut())
            {
                Zip::from(&mut p.weights)
                    .and(&g.weights)
                    .and(&mut m.weights)
                    .and(&mut v.weights)
                    .for_each(update);
                Zip::from(&mut p.bias)
                    .and(&g.bias)
                    .and(&mut m.bias)
                    .and(&mut v.bias)
                    .for_each(update);
            }
        }
    }
    state.step += 1;
    Ok(())
}

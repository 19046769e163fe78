//! Dense feedforward engine: sigmoid hidden layers, softmax output, inverted
//! dropout, cross-entropy loss and exact backpropagation.
//!
//! Everything operates on mini-batches stored row-wise (`batch × features`);
//! the single-vector entry points wrap a batch of one. Weights are stored as
//! `out_dim × in_dim` matrices so a layer computes `Z = X · Wᵀ + b`.

mod gradcheck;
mod optim;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use gradcheck::{central_difference_check, grad_check};
pub use optim::{optimizer_step, OptState};

/// Deterministic generator used for every stochastic step (init, dropout, shuffling).
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Probabilities are floored at this value before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Softmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Weights (`out_dim × in_dim`) and bias (`out_dim`) of one dense layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerParams {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        let (out_dim, in_dim) = weights.dim();
        if out_dim == 0 || in_dim == 0 {
            return Err(Error::InvalidArchitecture(format!(
                "layer dims must be >= 1, got {out_dim}x{in_dim}"
            )));
        }
        if bias.len() != out_dim {
            return Err(Error::Shape(format!(
                "bias length {} does not match out_dim {out_dim}",
                bias.len()
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("layer parameters must be finite".into()));
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weights: Array2::zeros((out_dim, in_dim)),
            bias: Array1::zeros(out_dim),
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (in + out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = Array2::from_shape_fn((out_dim, in_dim), |_| rng.gen_range(-limit..limit));
        Self {
            weights,
            bias: Array1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub(crate) fn affine(&self, input: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = input.dot(&self.weights.t());
        z += &self.bias;
        z
    }
}

/// An ordered stack of dense layers: sigmoid on every hidden layer, softmax
/// on the last.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    layers: Vec<LayerParams>,
    hidden_activation: Activation,
    output_activation: Activation,
}

impl NetworkParams {
    pub fn new(layers: Vec<LayerParams>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArchitecture("network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::InvalidArchitecture(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self {
            layers,
            hidden_activation: Activation::Sigmoid,
            output_activation: Activation::Softmax,
        })
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn into_layers(self) -> Vec<LayerParams> {
        self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn n_hidden(&self) -> usize {
        self.layers.len() - 1
    }

    /// Width of the hidden layers, or `None` for a network without any.
    pub fn hidden_width(&self) -> Option<usize> {
        (self.layers.len() > 1).then(|| self.layers[0].out_dim())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerParams::param_count).sum()
    }

    /// Splits into the hidden trunk and the output layer.
    pub fn split_head(mut self) -> (Vec<LayerParams>, LayerParams) {
        let head = self.layers.pop().expect("network has at least one layer");
        (self.layers, head)
    }

    /// Eval-mode class probabilities for a batch of rows.
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_input(x, self.input_dim())?;
        let mut act = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(act.view());
            if i == last {
                softmax_rows(&mut z);
            } else {
                z.mapv_inplace(sigmoid);
            }
            act = z;
        }
        Ok(act)
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(self.predict_proba(x)?.view()))
    }
}

/// Builds a Glorot-initialized network for `layer_dims = [input, hidden.., output]`.
pub fn init_network(layer_dims: &[usize], seed: u64) -> Result<NetworkParams> {
    if layer_dims.len() < 2 {
        return Err(Error::InvalidArchitecture(format!(
            "need at least input and output dims, got {layer_dims:?}"
        )));
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidArchitecture(format!(
            "all dims must be >= 1, got {layer_dims:?}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let layers = layer_dims
        .windows(2)
        .map(|w| LayerParams::glorot(w[0], w[1], &mut rng))
        .collect();
    NetworkParams::new(layers)
}

/// `[input, hidden × n_hidden, output]`
pub fn layer_dims(input: usize, hp: &Hyperparams, output: usize) -> Vec<usize> {
    let mut dims = Vec::with_capacity(hp.n_hidden_layers + 2);
    dims.push(input);
    dims.extend(std::iter::repeat(hp.hidden_width).take(hp.n_hidden_layers));
    dims.push(output);
    dims
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub n_hidden_layers: usize,
    pub hidden_width: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    /// Weight each sample's loss by the inverse frequency of its class.
    pub class_weighted_loss: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            n_hidden_layers: 4,
            hidden_width: 256,
            dropout_rate: 0.5,
            learning_rate: 0.0005,
            max_epochs: 600,
            batch_size: 32,
            optimizer: Optimizer::Adam,
            class_weighted_loss: false,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Hyperparams(msg));
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate {} not in [0, 1)", self.dropout_rate));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be > 0", self.learning_rate));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.hidden_width == 0 && self.n_hidden_layers > 0 {
            return bad("hidden_width must be >= 1".into());
        }
        Ok(())
    }
}

/// Caches from a forward pass, one row per sample.
///
/// `inputs[l]` is what layer `l` consumed (after dropout); `activations[l]` is
/// hidden layer `l`'s sigmoid output before dropout.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub inputs: Vec<Array2<f64>>,
    pub pre_activations: Vec<Array2<f64>>,
    pub activations: Vec<Array2<f64>>,
    pub dropout_masks: Vec<Array2<f64>>,
    pub output_probs: Array2<f64>,
}

impl ForwardTrace {
    pub fn batch_size(&self) -> usize {
        self.output_probs.nrows()
    }

    /// Output distribution of the first (or only) sample.
    pub fn probs(&self) -> ArrayView1<'_, f64> {
        self.output_probs.row(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Per-layer gradients, shape-matched to the layers they were computed for.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(layers: &[LayerParams]) -> Self {
        Self {
            layers: layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    /// All gradient entries, layer by layer (weights row-major, then bias).
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    pub fn matches(&self, layers: &[LayerParams]) -> bool {
        self.layers.len() == layers.len()
            && self.layers.iter().zip(layers).all(|(g, p)| {
                g.weights.raw_dim() == p.weights.raw_dim() && g.bias.len() == p.bias.len()
            })
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

pub fn argmax_rows(p: ArrayView2<'_, f64>) -> Vec<usize> {
    p.rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                .0
        })
        .collect()
}

pub(crate) fn check_input(x: ArrayView2<'_, f64>, expected: usize) -> Result<()> {
    if x.ncols() != expected {
        return Err(Error::Shape(format!(
            "input has {} features, network expects {expected}",
            x.ncols()
        )));
    }
    Ok(())
}

/// Inverted-dropout mask: each entry is `0` with probability `rate`, else `1 / (1 - rate)`.
pub(crate) fn dropout_mask(shape: (usize, usize), rate: f64, rng: &mut SeededRng) -> Array2<f64> {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    Array2::from_shape_fn(shape, |_| if rng.gen::<f64>() < keep { scale } else { 0.0 })
}

/// Dropout is active only in train mode with a positive rate; the generator
/// must be present exactly then.
pub(crate) fn dropout_active(
    mode: Mode,
    dropout_rate: f64,
    rng_present: bool,
) -> Result<bool> {
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::Hyperparams(format!("dropout_rate {dropout_rate} not in [0, 1)")));
    }
    let active = mode == Mode::Train && dropout_rate > 0.0;
    if active && !rng_present {
        return Err(Error::Hyperparams("train-mode dropout requires a generator".into()));
    }
    Ok(active)
}

/// Batched forward pass. Rows of `x` are samples.
pub fn forward_batch(
    params: &NetworkParams,
    x: ArrayView2<'_, f64>,
    mode: Mode,
    dropout_rate: f64,
    mut rng: Option<&mut SeededRng>,
) -> Result<ForwardTrace> {
    check_input(x, params.input_dim())?;
    let drop = dropout_active(mode, dropout_rate, rng.is_some())?;
    let n_layers = params.layers.len();
    let mut trace = ForwardTrace {
        inputs: Vec::with_capacity(n_layers),
        pre_activations: Vec::with_capacity(n_layers),
        activations: Vec::with_capacity(n_layers - 1),
        dropout_masks: Vec::with_capacity(n_layers - 1),
        output_probs: Array2::zeros((0, 0)),
    };
    let mut input = x.to_owned();
    for (i, layer) in params.layers.iter().enumerate() {
        let z = layer.affine(input.view());
        trace.inputs.push(input);
        if i + 1 == n_layers {
            let mut probs = z.clone();
            softmax_rows(&mut probs);
            trace.pre_activations.push(z);
            trace.output_probs = probs;
            break;
        }
        let h = z.mapv(sigmoid);
        let mask = match rng.as_deref_mut() {
            Some(r) if drop => dropout_mask(h.dim(), dropout_rate, r),
            _ => Array2::ones(h.dim()),
        };
        input = &h * &mask;
        trace.pre_activations.push(z);
        trace.activations.push(h);
        trace.dropout_masks.push(mask);
    }
    Ok(trace)
}

/// Single-sample forward pass.
pub fn forward(
    params: &NetworkParams,
    x: &[f64],
    mode: Mode,
    dropout_rate: f64,
    rng: Option<&mut SeededRng>,
) -> Result<ForwardTrace> {
    let x = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::Shape(e.to_string()))?;
    forward_batch(params, x, mode, dropout_rate, rng)
}

/// `-ln(max(probs[label], 1e-12))`
pub fn cross_entropy(probs: ArrayView1<'_, f64>, label: usize) -> Result<f64> {
    if label >= probs.len() {
        return Err(Error::Label {
            label,
            classes: probs.len(),
        });
    }
    Ok(-probs[label].max(PROB_FLOOR).ln())
}

/// Mean (optionally class-weighted) cross-entropy over a batch.
pub fn batch_loss(
    probs: ArrayView2<'_, f64>,
    labels: &[usize],
    class_weights: Option<&[f64]>,
) -> Result<f64> {
    if probs.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} probability rows for {} labels",
            probs.nrows(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    for (row, &label) in probs.rows().into_iter().zip(labels) {
        let w = class_weights.map_or(1.0, |w| w[label]);
        total += w * cross_entropy(row, label)?;
    }
    Ok(total / labels.len() as f64)
}

/// Gradient of the mean loss w.r.t. the output pre-activations: `(P − onehot(y)) · w / B`.
pub(crate) fn output_delta(
    probs: &Array2<f64>,
    labels: &[usize],
    class_weights: Option<&[f64]>,
) -> Result<Array2<f64>> {
    let (batch, classes) = probs.dim();
    if labels.len() != batch {
        return Err(Error::Shape(format!("{batch} trace rows for {} labels", labels.len())));
    }
    let mut delta = probs.clone();
    let inv_b = 1.0 / batch as f64;
    for (mut row, &label) in delta.rows_mut().into_iter().zip(labels) {
        if label >= classes {
            return Err(Error::Label { label, classes });
        }
        row[label] -= 1.0;
        let w = class_weights.map_or(1.0, |w| w[label]);
        row *= w * inv_b;
    }
    Ok(delta)
}

/// Backpropagates `delta` (gradient at the output pre-activation) through a
/// stack of layers whose inputs may carry extra lateral columns after the
/// layer's own predecessor block. Only the own block is propagated further.
pub(crate) fn backprop_layers(
    layers: &[LayerParams],
    inputs: &[Array2<f64>],
    activations: &[Array2<f64>],
    masks: &[Array2<f64>],
    mut delta: Array2<f64>,
) -> Gradients {
    let mut grads: Vec<LayerGrad> = Vec::with_capacity(layers.len());
    for l in (0..layers.len()).rev() {
        let weights = delta.t().dot(&inputs[l]);
        let bias = delta.sum_axis(Axis(0));
        grads.push(LayerGrad { weights, bias });
        if l == 0 {
            break;
        }
        let h = &activations[l - 1];
        let own = h.ncols();
        let mut g = delta.dot(&layers[l].weights.slice(s![.., ..own]));
        Zip::from(&mut g)
            .and(&masks[l - 1])
            .and(h)
            .for_each(|g, &m, &a| *g *= m * a * (1.0 - a));
        delta = g;
    }
    grads.reverse();
    Gradients { layers: grads }
}

fn check_trace(layers: &[LayerParams], trace: &ForwardTrace) -> Result<()> {
    let hidden = layers.len() - 1;
    let ok = trace.inputs.len() == layers.len()
        && trace.activations.len() == hidden
        && trace.dropout_masks.len() == hidden
        && trace
            .inputs
            .iter()
            .zip(layers)
            .all(|(x, l)| x.ncols() == l.in_dim())
        && trace.output_probs.ncols() == layers[hidden].out_dim();
    if ok {
        Ok(())
    } else {
        Err(Error::Shape("trace does not match network parameters".into()))
    }
}

/// Gradients of the mean batch loss for a trace produced by [`forward_batch`].
pub fn backward_batch(
    params: &NetworkParams,
    trace: &ForwardTrace,
    labels: &[usize],
    class_weights: Option<&[f64]>,
) -> Result<Gradients> {
    check_trace(&params.layers, trace)?;
    let delta = output_delta(&trace.output_probs, labels, class_weights)?;
    Ok(backprop_layers(
        &params.layers,
        &trace.inputs,
        &trace.activations,
        &trace.dropout_masks,
        delta,
    ))
}

/// Exact gradient of `cross_entropy ∘ forward` for a single-sample trace,
/// holding its dropout masks fixed.
pub fn backward(params: &NetworkParams, trace: &ForwardTrace, label: usize) -> Result<Gradients> {
    backward_batch(params, trace, &[label], None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn baseline_parameter_count() {
        let net = init_network(&[88, 256, 256, 256, 256, 4], 0).unwrap();
        // (88+1)·256 + 3·(256+1)·256 + (256+1)·4
        assert_eq!(89 * 256 + 3 * 257 * 256 + 257 * 4, 221_188);
        assert_eq!(net.param_count(), 221_188);
    }

    #[test]
    fn init_is_deterministic_and_rejects_degenerate_dims() {
        let a = init_network(&[2, 2], 7).unwrap();
        let b = init_network(&[2, 2], 7).unwrap();
        assert_eq!(a, b);
        assert!(matches!(init_network(&[3], 1), Err(Error::InvalidArchitecture(_))));
        assert!(matches!(init_network(&[], 1), Err(Error::InvalidArchitecture(_))));
        assert!(matches!(init_network(&[3, 0, 2], 1), Err(Error::InvalidArchitecture(_))));
    }

    #[test]
    fn glorot_range_and_zero_bias() {
        let net = init_network(&[10, 6, 3], 3).unwrap();
        for layer in net.layers() {
            let limit = (6.0 / (layer.in_dim() + layer.out_dim()) as f64).sqrt();
            assert!(layer.weights.iter().all(|w| w.abs() <= limit));
            assert!(layer.bias.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn zero_network_outputs_uniform() {
        let net = NetworkParams::new(vec![LayerParams::zeros(5, 3), LayerParams::zeros(3, 4)]).unwrap();
        let trace = forward(&net, &[1.0, -2.0, 3.0, 0.5, 9.0], Mode::Eval, 0.5, None).unwrap();
        for &p in trace.probs() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert_eq!(trace.activations[0][[0, 0]], 0.5);
    }

    #[test]
    fn eval_mode_is_deterministic_with_unit_masks() {
        let net = init_network(&[4, 6, 6, 3], 11).unwrap();
        let x = [0.3, -1.0, 2.0, 0.1];
        let a = forward(&net, &x, Mode::Eval, 0.5, None).unwrap();
        let b = forward(&net, &x, Mode::Eval, 0.5, None).unwrap();
        assert!(a.dropout_masks.iter().all(|m| m.iter().all(|&v| v == 1.0)));
        assert_eq!(a.output_probs, b.output_probs);
    }

    #[test]
    fn train_mode_masks_take_two_values() {
        let net = init_network(&[4, 50, 3], 11).unwrap();
        let mut rng = seeded_rng(5);
        let t = forward(&net, &[1.0, 2.0, 3.0, 4.0], Mode::Train, 0.5, Some(&mut rng)).unwrap();
        assert!(t.dropout_masks[0].iter().all(|&m| m == 0.0 || m == 2.0));
        assert!(forward(&net, &[1.0; 4], Mode::Train, 0.5, None).is_err());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = init_network(&[4, 3], 0).unwrap();
        assert!(matches!(forward(&net, &[1.0; 5], Mode::Eval, 0.0, None), Err(Error::Shape(_))));
    }

    #[test]
    fn cross_entropy_values() {
        let u = array![0.25, 0.25, 0.25, 0.25];
        assert!((cross_entropy(u.view(), 3).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert_eq!(cross_entropy(array![0.0, 1.0, 0.0, 0.0].view(), 1).unwrap(), 0.0);
        let p = array![0.5, 0.25, 0.125, 0.125];
        assert!((cross_entropy(p.view(), 2).unwrap() - 2.079_441_541_679_836).abs() < 1e-12);
        assert!(matches!(cross_entropy(p.view(), 4), Err(Error::Label { .. })));
        let floored = cross_entropy(array![1.0, 0.0].view(), 1).unwrap();
        assert!((floored - 1e12f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn output_gradient_is_probs_minus_onehot() {
        let net = init_network(&[3, 4], 2).unwrap();
        let x = [0.5, -0.2, 1.5];
        let trace = forward(&net, &x, Mode::Eval, 0.0, None).unwrap();
        let g = backward(&net, &trace, 1).unwrap();
        for c in 0..4 {
            let expected = trace.probs()[c] - if c == 1 { 1.0 } else { 0.0 };
            assert!((g.layers[0].bias[c] - expected).abs() < 1e-15);
            for j in 0..3 {
                assert!((g.layers[0].weights[[c, j]] - expected * x[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_input_zero_weights_gives_zero_first_layer_weight_grad() {
        let net = NetworkParams::new(vec![
            LayerParams::zeros(3, 4),
            LayerParams::zeros(4, 4),
            LayerParams::zeros(4, 2),
        ])
        .unwrap();
        let trace = forward(&net, &[0.0; 3], Mode::Eval, 0.0, None).unwrap();
        let g = backward(&net, &trace, 0).unwrap();
        assert!(g.layers[0].weights.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_rejects_foreign_trace() {
        let a = init_network(&[3, 4, 2], 1).unwrap();
        let b = init_network(&[3, 5, 2], 1).unwrap();
        let trace = forward(&a, &[0.0; 3], Mode::Eval, 0.0, None).unwrap();
        assert!(matches!(backward(&b, &trace, 0), Err(Error::Shape(_))));
    }

    #[test]
    fn hyperparams_validation() {
        assert!(Hyperparams::default().validate().is_ok());
        let mut hp = Hyperparams::default();
        hp.dropout_rate = 1.0;
        assert!(hp.validate().is_err());
        hp = Hyperparams { learning_rate: 0.0, ..Default::default() };
        assert!(hp.validate().is_err());
        hp = Hyperparams { max_epochs: 0, ..Default::default() };
        assert!(hp.validate().is_err());
        hp = Hyperparams { batch_size: 0, ..Default::default() };
        assert!(hp.validate().is_err());
    }
}

//! Progressive networks: frozen source columns plus one trainable target
//! column. Frozen layer-`k` activations are concatenated onto the target's own
//! layer-`k` activations as the input of target layer `k + 1`; the lateral
//! weights are simply the extra input columns of the target's weight matrices.

mod model_io;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::nn::{
    self, check_input, dropout_active, dropout_mask, output_delta, seeded_rng, softmax_rows,
    ForwardTrace, Gradients, LayerParams, Mode, NetworkParams, SeededRng,
};
use crate::{Error, Result};

pub use model_io::{decode_model, encode_column, encode_model, load_model, save_model, MODEL_MAGIC, MODEL_VERSION};

/// Wiring options for newly added columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Wiring {
    /// Feed the frozen columns' last hidden layer into the target output layer.
    pub output_lateral: bool,
    /// Apply the target's dropout to incoming frozen activations as well.
    pub dropout_on_laterals: bool,
}

impl Default for Wiring {
    fn default() -> Self {
        Self {
            output_lateral: true,
            dropout_on_laterals: false,
        }
    }
}

/// One complete network inside a progressive model.
#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    layers: Vec<LayerParams>,
    frozen: bool,
    task_name: String,
    /// Number of earlier columns feeding this one laterally.
    lateral_sources: usize,
    output_lateral: bool,
}

impl Column {
    pub fn from_network(net: NetworkParams, task_name: impl Into<String>) -> Self {
        Self {
            layers: net.into_layers(),
            frozen: false,
            task_name: task_name.into(),
            lateral_sources: 0,
            output_lateral: false,
        }
    }

    pub(crate) fn from_parts(
        layers: Vec<LayerParams>,
        frozen: bool,
        task_name: String,
        lateral_sources: usize,
        output_lateral: bool,
    ) -> Result<Self> {
        let col = Self {
            layers,
            frozen,
            task_name,
            lateral_sources,
            output_lateral,
        };
        col.check_wiring()?;
        Ok(col)
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn task_name(&self) -> &str {
        &self.task_name
    }

    pub fn lateral_sources(&self) -> usize {
        self.lateral_sources
    }

    pub fn output_lateral(&self) -> bool {
        self.output_lateral
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

    pub fn hidden_width(&self) -> usize {
        self.layers[0].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerParams::param_count).sum()
    }

    /// The column as a plain network; only possible without lateral inputs.
    pub fn to_network(&self) -> Option<NetworkParams> {
        (self.lateral_sources == 0)
            .then(|| NetworkParams::new(self.layers.clone()).ok())
            .flatten()
    }

    fn expected_in_dim(&self, layer: usize, input_dim: usize) -> usize {
        let h = self.hidden_width();
        let last = self.layers.len() - 1;
        match layer {
            0 => input_dim,
            l if l == last && !self.output_lateral => h,
            _ => h * (1 + self.lateral_sources),
        }
    }

    fn check_wiring(&self) -> Result<()> {
        if self.layers.len() < 2 && self.lateral_sources > 0 {
            return Err(Error::Wiring("lateral columns need at least one hidden layer".into()));
        }
        if self.layers.is_empty() {
            return Err(Error::Wiring("column has no layers".into()));
        }
        let h = self.hidden_width();
        let input_dim = self.input_dim();
        for (l, layer) in self.layers.iter().enumerate() {
            if l + 1 < self.layers.len() && layer.out_dim() != h {
                return Err(Error::Wiring(format!(
                    "hidden layer {l} has width {}, expected {h}",
                    layer.out_dim()
                )));
            }
            let expected = self.expected_in_dim(l, input_dim);
            if layer.in_dim() != expected {
                return Err(Error::Wiring(format!(
                    "layer {l} takes {} inputs, wiring requires {expected}",
                    layer.in_dim()
                )));
            }
        }
        Ok(())
    }
}

/// Shape of a new column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ColumnSpec {
    pub n_hidden: usize,
    pub hidden_width: usize,
    pub output_dim: usize,
}

/// Ordered columns; all but the last are frozen.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgNetModel {
    columns: Vec<Column>,
    dropout_on_laterals: bool,
}

/// Caches from [`prog_forward`].
#[derive(Clone, Debug)]
pub struct ProgTrace {
    /// Hidden activations of each frozen column, per layer.
    pub frozen_hidden: Vec<Vec<Array2<f64>>>,
    pub target: ForwardTrace,
}

impl ProgNetModel {
    /// A single trainable column.
    pub fn single(column: Column) -> Result<Self> {
        Self::from_columns(vec![column], false)
    }

    pub fn from_columns(mut columns: Vec<Column>, dropout_on_laterals: bool) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::Wiring("model needs at least one column".into()));
        };
        let (n_hidden, width, input) = (first.n_hidden(), first.hidden_width(), first.input_dim());
        let last = columns.len() - 1;
        for (i, col) in columns.iter_mut().enumerate() {
            if col.n_hidden() != n_hidden || col.hidden_width() != width || col.input_dim() != input {
                return Err(Error::Wiring(format!(
                    "column {i} is {}x{} over {} inputs, column 0 is {n_hidden}x{width} over {input}",
                    col.n_hidden(),
                    col.hidden_width(),
                    col.input_dim()
                )));
            }
            if col.lateral_sources != i {
                return Err(Error::Wiring(format!(
                    "column {i} expects {} lateral sources",
                    col.lateral_sources
                )));
            }
            col.check_wiring()?;
            col.frozen = i != last;
        }
        Ok(Self {
            columns,
            dropout_on_laterals,
        })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn target(&self) -> &Column {
        &self.columns[self.columns.len() - 1]
    }

    pub(crate) fn target_layers_mut(&mut self) -> &mut [LayerParams] {
        let last = self.columns.len() - 1;
        &mut self.columns[last].layers
    }

    pub fn frozen_columns(&self) -> &[Column] {
        &self.columns[..self.columns.len() - 1]
    }

    pub fn dropout_on_laterals(&self) -> bool {
        self.dropout_on_laterals
    }

    pub fn input_dim(&self) -> usize {
        self.columns[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.target().output_dim()
    }

    pub fn trainable_param_count(&self) -> usize {
        self.target().param_count()
    }

    /// Eval-mode hidden activations of columns `0..upto`, per column, per layer.
    fn hidden_of_columns(&self, x: ArrayView2<'_, f64>, upto: usize) -> Result<Vec<Vec<Array2<f64>>>> {
        let mut hidden: Vec<Vec<Array2<f64>>> = Vec::with_capacity(upto);
        for c in 0..upto {
            let laterals = lateral_blocks(&hidden, self.columns[c].n_hidden());
            let trace = column_forward(&self.columns[c], x, &laterals, Mode::Eval, 0.0, None, false)?;
            hidden.push(trace.activations);
        }
        Ok(hidden)
    }

    /// Concatenated frozen activations per hidden layer, the lateral input
    /// of the target column. Cacheable: it does not depend on the target.
    pub fn lateral_inputs(&self, x: ArrayView2<'_, f64>) -> Result<Vec<Array2<f64>>> {
        check_input(x, self.input_dim())?;
        let hidden = self.hidden_of_columns(x, self.columns.len() - 1)?;
        Ok(lateral_blocks(&hidden, self.target().n_hidden()))
    }

    /// Target-column forward pass given precomputed [`Self::lateral_inputs`].
    pub fn target_forward(
        &self,
        x: ArrayView2<'_, f64>,
        laterals: &[Array2<f64>],
        mode: Mode,
        dropout_rate: f64,
        rng: Option<&mut SeededRng>,
    ) -> Result<ForwardTrace> {
        column_forward(self.target(), x, laterals, mode, dropout_rate, rng, self.dropout_on_laterals)
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let laterals = self.lateral_inputs(x)?;
        Ok(self.target_forward(x, &laterals, Mode::Eval, 0.0, None)?.output_probs)
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(nn::argmax_rows(self.predict_proba(x)?.view()))
    }
}

/// `blocks[l]` = columns' layer-`l` activations side by side (width 0 when
/// there are no columns).
fn lateral_blocks(hidden: &[Vec<Array2<f64>>], n_hidden: usize) -> Vec<Array2<f64>> {
    (0..n_hidden)
        .map(|l| {
            let views: Vec<ArrayView2<'_, f64>> = hidden.iter().map(|h| h[l].view()).collect();
            if views.is_empty() {
                Array2::zeros((0, 0))
            } else {
                concatenate(Axis(1), &views).expect("columns share batch size")
            }
        })
        .collect()
}

fn with_laterals(own: Array2<f64>, lateral: &Array2<f64>) -> Array2<f64> {
    if lateral.ncols() == 0 {
        own
    } else {
        concatenate(Axis(1), &[own.view(), lateral.view()]).expect("matching batch size")
    }
}

/// Forward pass of one column whose layer `l + 1` also consumes `laterals[l]`.
fn column_forward(
    col: &Column,
    x: ArrayView2<'_, f64>,
    laterals: &[Array2<f64>],
    mode: Mode,
    dropout_rate: f64,
    mut rng: Option<&mut SeededRng>,
    dropout_on_laterals: bool,
) -> Result<ForwardTrace> {
    check_input(x, col.input_dim())?;
    let drop = dropout_active(mode, dropout_rate, rng.is_some())?;
    let n_layers = col.layers.len();
    let uses_laterals = col.lateral_sources > 0;
    if uses_laterals && laterals.len() != n_layers - 1 {
        return Err(Error::Shape(format!(
            "{} lateral blocks for {} hidden layers",
            laterals.len(),
            n_layers - 1
        )));
    }
    let mut trace = ForwardTrace {
        inputs: Vec::with_capacity(n_layers),
        pre_activations: Vec::with_capacity(n_layers),
        activations: Vec::with_capacity(n_layers - 1),
        dropout_masks: Vec::with_capacity(n_layers - 1),
        output_probs: Array2::zeros((0, 0)),
    };
    let mut input = x.to_owned();
    for (l, layer) in col.layers.iter().enumerate() {
        if input.ncols() != layer.in_dim() || input.nrows() != x.nrows() {
            return Err(Error::Shape(format!(
                "layer {l} expects {} inputs, got {}",
                layer.in_dim(),
                input.ncols()
            )));
        }
        let z = layer.affine(input.view());
        trace.inputs.push(input);
        if l + 1 == n_layers {
            let mut probs = z.clone();
            softmax_rows(&mut probs);
            trace.pre_activations.push(z);
            trace.output_probs = probs;
            break;
        }
        let h = z.mapv(nn::sigmoid);
        let mask = match rng.as_deref_mut() {
            Some(r) if drop => dropout_mask(h.dim(), dropout_rate, r),
            _ => Array2::ones(h.dim()),
        };
        let own = &h * &mask;
        let next_is_output = l + 2 == n_layers;
        input = if uses_laterals && (!next_is_output || col.output_lateral) {
            let lat = &laterals[l];
            match rng.as_deref_mut() {
                Some(r) if drop && dropout_on_laterals => {
                    let lat_mask = dropout_mask(lat.dim(), dropout_rate, r);
                    with_laterals(own, &(lat * &lat_mask))
                }
                _ => with_laterals(own, lat),
            }
        } else {
            own
        };
        trace.pre_activations.push(z);
        trace.activations.push(h);
        trace.dropout_masks.push(mask);
    }
    Ok(trace)
}

/// Freezes every existing column and appends a Glorot-initialized target
/// column wired to all of them.
pub fn add_column(
    model: ProgNetModel,
    spec: ColumnSpec,
    task_name: impl Into<String>,
    seed: u64,
    wiring: Wiring,
) -> Result<ProgNetModel> {
    if spec.output_dim < 2 {
        return Err(Error::Wiring(format!("output_dim {} must be >= 2", spec.output_dim)));
    }
    let reference = &model.columns[0];
    if spec.n_hidden != reference.n_hidden() || spec.hidden_width != reference.hidden_width() {
        return Err(Error::Wiring(format!(
            "new column is {}x{}, existing columns are {}x{}",
            spec.n_hidden,
            spec.hidden_width,
            reference.n_hidden(),
            reference.hidden_width()
        )));
    }
    if spec.n_hidden == 0 {
        return Err(Error::Wiring("progressive columns need at least one hidden layer".into()));
    }
    let lateral_sources = model.columns.len();
    let input_dim = reference.input_dim();
    let h = spec.hidden_width;
    let wide = h * (1 + lateral_sources);
    let mut rng = seeded_rng(seed);
    let mut layers = Vec::with_capacity(spec.n_hidden + 1);
    layers.push(LayerParams::glorot(input_dim, h, &mut rng));
    for _ in 1..spec.n_hidden {
        layers.push(LayerParams::glorot(wide, h, &mut rng));
    }
    let out_in = if wiring.output_lateral { wide } else { h };
    layers.push(LayerParams::glorot(out_in, spec.output_dim, &mut rng));
    let column = Column::from_parts(layers, false, task_name.into(), lateral_sources, wiring.output_lateral)?;
    let mut columns = model.columns;
    columns.push(column);
    ProgNetModel::from_columns(columns, wiring.dropout_on_laterals)
}

/// Closed-form trainable parameter count of a target column with `frozen`
/// lateral sources.
pub fn target_param_count(input: usize, n_hidden: usize, width: usize, frozen: usize, output: usize) -> usize {
    let wide = width * (1 + frozen);
    input * width + width + n_hidden.saturating_sub(1) * (wide * width + width) + wide * output + output
}

/// Forward pass through every column. Frozen columns always run in eval mode.
pub fn prog_forward(
    model: &ProgNetModel,
    x: ArrayView2<'_, f64>,
    mode: Mode,
    dropout_rate: f64,
    rng: Option<&mut SeededRng>,
) -> Result<ProgTrace> {
    check_input(x, model.input_dim())?;
    let frozen_hidden = model.hidden_of_columns(x, model.columns.len() - 1)?;
    let laterals = lateral_blocks(&frozen_hidden, model.target().n_hidden());
    let target = model.target_forward(x, &laterals, mode, dropout_rate, rng)?;
    Ok(ProgTrace { frozen_hidden, target })
}

/// Gradients of the mean batch loss w.r.t. the target column only.
pub fn prog_backward(
    model: &ProgNetModel,
    trace: &ForwardTrace,
    labels: &[usize],
    class_weights: Option<&[f64]>,
) -> Result<Gradients> {
    let layers = &model.target().layers;
    let ok = trace.inputs.len() == layers.len()
        && trace.activations.len() + 1 == layers.len()
        && trace.inputs.iter().zip(layers).all(|(x, l)| x.ncols() == l.in_dim())
        && trace.output_probs.ncols() == model.output_dim();
    if !ok {
        return Err(Error::Shape("trace does not match the target column".into()));
    }
    let delta = output_delta(&trace.output_probs, labels, class_weights)?;
    Ok(nn::backprop_layers(
        layers,
        &trace.inputs,
        &trace.activations,
        &trace.dropout_masks,
        delta,
    ))
}

/// Eval-mode softmax output of one column (with its own lateral inputs).
pub fn source_task_output(model: &ProgNetModel, column_index: usize, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if column_index >= model.columns.len() {
        return Err(Error::ColumnIndex {
            index: column_index,
            columns: model.columns.len(),
        });
    }
    check_input(x, model.input_dim())?;
    let hidden = model.hidden_of_columns(x, column_index)?;
    let col = &model.columns[column_index];
    let laterals = lateral_blocks(&hidden, col.n_hidden());
    Ok(column_forward(col, x, &laterals, Mode::Eval, 0.0, None, false)?.output_probs)
}

/// Central-difference check of [`prog_backward`] over the target column.
pub fn prog_grad_check(model: &ProgNetModel, x: &[f64], label: usize, eps: f64) -> Result<f64> {
    let xv = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::Shape(e.to_string()))?;
    let laterals = model.lateral_inputs(xv)?;
    let trace = model.target_forward(xv, &laterals, Mode::Eval, 0.0, None)?;
    let analytic = prog_backward(model, &trace, &[label], None)?;
    let mut probe = model.clone();
    let mut layers = probe.target().layers.clone();
    nn::central_difference_check(&mut layers, &analytic, eps, |layers| {
        probe.target_layers_mut().clone_from_slice(layers);
        let t = probe.target_forward(xv, &laterals, Mode::Eval, 0.0, None)?;
        nn::cross_entropy(t.output_probs.row(0), label)
    })
}

/// Zeroes every lateral sub-block of the target column's weights.
pub fn zero_laterals(model: &mut ProgNetModel) {
    let h = model.target().hidden_width();
    for layer in model.target_layers_mut().iter_mut().skip(1) {
        if layer.in_dim() > h {
            layer.weights.slice_mut(s![.., h..]).fill(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_network;
    use rand::Rng;

    fn two_column(seed: u64, dims: &[usize], out: usize) -> ProgNetModel {
        let base = Column::from_network(init_network(dims, seed).unwrap(), "source");
        let spec = ColumnSpec {
            n_hidden: dims.len() - 2,
            hidden_width: dims[1],
            output_dim: out,
        };
        add_column(ProgNetModel::single(base).unwrap(), spec, "target", seed + 1, Wiring::default()).unwrap()
    }

    #[test]
    fn second_column_parameter_count() {
        let model = two_column(0, &[88, 256, 256, 256, 256, 10], 4);
        assert_eq!(89 * 256 + 3 * 513 * 256 + 513 * 4, 418_820);
        assert_eq!(model.trainable_param_count(), 418_820);
        assert_eq!(target_param_count(88, 4, 256, 1, 4), 418_820);
        assert!(model.columns()[0].is_frozen());
        assert!(!model.target().is_frozen());
    }

    #[test]
    fn closed_form_count_matches_construction() {
        for n in [2usize, 4, 10, 12] {
            let net = init_network(&[88, 256, 256, 256, 256, n], 1).unwrap();
            let mut model = ProgNetModel::single(Column::from_network(net, "c0")).unwrap();
            assert_eq!(model.trainable_param_count(), target_param_count(88, 4, 256, 0, n));
            for frozen in 1..=2usize {
                let spec = ColumnSpec {
                    n_hidden: 4,
                    hidden_width: 256,
                    output_dim: n,
                };
                model = add_column(model, spec, "c", frozen as u64, Wiring::default()).unwrap();
                assert_eq!(model.trainable_param_count(), target_param_count(88, 4, 256, frozen, n));
            }
        }
    }

    #[test]
    fn mismatched_width_is_a_wiring_error() {
        let base = Column::from_network(init_network(&[8, 256, 256, 3], 0).unwrap(), "s");
        let spec = ColumnSpec {
            n_hidden: 2,
            hidden_width: 128,
            output_dim: 4,
        };
        let r = add_column(ProgNetModel::single(base).unwrap(), spec, "t", 0, Wiring::default());
        assert!(matches!(r, Err(Error::Wiring(_))));
        let spec = ColumnSpec {
            n_hidden: 2,
            hidden_width: 256,
            output_dim: 1,
        };
        let base = Column::from_network(init_network(&[8, 256, 256, 3], 0).unwrap(), "s");
        assert!(add_column(ProgNetModel::single(base).unwrap(), spec, "t", 0, Wiring::default()).is_err());
    }

    #[test]
    fn add_column_preserves_frozen_weights() {
        let net = init_network(&[6, 5, 5, 3], 4).unwrap();
        let model = two_column(4, &[6, 5, 5, 3], 2);
        assert_eq!(model.columns()[0].layers(), net.layers());
    }

    #[test]
    fn zero_target_gives_uniform_output() {
        let mut model = two_column(2, &[6, 5, 5, 3], 4);
        for layer in model.target_layers_mut() {
            layer.weights.fill(0.0);
        }
        let x = Array2::from_shape_fn((3, 6), |(i, j)| (i * 6 + j) as f64 * 0.1);
        let p = model.predict_proba(x.view()).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn frozen_output_matches_standalone() {
        let net = init_network(&[6, 5, 5, 3], 8).unwrap();
        let model = two_column(8, &[6, 5, 5, 3], 4);
        let x = Array2::from_shape_fn((4, 6), |(i, j)| ((i + 2 * j) as f64).sin());
        assert_eq!(source_task_output(&model, 0, x.view()).unwrap(), net.predict_proba(x.view()).unwrap());
        assert_eq!(source_task_output(&model, 1, x.view()).unwrap(), model.predict_proba(x.view()).unwrap());
        assert!(matches!(source_task_output(&model, 2, x.view()), Err(Error::ColumnIndex { .. })));
    }

    #[test]
    fn zeroed_laterals_equal_standalone_dnn() {
        let mut model = two_column(3, &[7, 6, 6, 6, 3], 4);
        zero_laterals(&mut model);
        let h = 6;
        let own: Vec<LayerParams> = model
            .target()
            .layers()
            .iter()
            .enumerate()
            .map(|(l, layer)| {
                if l == 0 {
                    layer.clone()
                } else {
                    LayerParams::new(layer.weights.slice(s![.., ..h]).to_owned(), layer.bias.clone()).unwrap()
                }
            })
            .collect();
        let standalone = NetworkParams::new(own).unwrap();
        let mut rng = seeded_rng(1);
        let x = Array2::from_shape_fn((1000, 7), |_| rng.gen_range(-3.0..3.0));
        let a = model.predict_proba(x.view()).unwrap();
        let b = standalone.predict_proba(x.view()).unwrap();
        let max = (&a - &b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-12, "{max}");
    }

    #[test]
    fn lateral_gradient_vanishes_for_zero_frozen_activation() {
        // A frozen column with huge negative biases saturates its sigmoids to 0.
        let mut net = init_network(&[4, 3, 3, 2], 0).unwrap();
        for layer in net.layers_mut() {
            layer.bias.fill(-800.0);
        }
        let spec = ColumnSpec {
            n_hidden: 2,
            hidden_width: 3,
            output_dim: 2,
        };
        let model = add_column(
            ProgNetModel::single(Column::from_network(net, "s")).unwrap(),
            spec,
            "t",
            1,
            Wiring::default(),
        )
        .unwrap();
        let x = Array2::from_shape_vec((1, 4), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let trace = prog_forward(&model, x.view(), Mode::Eval, 0.0, None).unwrap();
        assert!(trace.frozen_hidden[0].iter().all(|h| h.iter().all(|&v| v == 0.0)));
        let g = prog_backward(&model, &trace.target, &[1], None).unwrap();
        for layer in &g.layers[1..] {
            assert!(layer.weights.slice(s![.., 3..]).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn prog_gradients_match_finite_differences() {
        let mut rng = seeded_rng(12);
        for seed in 0..5 {
            let model = two_column(seed, &[5, 4, 4, 3], 3);
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let err = prog_grad_check(&model, &x, (seed % 3) as usize, 1e-5).unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn eval_forward_is_deterministic_and_train_mode_needs_rng() {
        let model = two_column(5, &[5, 4, 4, 3], 3);
        let x = Array2::from_elem((2, 5), 0.3);
        let a = prog_forward(&model, x.view(), Mode::Eval, 0.5, None).unwrap();
        let b = prog_forward(&model, x.view(), Mode::Eval, 0.5, None).unwrap();
        assert_eq!(a.target.output_probs, b.target.output_probs);
        assert!(prog_forward(&model, x.view(), Mode::Train, 0.5, None).is_err());
        let mut rng = seeded_rng(0);
        let t = prog_forward(&model, x.view(), Mode::Train, 0.5, Some(&mut rng)).unwrap();
        // Frozen activations stay dropout-free in train mode.
        assert_eq!(t.frozen_hidden, a.frozen_hidden);
    }

    #[test]
    fn three_columns_chain_laterals() {
        let m2 = two_column(1, &[5, 4, 4, 3], 3);
        let spec = ColumnSpec {
            n_hidden: 2,
            hidden_width: 4,
            output_dim: 2,
        };
        let m3 = add_column(m2.clone(), spec, "third", 9, Wiring::default()).unwrap();
        assert_eq!(m3.columns().len(), 3);
        assert!(m3.columns()[1].is_frozen());
        assert_eq!(m3.target().layers()[1].in_dim(), 12);
        let x = Array2::from_elem((1, 5), -0.2);
        assert_eq!(
            source_task_output(&m3, 1, x.view()).unwrap(),
            m2.predict_proba(x.view()).unwrap()
        );
        let err = prog_grad_check(&m3, &[0.1, 0.5, -0.3, 0.9, 0.0], 1, 1e-5).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn output_lateral_can_be_disabled() {
        let base = Column::from_network(init_network(&[5, 4, 4, 3], 0).unwrap(), "s");
        let spec = ColumnSpec {
            n_hidden: 2,
            hidden_width: 4,
            output_dim: 2,
        };
        let wiring = Wiring {
            output_lateral: false,
            dropout_on_laterals: true,
        };
        let m = add_column(ProgNetModel::single(base).unwrap(), spec, "t", 0, wiring).unwrap();
        assert_eq!(m.target().layers()[2].in_dim(), 4);
        assert_eq!(m.target().layers()[1].in_dim(), 8);
        let err = prog_grad_check(&m, &[0.3, -0.1, 0.2, 0.0, 1.0], 0, 1e-5).unwrap();
        assert!(err < 1e-4);
        let mut rng = seeded_rng(3);
        let x = Array2::from_elem((2, 5), 0.5);
        let t = prog_forward(&m, x.view(), Mode::Train, 0.5, Some(&mut rng)).unwrap();
        let g = prog_backward(&m, &t.target, &[0, 1], None).unwrap();
        assert!(g.is_finite());
    }
}

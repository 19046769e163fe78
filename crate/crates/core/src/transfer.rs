//! The three training strategies (baseline DNN, pre-train/fine-tune and
//! progressive transfer) on top of one shared mini-batch epoch loop that
//! checkpoints the best-validation-UAR epoch.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{LabelVocab, NormStats, TaskData, TaskLabel};
use crate::eval::uar_from_labels;
use crate::nn::{
    self, argmax_rows, batch_loss, init_network, layer_dims, optimizer_step, seeded_rng, ForwardTrace,
    Gradients, Hyperparams, LayerParams, Mode, NetworkParams, OptState, SeededRng,
};
use crate::prognet::{self, add_column, Column, ColumnSpec, ProgNetModel, Wiring};
use crate::seed::derive_tagged;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Baseline,
    Ptft,
    Prognet,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::Baseline, StrategyKind::Ptft, StrategyKind::Prognet];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Baseline => "baseline",
            StrategyKind::Ptft => "ptft",
            StrategyKind::Prognet => "prognet",
        }
    }

    /// Label used in human-readable tables.
    pub fn display_name(self) -> &'static str {
        match self {
            StrategyKind::Baseline => "DNN",
            StrategyKind::Ptft => "PT/FT",
            StrategyKind::Prognet => "ProgNet",
        }
    }

    pub fn needs_source(self) -> bool {
        self != StrategyKind::Baseline
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown strategy {s:?} (expected baseline, ptft or prognet)"))
    }
}

/// A strategy plus the source task it transfers from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransferStrategy {
    kind: StrategyKind,
    source_task: Option<TaskLabel>,
}

impl TransferStrategy {
    pub fn baseline() -> Self {
        Self {
            kind: StrategyKind::Baseline,
            source_task: None,
        }
    }

    pub fn new(kind: StrategyKind, source_task: Option<TaskLabel>) -> Result<Self> {
        if kind.needs_source() != source_task.is_some() {
            return Err(Error::Hyperparams(format!(
                "strategy {kind} {} a source task",
                if kind.needs_source() { "requires" } else { "does not take" }
            )));
        }
        Ok(Self { kind, source_task })
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn source_task(&self) -> Option<TaskLabel> {
        self.source_task
    }
}

/// Hyperparameters plus the early-stopping policy. The selection metric is
/// always validation UAR and the best epoch's weights are kept.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hyperparams: Hyperparams,
    /// Stop after this many epochs without a new best; `None` trains the full budget.
    pub patience: Option<usize>,
    pub wiring: Wiring,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyperparams.validate()?;
        if self.patience == Some(0) {
            return Err(Error::Hyperparams("patience must be >= 1 when set".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_uar: f64,
    pub val_uar: f64,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept.
    pub selected_epoch: usize,
}

impl TrainLog {
    pub fn selected(&self) -> Option<&EpochRecord> {
        self.records.iter().find(|r| r.epoch == self.selected_epoch)
    }

    /// Columnar text: `epoch,train_loss,train_uar,val_uar`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,train_loss,train_uar,val_uar")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{}", r.epoch, r.train_loss, r.train_uar, r.val_uar)?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            path: "<train log>".into(),
            row: line,
            column: "record".into(),
            message: msg.to_string(),
        };
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("epoch,train_loss,train_uar,val_uar") {
            return Err(bad(0, "missing header"));
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i + 1, "expected 4 fields"));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(i + 1, "not a number"));
            records.push(EpochRecord {
                epoch: f[0].trim().parse().map_err(|_| bad(i + 1, "bad epoch"))?,
                train_loss: num(f[1])?,
                train_uar: num(f[2])?,
                val_uar: num(f[3])?,
            });
        }
        let selected_epoch = select_epoch(&records).unwrap_or(0);
        Ok(Self {
            records,
            selected_epoch,
        })
    }
}

/// Earliest epoch attaining the maximum validation UAR.
pub fn select_epoch(records: &[EpochRecord]) -> Option<usize> {
    records
        .iter()
        .fold(None::<&EpochRecord>, |best, r| match best {
            Some(b) if b.val_uar >= r.val_uar => Some(b),
            _ => Some(r),
        })
        .map(|r| r.epoch)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Dnn(NetworkParams),
    ProgNet(ProgNetModel),
}

impl Model {
    pub fn input_dim(&self) -> usize {
        match self {
            Model::Dnn(n) => n.input_dim(),
            Model::ProgNet(m) => m.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Model::Dnn(n) => n.output_dim(),
            Model::ProgNet(m) => m.output_dim(),
        }
    }

    pub fn predict_proba(&self, x: ndarray::ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            Model::Dnn(n) => n.predict_proba(x),
            Model::ProgNet(m) => m.predict_proba(x),
        }
    }

    pub fn predict(&self, x: ndarray::ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(self.predict_proba(x)?.view()))
    }

    /// As a progressive model (a DNN becomes a single column).
    pub fn to_prognet(&self, task_name: &str) -> Result<ProgNetModel> {
        match self {
            Model::Dnn(n) => ProgNetModel::single(Column::from_network(n.clone(), task_name)),
            Model::ProgNet(m) => Ok(m.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub strategy: StrategyKind,
    pub model: Model,
    pub vocab: LabelVocab,
    pub normalization: Option<NormStats>,
}

impl TrainedModel {
    pub fn uar(&self, data: &TaskData) -> Result<f64> {
        evaluate_uar(&self.model, data)
    }
}

pub fn evaluate_uar(model: &Model, data: &TaskData) -> Result<f64> {
    if data.n_classes != model.output_dim() {
        return Err(Error::Shape(format!(
            "model predicts {} classes, data has {}",
            model.output_dim(),
            data.n_classes
        )));
    }
    let pred = model.predict(data.x.view())?;
    uar_from_labels(&data.y, &pred, data.n_classes)
}

fn check_split(train: &TaskData, val: &TaskData, vocab: &LabelVocab) -> Result<()> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::EmptyInput("training and validation data must be nonempty".into()));
    }
    if train.feature_dim() != val.feature_dim() {
        return Err(Error::Shape(format!(
            "train has {} features, validation {}",
            train.feature_dim(),
            val.feature_dim()
        )));
    }
    if train.n_classes != vocab.len() || val.n_classes != vocab.len() {
        return Err(Error::Shape(format!("data labels do not match the {} task vocabulary", vocab.task)));
    }
    let counts = train.class_counts();
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::DegenerateSplit(format!(
            "{} class {:?} has no training examples",
            vocab.task, vocab.classes[missing]
        )));
    }
    Ok(())
}

/// Inverse-frequency weights scaled so a sample's mean weight is 1.
fn class_weights(train: &TaskData) -> Vec<f64> {
    let counts = train.class_counts();
    let n = train.len() as f64;
    let k = counts.len() as f64;
    counts.iter().map(|&c| if c == 0 { 0.0 } else { n / (k * c as f64) }).collect()
}

/// What the epoch loop trains: a plain network, or the target column of a
/// progressive model with its frozen lateral inputs cached per sample.
enum Learner {
    Dnn(NetworkParams),
    Prog {
        model: ProgNetModel,
        train_laterals: Vec<Array2<f64>>,
        val_laterals: Vec<Array2<f64>>,
    },
}

impl Learner {
    fn layers(&self) -> &[LayerParams] {
        match self {
            Learner::Dnn(n) => n.layers(),
            Learner::Prog { model, .. } => model.target().layers(),
        }
    }

    fn layers_mut(&mut self) -> &mut [LayerParams] {
        match self {
            Learner::Dnn(n) => n.layers_mut(),
            Learner::Prog { model, .. } => model.target_layers_mut(),
        }
    }

    fn train_step(
        &self,
        x: &Array2<f64>,
        rows: &[usize],
        y: &[usize],
        hp: &Hyperparams,
        weights: Option<&[f64]>,
        rng: &mut SeededRng,
    ) -> Result<(ForwardTrace, Gradients)> {
        let xb = x.select(Axis(0), rows);
        match self {
            Learner::Dnn(net) => {
                let trace = nn::forward_batch(net, xb.view(), Mode::Train, hp.dropout_rate, Some(rng))?;
                let grads = nn::backward_batch(net, &trace, y, weights)?;
                Ok((trace, grads))
            }
            Learner::Prog {
                model, train_laterals, ..
            } => {
                let lat: Vec<Array2<f64>> = train_laterals.iter().map(|l| l.select(Axis(0), rows)).collect();
                let trace = model.target_forward(xb.view(), &lat, Mode::Train, hp.dropout_rate, Some(rng))?;
                let grads = prognet::prog_backward(model, &trace, y, weights)?;
                Ok((trace, grads))
            }
        }
    }

    fn predict_val(&self, x: &Array2<f64>) -> Result<Vec<usize>> {
        let probs = match self {
            Learner::Dnn(n) => n.predict_proba(x.view())?,
            Learner::Prog {
                model, val_laterals, ..
            } => {
                model
                    .target_forward(x.view(), val_laterals, Mode::Eval, 0.0, None)?
                    .output_probs
            }
        };
        Ok(argmax_rows(probs.view()))
    }

    fn into_model(self) -> Model {
        match self {
            Learner::Dnn(n) => Model::Dnn(n),
            Learner::Prog { model, .. } => Model::ProgNet(model),
        }
    }
}

/// Shared epoch loop. Keeps the earliest best-validation-UAR epoch.
fn fit(mut learner: Learner, train: &TaskData, val: &TaskData, config: &TrainConfig, seed: u64) -> Result<(Model, TrainLog)> {
    let hp = &config.hyperparams;
    let mut rng = seeded_rng(seed);
    let mut opt = OptState::new(hp.optimizer, learner.layers());
    let weights = hp.class_weighted_loss.then(|| class_weights(train));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut records = Vec::with_capacity(hp.max_epochs);
    let mut best: Option<(f64, usize, Vec<LayerParams>)> = None;
    let mut since_best = 0usize;
    let mut predicted = vec![0usize; train.len()];
    let mut batch_labels = Vec::with_capacity(hp.batch_size);

    for epoch in 1..=hp.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for rows in order.chunks(hp.batch_size) {
            batch_labels.clear();
            batch_labels.extend(rows.iter().map(|&r| train.y[r]));
            let (trace, grads) = learner.train_step(&train.x, rows, &batch_labels, hp, weights.as_deref(), &mut rng)?;
            loss_sum += batch_loss(trace.output_probs.view(), &batch_labels, weights.as_deref())? * rows.len() as f64;
            for (&r, p) in rows.iter().zip(argmax_rows(trace.output_probs.view())) {
                predicted[r] = p;
            }
            optimizer_step(learner.layers_mut(), &grads, &mut opt, hp.learning_rate)?;
        }
        let train_uar = uar_from_labels(&train.y, &predicted, train.n_classes)?;
        let val_uar = uar_from_labels(&val.y, &learner.predict_val(&val.x)?, val.n_classes)?;
        records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_uar,
            val_uar,
        });
        if best.as_ref().map_or(true, |(b, _, _)| val_uar > *b) {
            best = Some((val_uar, epoch, learner.layers().to_vec()));
            since_best = 0;
        } else {
            since_best += 1;
            if config.patience.is_some_and(|p| since_best >= p) {
                break;
            }
        }
    }
    let (_, selected_epoch, layers) = best.expect("at least one epoch runs");
    learner.layers_mut().clone_from_slice(&layers);
    Ok((learner.into_model(), TrainLog { records, selected_epoch }))
}

/// Baseline: a freshly initialized DNN trained on the target task alone.
pub fn train_dnn(
    train: &TaskData,
    val: &TaskData,
    task: &LabelVocab,
    config: &TrainConfig,
    seed: u64,
) -> Result<(TrainedModel, TrainLog)> {
    config.validate()?;
    check_split(train, val, task)?;
    let dims = layer_dims(train.feature_dim(), &config.hyperparams, task.len());
    let net = init_network(&dims, derive_tagged(seed, "init", &[]))?;
    let (model, log) = fit(Learner::Dnn(net), train, val, config, derive_tagged(seed, "loop", &[]))?;
    Ok((
        TrainedModel {
            strategy: StrategyKind::Baseline,
            model,
            vocab: task.clone(),
            normalization: None,
        },
        log,
    ))
}

/// Source trunk with a fresh Glorot output layer of `output_dim` classes.
pub fn finetune_init(source: &NetworkParams, output_dim: usize, seed: u64) -> Result<NetworkParams> {
    if source.n_hidden() == 0 {
        return Err(Error::InvalidArchitecture("fine-tuning needs a hidden trunk".into()));
    }
    let (mut trunk, head) = source.clone().split_head();
    let width = head.in_dim();
    let mut rng = seeded_rng(seed);
    trunk.push(LayerParams::glorot(width, output_dim, &mut rng));
    NetworkParams::new(trunk)
}

/// Fine-tunes every layer of a pre-trained DNN on the target task after
/// swapping in a new output layer.
pub fn finetune(
    source: &TrainedModel,
    target_train: &TaskData,
    target_val: &TaskData,
    target_task: &LabelVocab,
    config: &TrainConfig,
    seed: u64,
) -> Result<(TrainedModel, TrainLog)> {
    config.validate()?;
    check_split(target_train, target_val, target_task)?;
    let Model::Dnn(source_net) = &source.model else {
        return Err(Error::Wiring("fine-tuning starts from a plain DNN".into()));
    };
    if source_net.input_dim() != target_train.feature_dim() {
        return Err(Error::IncompatibleDomain(format!(
            "source model takes {} features, target data has {}",
            source_net.input_dim(),
            target_train.feature_dim()
        )));
    }
    let net = finetune_init(source_net, target_task.len(), derive_tagged(seed, "head", &[]))?;
    let (model, log) = fit(Learner::Dnn(net), target_train, target_val, config, derive_tagged(seed, "loop", &[]))?;
    Ok((
        TrainedModel {
            strategy: StrategyKind::Ptft,
            model,
            vocab: target_task.clone(),
            normalization: source.normalization.clone(),
        },
        log,
    ))
}

/// Pre-trains on the source task, then fine-tunes on the target task. The
/// log covers the fine-tuning phase.
#[allow(clippy::too_many_arguments)]
pub fn pretrain_finetune(
    source_train: &TaskData,
    source_val: &TaskData,
    source_task: &LabelVocab,
    target_train: &TaskData,
    target_val: &TaskData,
    target_task: &LabelVocab,
    config: &TrainConfig,
    seed: u64,
) -> Result<(TrainedModel, TrainLog)> {
    if source_train.feature_dim() != target_train.feature_dim() {
        return Err(Error::IncompatibleDomain(format!(
            "source has {} features, target {}",
            source_train.feature_dim(),
            target_train.feature_dim()
        )));
    }
    let (source, _) = train_dnn(source_train, source_val, source_task, config, derive_tagged(seed, "pretrain", &[]))?;
    finetune(&source, target_train, target_val, target_task, config, derive_tagged(seed, "finetune", &[]))
}

/// Freezes the source model and trains a new laterally connected column.
pub fn train_prognet(
    source: &TrainedModel,
    target_train: &TaskData,
    target_val: &TaskData,
    target_task: &LabelVocab,
    config: &TrainConfig,
    seed: u64,
) -> Result<(TrainedModel, TrainLog)> {
    config.validate()?;
    check_split(target_train, target_val, target_task)?;
    if source.model.input_dim() != target_train.feature_dim() {
        return Err(Error::IncompatibleDomain(format!(
            "source model takes {} features, target data has {}",
            source.model.input_dim(),
            target_train.feature_dim()
        )));
    }
    let base = source.model.to_prognet(&source.vocab.task.to_string())?;
    let hp = &config.hyperparams;
    let spec = ColumnSpec {
        n_hidden: hp.n_hidden_layers,
        hidden_width: hp.hidden_width,
        output_dim: target_task.len(),
    };
    let model = add_column(base, spec, target_task.task.to_string(), derive_tagged(seed, "init", &[]), config.wiring)?;
    let train_laterals = model.lateral_inputs(target_train.x.view())?;
    let val_laterals = model.lateral_inputs(target_val.x.view())?;
    let learner = Learner::Prog {
        model,
        train_laterals,
        val_laterals,
    };
    let (model, log) = fit(learner, target_train, target_val, config, derive_tagged(seed, "loop", &[]))?;
    Ok((
        TrainedModel {
            strategy: StrategyKind::Prognet,
            model,
            vocab: target_task.clone(),
            normalization: source.normalization.clone(),
        },
        log,
    ))
}

/// Source-task UAR lost by composing `trunk_after` with the saved source
/// output layer; positive values mean forgetting.
pub fn measure_forgetting(
    trunk_after: &[LayerParams],
    saved_source_head: &LayerParams,
    source_test: &TaskData,
    source_uar_before: f64,
) -> Result<f64> {
    let mut layers = trunk_after.to_vec();
    layers.push(saved_source_head.clone());
    let composed = NetworkParams::new(layers).map_err(|e| match e {
        Error::InvalidArchitecture(m) => Error::Shape(m),
        other => other,
    })?;
    let after = evaluate_uar(&Model::Dnn(composed), source_test)?;
    Ok(source_uar_before - after)
}

/// Forgetting of a progressive model's column, measured through its own
/// (frozen) output.
pub fn measure_column_forgetting(
    model: &ProgNetModel,
    column_index: usize,
    source_test: &TaskData,
    source_uar_before: f64,
) -> Result<f64> {
    let probs = prognet::source_task_output(model, column_index, source_test.x.view())?;
    let after = uar_from_labels(&source_test.y, &argmax_rows(probs.view()), source_test.n_classes)?;
    Ok(source_uar_before - after)
}

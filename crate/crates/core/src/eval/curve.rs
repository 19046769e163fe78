//! Learning curves: per-epoch validation UAR averaged over folds.

use std::collections::BTreeMap;
use std::io::Write;

use super::cv::{pop_std, FoldLog};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub epoch: usize,
    pub mean_val_uar: f64,
    pub std_val_uar: f64,
    /// Folds that contributed an actual (not padded) value at this epoch.
    pub n_observed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,mean_val_uar,std_val_uar")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.epoch, p.mean_val_uar, p.std_val_uar)?;
        }
        Ok(())
    }

    /// First epoch with the highest mean validation UAR.
    pub fn best_epoch(&self) -> Option<usize> {
        let mut best: Option<&CurvePoint> = None;
        for p in &self.points {
            if best.map_or(true, |b| p.mean_val_uar > b.mean_val_uar) {
                best = Some(p);
            }
        }
        best.map(|p| p.epoch)
    }
}

fn val_at(log: &FoldLog, epoch: usize, pad_with_last: bool) -> Option<f64> {
    let records = &log.log.records;
    match records.iter().find(|r| r.epoch == epoch) {
        Some(r) => Some(r.val_uar),
        None if pad_with_last => records.iter().filter(|r| r.epoch <= epoch).last().map(|r| r.val_uar),
        None => None,
    }
}

/// Per epoch: mean and std of validation UAR over the folds of each
/// iteration, then both averaged over iterations. Runs that stopped early
/// are right-padded with their last value when `pad_with_last` is set;
/// otherwise an epoch only averages the runs that reached it.
pub fn build_learning_curve(logs: &[FoldLog], max_epochs: usize, pad_with_last: bool) -> Result<LearningCurve> {
    if logs.is_empty() || logs.iter().any(|l| l.log.records.is_empty()) {
        return Err(Error::EmptyInput("learning curve needs non-empty training logs".into()));
    }
    let mut by_iteration: BTreeMap<usize, Vec<&FoldLog>> = BTreeMap::new();
    for l in logs {
        by_iteration.entry(l.iteration).or_default().push(l);
    }
    let mut points = Vec::with_capacity(max_epochs);
    for epoch in 1..=max_epochs {
        let (mut means, mut stds) = (Vec::new(), Vec::new());
        let mut observed = 0;
        for group in by_iteration.values() {
            observed += group.iter().filter(|l| l.log.records.iter().any(|r| r.epoch == epoch)).count();
            let values: Vec<f64> = group.iter().filter_map(|l| val_at(l, epoch, pad_with_last)).collect();
            if !values.is_empty() {
                means.push(values.iter().sum::<f64>() / values.len() as f64);
                stds.push(pop_std(&values));
            }
        }
        if means.is_empty() {
            break;
        }
        points.push(CurvePoint {
            epoch,
            mean_val_uar: means.iter().sum::<f64>() / means.len() as f64,
            std_val_uar: stds.iter().sum::<f64>() / stds.len() as f64,
            n_observed: observed,
        });
    }
    Ok(LearningCurve { points })
}

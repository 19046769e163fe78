use std::fmt::Write as _;

use prognet_core::eval::{corrected_paired_ttest, CVResult, TTestResult, ALPHA};
use prognet_core::transfer::StrategyKind;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

/// One pairwise comparison; positive `t` means `a` scored higher.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: StrategyKind,
    pub b: StrategyKind,
    #[serde(flatten)]
    pub test: TTestResult,
}

/// Machine-readable run report. Deliberately free of timing and host
/// information so identical runs produce identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    /// Resolved config without `output_dir`.
    pub config: serde_json::Value,
    pub results: Vec<CVResult>,
    pub comparisons: Vec<Comparison>,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig, results: Vec<CVResult>) -> Result<Self, CliError> {
        let mut cfg = serde_json::to_value(config).expect("config serializes to JSON");
        if let Some(map) = cfg.as_object_mut() {
            map.remove("output_dir");
        }
        let ratio = config.train_test_ratio.unwrap_or(1.0 / config.train_folds() as f64);
        let mut comparisons = Vec::new();
        for j in 0..results.len() {
            for i in 0..j {
                // Later strategies in the list are compared against earlier ones.
                let test = corrected_paired_ttest(&results[j], &results[i], ratio, config.df)?;
                comparisons.push(Comparison {
                    a: results[j].strategy,
                    b: results[i].strategy,
                    test,
                });
            }
        }
        Ok(Self {
            schema_version: crate::config::SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg,
            results,
            comparisons,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes to JSON");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("not a run report: {e}")))
    }

    pub fn result(&self, strategy: StrategyKind) -> Option<&CVResult> {
        self.results.iter().find(|r| r.strategy == strategy)
    }

    fn significant(&self, a: StrategyKind, b: StrategyKind) -> bool {
        self.comparisons
            .iter()
            .find(|c| (c.a, c.b) == (a, b) || (c.a, c.b) == (b, a))
            .is_some_and(|c| c.test.significant && (c.a == a) == (c.test.t > 0.0))
    }

    /// Human-readable summary: source task, method, mean ± std UAR (3 decimals)
    /// and markers for significant improvements.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let Some(first) = self.results.first() else {
            return out;
        };
        let _ = writeln!(
            out,
            "Target task: {} | {} iterations x {}-fold CV | {} training folds",
            first.task,
            first.iterations(),
            first.k,
            first.train_folds
        );
        let _ = writeln!(out, "{:<10} {:<8} UAR", "Source", "Method");
        for r in &self.results {
            let source = r.source_task.map_or("-".to_string(), |t| t.to_string());
            let mut marks = String::new();
            if r.strategy != StrategyKind::Baseline && self.significant(r.strategy, StrategyKind::Baseline) {
                marks.push('*');
            }
            if r.strategy == StrategyKind::Prognet && self.significant(r.strategy, StrategyKind::Ptft) {
                marks.push('+');
            }
            let row = format!(
                "{:<10} {:<8} {:.3} ± {:.3}  {}",
                source,
                r.strategy.display_name(),
                r.mean_uar,
                r.mean_within_std,
                marks
            );
            let _ = writeln!(out, "{}", row.trim_end());
        }
        let _ = writeln!(
            out,
            "\n± is the within-iteration std averaged over iterations.\n\
             * better than DNN, + better than PT/FT (corrected paired t-test, p < {ALPHA})."
        );
        out
    }
}

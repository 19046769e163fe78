use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use prognet_core::data::{gen_synthetic, load_csv, write_csv, Dataset, SynthConfig, SyntheticPair};
use prognet_core::eval::{
    build_learning_curve, corrected_paired_ttest, run_repeated_cv_many, CvSetup, FoldLog, LearningCurve, SourceSpec,
    TTestResult,
};
use prognet_core::parallel::Parallelism;
use prognet_core::prognet::encode_model;
use prognet_core::transfer::{StrategyKind, TrainLog};
use serde::Serialize;

use crate::config::{DataSpec, ExperimentConfig, ExperimentKind, Overrides, SynthPart};
use crate::report::RunReport;
use crate::{write_file, CliError};

pub const REPORT_FILE: &str = "report.json";
pub const TABLE_FILE: &str = "table.txt";
pub const ECHO_FILE: &str = "config.echo";
pub const TIMING_FILE: &str = "timing.json";

fn synth_pair(cfg: &ExperimentConfig) -> Result<Option<SyntheticPair>, CliError> {
    let uses_synth = [&cfg.target, &cfg.source]
        .into_iter()
        .flatten()
        .any(|s| s.synth.is_some());
    match (&cfg.synth, uses_synth) {
        (Some(sc), true) => Ok(Some(gen_synthetic(sc, cfg.synth_seed.unwrap_or(cfg.base_seed))?)),
        _ => Ok(None),
    }
}

fn load_spec(spec: &DataSpec, pair: Option<&SyntheticPair>) -> Result<Dataset, CliError> {
    match (&spec.path, spec.synth, pair) {
        (Some(path), _, _) => Ok(load_csv(path)?),
        (None, Some(SynthPart::Source), Some(p)) => Ok(p.source.clone()),
        (None, Some(SynthPart::Target), Some(p)) => Ok(p.target.clone()),
        _ => Err(CliError::Config("data spec has neither a path nor generated data".into())),
    }
}

/// Log file name for one fold run, `<iter>_<fold>_<strategy>.csv`.
pub fn log_file_name(iteration: usize, fold: usize, strategy: StrategyKind) -> String {
    format!("{iteration}_{fold}_{}.csv", strategy.name())
}

fn parse_log_file_name(name: &str) -> Option<(usize, usize, StrategyKind)> {
    let stem = name.strip_suffix(".csv")?;
    let mut parts = stem.splitn(3, '_');
    let iteration = parts.next()?.parse().ok()?;
    let fold = parts.next()?.parse().ok()?;
    let strategy = parts.next()?.parse().ok()?;
    Some((iteration, fold, strategy))
}

fn curve_csv(curve: &LearningCurve) -> Vec<u8> {
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).expect("writing to a Vec cannot fail");
    buf
}

#[derive(Serialize)]
struct Timing {
    elapsed_seconds: f64,
    workers: String,
}

/// Runs a resolved CV experiment and writes every output file.
pub fn run_experiment(cfg: &ExperimentConfig, parallelism: Parallelism) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let target_spec = cfg
        .target
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [target] table".into()))?;
    let pair = synth_pair(cfg)?;
    let target = load_spec(target_spec, pair.as_ref())?;
    let separate_source = match &cfg.source {
        Some(s) if !s.same_corpus(target_spec) => Some(load_spec(s, pair.as_ref())?),
        _ => None,
    };

    let mut setup = CvSetup::new(&target, target_spec.task);
    setup.source = cfg.source.as_ref().map(|s| SourceSpec {
        dataset: separate_source.as_ref().unwrap_or(&target),
        task: s.task,
    });
    setup.config = cfg.train_config();
    setup.iterations = cfg.iterations;
    setup.k = cfg.k;
    setup.base_seed = cfg.base_seed;
    setup.train_fold_subset = cfg.train_fold_subset;
    setup.stratification = cfg.stratification;
    setup.normalization = cfg.normalization;
    setup.parallelism = parallelism;
    setup.keep_models = cfg.save_models;
    log::info!(
        "running {} strategies x {} iterations x {} folds on {} utterances",
        cfg.strategies.len(),
        cfg.iterations,
        cfg.k,
        target.len()
    );
    let runs = run_repeated_cv_many(&setup, &cfg.strategies)?;

    let out = &cfg.output_dir;
    for run in &runs {
        let name = run.result.strategy.name();
        for fl in &run.logs {
            let mut buf = Vec::new();
            fl.log.write_csv(&mut buf).expect("writing to a Vec cannot fail");
            write_file(&out.join("logs").join(log_file_name(fl.iteration, fl.fold, fl.strategy)), buf)?;
            if let Some(model) = &fl.model {
                let bytes = encode_model(&model.to_prognet(&target_spec.task.to_string())?);
                let file = format!("{}_{}_{name}.pgnm", fl.iteration, fl.fold);
                write_file(&out.join("models").join(file), bytes)?;
            }
        }
        let curve = build_learning_curve(&run.logs, cfg.hyperparams.max_epochs, cfg.pad_curves)?;
        write_file(&out.join("curves").join(format!("{name}.csv")), curve_csv(&curve))?;
    }
    let report = RunReport::new(cfg, runs.into_iter().map(|r| r.result).collect())?;
    write_file(&out.join(REPORT_FILE), report.to_json())?;
    write_file(&out.join(TABLE_FILE), report.table())?;
    write_file(&out.join(ECHO_FILE), cfg.to_toml())?;
    let timing = Timing {
        elapsed_seconds: started.elapsed().as_secs_f64(),
        workers: format!("{parallelism:?}"),
    };
    write_file(
        &out.join(TIMING_FILE),
        serde_json::to_string_pretty(&timing).expect("timing serializes"),
    )?;
    Ok(report)
}

/// `prognet run`: loads, resolves and executes a config. Synthetic-generation
/// configs only write the corpus pair and return `None`.
pub fn cmd_run(config_path: &Path, overrides: &Overrides, parallelism: Parallelism) -> Result<Option<RunReport>, CliError> {
    let cfg = ExperimentConfig::load(config_path)?.resolve(overrides)?;
    if cfg.kind == ExperimentKind::SynthGenerate {
        let synth = cfg.synth.clone().expect("validated");
        generate(&synth, cfg.synth_seed.unwrap_or(cfg.base_seed), &cfg.output_dir)?;
        return Ok(None);
    }
    run_experiment(&cfg, parallelism).map(Some)
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'a str,
    tool_version: &'a str,
    seed: u64,
    synth: &'a SynthConfig,
}

pub const SOURCE_CSV: &str = "source.csv";
pub const TARGET_CSV: &str = "target.csv";
pub const PROVENANCE_FILE: &str = "provenance.toml";

/// Writes `source.csv`, `target.csv` and a provenance record to `out`.
pub fn generate(synth: &SynthConfig, seed: u64, out: &Path) -> Result<(), CliError> {
    let pair = gen_synthetic(synth, seed)?;
    for (name, ds) in [(SOURCE_CSV, &pair.source), (TARGET_CSV, &pair.target)] {
        let mut buf = Vec::new();
        write_csv(ds, &mut buf)?;
        write_file(&out.join(name), buf)?;
    }
    let prov = Provenance {
        tool: env!("CARGO_PKG_NAME"),
        tool_version: env!("CARGO_PKG_VERSION"),
        seed,
        synth,
    };
    write_file(&out.join(PROVENANCE_FILE), toml::to_string(&prov).expect("provenance serializes"))
}

/// `prognet synth`: the synthetic config comes from the `[synth]` table of
/// `config` (any kind) or the defaults; the seed from `--seed`, then the
/// config's `synth_seed`/`base_seed`, then 0.
pub fn cmd_synth(config: Option<&Path>, seed: Option<u64>, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let (synth, file_seed, file_out) = match config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            let synth = cfg
                .synth
                .clone()
                .ok_or_else(|| CliError::Config(format!("{} has no [synth] table", path.display())))?;
            (synth, cfg.synth_seed.unwrap_or(cfg.base_seed), Some(cfg.output_dir))
        }
        None => (SynthConfig::default(), 0, None),
    };
    let out = out
        .map(Path::to_path_buf)
        .or(file_out)
        .unwrap_or_else(|| PathBuf::from("out"));
    generate(&synth, seed.unwrap_or(file_seed), &out)?;
    Ok(out)
}

/// Which results `prognet ttest` compares.
#[derive(Clone, Debug, Default)]
pub struct TTestArgs {
    pub report_a: PathBuf,
    pub report_b: Option<PathBuf>,
    pub a: Option<StrategyKind>,
    pub b: Option<StrategyKind>,
    pub df: Option<usize>,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TTestOutcome {
    pub a: StrategyKind,
    pub b: StrategyKind,
    pub result: TTestResult,
}

fn read_report(path: &Path) -> Result<RunReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        CliError::Core(prognet_core::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })?;
    RunReport::from_json(&text)
}

fn pick<'r>(
    report: &'r RunReport,
    wanted: Option<StrategyKind>,
    fallback: usize,
) -> Result<&'r prognet_core::eval::CVResult, CliError> {
    match wanted {
        Some(s) => report
            .result(s)
            .ok_or_else(|| CliError::Config(format!("report has no {} result", s.name()))),
        None => report
            .results
            .get(fallback)
            .ok_or_else(|| CliError::Config("report has too few results".into())),
    }
}

pub fn cmd_ttest(args: &TTestArgs) -> Result<TTestOutcome, CliError> {
    let ra = read_report(&args.report_a)?;
    let (a, b) = match &args.report_b {
        Some(path) => {
            let rb = read_report(path)?;
            let a = pick(&ra, args.a, 0)?.clone();
            let b = pick(&rb, args.b, 0)?.clone();
            (a, b)
        }
        None => {
            if ra.results.len() > 2 && (args.a.is_none() || args.b.is_none()) {
                return Err(CliError::Config("report has more than two results; pass --a and --b".into()));
            }
            (pick(&ra, args.a, 1)?.clone(), pick(&ra, args.b, 0)?.clone())
        }
    };
    let df = args
        .df
        .or_else(|| ra.config.get("df").and_then(|v| v.as_u64()).map(|v| v as usize))
        .unwrap_or(10);
    let ratio = args.ratio.unwrap_or_else(|| a.default_train_test_ratio());
    let result = corrected_paired_ttest(&a, &b, ratio, df).map_err(|e| match e {
        prognet_core::Error::Pairing(m) => CliError::Config(format!("results are not paired: {m}")),
        other => other.into(),
    })?;
    Ok(TTestOutcome {
        a: a.strategy,
        b: b.strategy,
        result,
    })
}

/// `prognet curve`: re-aggregates `logs/*.csv` into one curve per strategy.
pub fn cmd_curve(
    logs_dir: &Path,
    out_dir: &Path,
    max_epochs: Option<usize>,
    pad: bool,
) -> Result<BTreeMap<StrategyKind, LearningCurve>, CliError> {
    let entries = std::fs::read_dir(logs_dir).map_err(|source| {
        CliError::Core(prognet_core::Error::Io {
            path: logs_dir.to_path_buf(),
            source,
        })
    })?;
    let mut names: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    names.sort();
    let mut grouped: BTreeMap<StrategyKind, Vec<FoldLog>> = BTreeMap::new();
    for path in names {
        let Some((iteration, fold, strategy)) = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(parse_log_file_name)
        else {
            continue;
        };
        let text = std::fs::read_to_string(&path).map_err(|source| {
            CliError::Core(prognet_core::Error::Io {
                path: path.clone(),
                source,
            })
        })?;
        let log = TrainLog::read_csv(&text)?;
        grouped.entry(strategy).or_default().push(FoldLog {
            iteration,
            fold,
            strategy,
            log,
            model: None,
        });
    }
    if grouped.is_empty() {
        return Err(CliError::Core(prognet_core::Error::EmptyInput(format!(
            "no training logs in {}",
            logs_dir.display()
        ))));
    }
    let mut curves = BTreeMap::new();
    for (strategy, logs) in grouped {
        let epochs = max_epochs.unwrap_or_else(|| {
            logs.iter()
                .filter_map(|l| l.log.records.last().map(|r| r.epoch))
                .max()
                .unwrap_or(0)
        });
        let curve = build_learning_curve(&logs, epochs, pad)?;
        write_file(&out_dir.join(format!("{}.csv", strategy.name())), curve_csv(&curve))?;
        curves.insert(strategy, curve);
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_names_round_trip() {
        let name = log_file_name(3, 7, StrategyKind::Ptft);
        assert_eq!(name, "3_7_ptft.csv");
        assert_eq!(parse_log_file_name(&name), Some((3, 7, StrategyKind::Ptft)));
        assert_eq!(parse_log_file_name("notes.txt"), None);
    }
}

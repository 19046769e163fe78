use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn prognet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prognet"))
        .args(args)
        .env_remove("PROGNET_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const EXPERIMENT: &str = r#"
schema_version = 1
kind = "cross_dataset"
base_seed = 4
iterations = 2

[hyperparams]
n_hidden_layers = 1
hidden_width = 8
max_epochs = 3
learning_rate = 0.01

[synth]
utterances_per_speaker = 20
feature_dim = 12

[target]
synth = "target"
task = "emotion"

[source]
synth = "source"
task = "emotion"
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    prognet(&args)
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn run_writes_every_output_and_compares_each_pair_once() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp.toml", EXPERIMENT);
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&read(out.join("report.json"))).unwrap();
    assert_eq!(report["results"].as_array().unwrap().len(), 3);
    let pairs: Vec<(String, String)> = report["comparisons"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["a"].as_str().unwrap().to_string(), c["b"].as_str().unwrap().to_string()))
        .collect();
    assert_eq!(
        pairs,
        [("ptft", "baseline"), ("prognet", "baseline"), ("prognet", "ptft")]
            .map(|(a, b)| (a.to_string(), b.to_string()))
    );
    assert!(read(out.join("table.txt")).contains("ProgNet"));
    for s in ["baseline", "ptft", "prognet"] {
        let curve = read(out.join("curves").join(format!("{s}.csv")));
        assert_eq!(curve.lines().count(), 4);
        assert!(out.join("logs").join(format!("1_9_{s}.csv")).exists());
    }
    assert!(read(out.join("config.echo")).contains("schema_version = 1"));
}

#[test]
fn reruns_from_the_echo_and_with_other_worker_counts_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp.toml", EXPERIMENT);
    let first = dir.path().join("first");
    assert_eq!(code(&run(&cfg, &first, &["--workers", "1", "--epochs", "2"])), 0);
    let echo = first.join("config.echo");
    let second = dir.path().join("second");
    let o = Command::new(env!("CARGO_BIN_EXE_prognet"))
        .args(["run", "--config", echo.to_str().unwrap(), "--out", second.to_str().unwrap()])
        .env("PROGNET_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["report.json", "table.txt", "curves/prognet.csv", "logs/0_0_ptft.csv"] {
        assert_eq!(read(first.join(f)), read(second.join(f)), "{f} differs");
    }
}

#[test]
fn missing_dataset_is_a_data_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.toml",
        "schema_version = 1\nkind = \"paralinguistic_transfer\"\nstrategies = [\"baseline\"]\n\n[target]\npath = \"nowhere/corpus.csv\"\ntask = \"emotion\"\n",
    );
    let o = run(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("nowhere/corpus.csv"), "{}", stderr(&o));
}

#[test]
fn invalid_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp.toml", EXPERIMENT);
    assert_eq!(code(&run(&cfg, &dir.path().join("o1"), &["--train-folds", "3"])), 2);
    let bad = write_config(dir.path(), "bad.toml", &format!("surprise = true\n{EXPERIMENT}"));
    assert_eq!(code(&run(&bad, &dir.path().join("o2"), &[])), 2);
    let no_source = EXPERIMENT.replace("[source]\nsynth = \"source\"\ntask = \"emotion\"\n", "");
    let ns = write_config(dir.path(), "ns.toml", &no_source);
    assert_eq!(code(&run(&ns, &dir.path().join("o3"), &[])), 2);
}

#[test]
fn synth_is_deterministic_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "synth.toml",
        "schema_version = 1\nkind = \"synth_generate\"\n\n[synth]\nn_speakers = 10\nutterances_per_speaker = 50\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = prognet(&["synth", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let source = read(a.join("source.csv"));
    assert_eq!(source.lines().count(), 501);
    for f in ["source.csv", "target.csv", "provenance.toml"] {
        assert_eq!(read(a.join(f)), read(b.join(f)));
    }
    assert!(read(a.join("provenance.toml")).contains("seed = 5"));

    let bad = write_config(
        dir.path(),
        "bad.toml",
        "schema_version = 1\nkind = \"synth_generate\"\n\n[synth]\nemotion_priors = [0.5, 0.5, 0.5, 0.5]\n",
    );
    let o = prognet(&["synth", "--config", bad.to_str().unwrap(), "--out", dir.path().join("c").to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = prognet(&["synth", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

fn ttest_field(out: &Output, key: &str) -> String {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in output"))
}

#[test]
fn ttest_subcommand_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp.toml", EXPERIMENT);
    let (ra, rb, rc) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(code(&run(&cfg, &ra, &[])), 0);
    assert_eq!(code(&run(&cfg, &rb, &[])), 0);
    assert_eq!(code(&run(&cfg, &rc, &["--seed", "99", "--strategy", "baseline"])), 0);
    let (a, b, c) = (
        ra.join("report.json"),
        rb.join("report.json"),
        rc.join("report.json"),
    );
    let (a, b, c) = (a.to_str().unwrap(), b.to_str().unwrap(), c.to_str().unwrap());

    let same = prognet(&["ttest", a, b]);
    assert_eq!(code(&same), 0, "{}", stderr(&same));
    assert_eq!(ttest_field(&same, "t"), "0");
    assert_eq!(ttest_field(&same, "p"), "1");

    let fwd = prognet(&["ttest", a, "--a", "prognet", "--b", "baseline"]);
    let rev = prognet(&["ttest", a, "--a", "baseline", "--b", "prognet"]);
    let t_fwd: f64 = ttest_field(&fwd, "t").parse().unwrap();
    let t_rev: f64 = ttest_field(&rev, "t").parse().unwrap();
    assert_eq!(t_fwd, -t_rev);
    assert_eq!(ttest_field(&fwd, "p"), ttest_field(&rev, "p"));

    let unpaired = prognet(&["ttest", a, c]);
    assert_eq!(code(&unpaired), 2);
    assert!(stderr(&unpaired).contains("base seeds differ"), "{}", stderr(&unpaired));
}

#[test]
fn curve_subcommand_reproduces_run_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp.toml", EXPERIMENT);
    let out = dir.path().join("out");
    assert_eq!(code(&run(&cfg, &out, &[])), 0);
    let rebuilt = dir.path().join("curves");
    let o = prognet(&[
        "curve",
        "--logs",
        out.join("logs").to_str().unwrap(),
        "--out",
        rebuilt.to_str().unwrap(),
        "--max-epochs",
        "3",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for s in ["baseline", "ptft", "prognet"] {
        assert_eq!(read(rebuilt.join(format!("{s}.csv"))), read(out.join("curves").join(format!("{s}.csv"))));
    }
}

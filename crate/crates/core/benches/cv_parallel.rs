//! Sequential vs. data-parallel scheduling of cross-validation fold runs.
//!
//! `cargo bench -p prognet-core` compares the modes with rayon enabled;
//! `cargo bench -p prognet-core --no-default-features` measures the
//! sequential-only build (every mode then runs on the calling thread).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use prognet_core::data::{gen_synthetic, SynthConfig, TaskLabel};
use prognet_core::eval::{run_repeated_cv_many, CvSetup, SourceSpec};
use prognet_core::nn::Hyperparams;
use prognet_core::parallel::Parallelism;
use prognet_core::transfer::{StrategyKind, TrainConfig};

fn bench_cv(c: &mut Criterion) {
    let synth = SynthConfig {
        utterances_per_speaker: 30,
        feature_dim: 24,
        ..Default::default()
    };
    let pair = gen_synthetic(&synth, 1).unwrap();
    let mut setup = CvSetup::new(&pair.target, TaskLabel::Emotion);
    setup.source = Some(SourceSpec {
        dataset: &pair.source,
        task: TaskLabel::Emotion,
    });
    setup.config = TrainConfig {
        hyperparams: Hyperparams {
            n_hidden_layers: 2,
            hidden_width: 32,
            max_epochs: 5,
            ..Default::default()
        },
        ..Default::default()
    };
    setup.iterations = 2;
    let strategies = [StrategyKind::Baseline, StrategyKind::Ptft, StrategyKind::Prognet];
    let threads = std::thread::available_parallelism().map_or(2, |n| n.get().max(2));

    let mut group = c.benchmark_group("repeated_cv_2x10");
    group.sample_size(10);
    for (name, mode) in [
        ("sequential", Parallelism::Sequential),
        ("auto", Parallelism::Auto),
        ("threads", Parallelism::Threads(threads)),
    ] {
        setup.parallelism = mode;
        group.bench_with_input(BenchmarkId::from_parameter(name), &setup, |b, s| {
            b.iter(|| run_repeated_cv_many(s, &strategies).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_cv);
criterion_main!(benches);

use std::collections::{BTreeMap, BTreeSet};

use prognet_core::data::{
    gen_synthetic, load_csv, make_folds, split_roles, subset_train_folds, write_csv_file, znormalize, Dataset, Emotion,
    Gender, Stratification, SynthConfig, Utterance,
};
use proptest::prelude::*;

fn corpus(per_speaker: &[usize]) -> Dataset {
    let mut utts = Vec::new();
    for (s, &n) in per_speaker.iter().enumerate() {
        for u in 0..n {
            utts.push(Utterance {
                id: format!("s{s:02}_u{u:03}"),
                dataset_id: "toy".into(),
                speaker_id: format!("spk{s:02}"),
                gender: if s % 2 == 0 { Gender::Male } else { Gender::Female },
                emotion: Emotion::ALL[u % 4],
                features: vec![s as f64 + u as f64 * 0.01, (u * u) as f64 % 7.0],
            });
        }
    }
    Dataset::new(utts, 2).unwrap()
}

fn per_speaker_fold_counts(ds: &Dataset, assignment: &[usize], k: usize) -> BTreeMap<String, Vec<usize>> {
    let mut counts: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (u, &f) in ds.utterances().iter().zip(assignment) {
        counts.entry(u.speaker_id.clone()).or_insert_with(|| vec![0; k])[f] += 1;
    }
    counts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn proportional_plans_partition_and_stratify(
        per_speaker in prop::collection::vec(1usize..40, 1..12),
        k in 3usize..11,
        seed in any::<u64>(),
    ) {
        let ds = corpus(&per_speaker);
        let plan = make_folds(&ds, k, seed, Stratification::Proportional).unwrap();
        prop_assert_eq!(plan.assignment().len(), ds.len());
        prop_assert!(plan.assignment().iter().all(|&f| f < k));
        let all: Vec<usize> = plan.indices(&(0..k).collect::<Vec<_>>());
        prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
        for (speaker, counts) in per_speaker_fold_counts(&ds, plan.assignment(), k) {
            let total: usize = counts.iter().sum();
            if total >= k {
                let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
                prop_assert!(hi - lo <= 1, "{}: {:?}", speaker, counts);
            }
        }
    }

    #[test]
    fn roles_partition_folds(k in 3usize..20) {
        for test in 0..k {
            let r = split_roles(k, test).unwrap();
            let mut all: Vec<usize> = r.train.clone();
            all.push(r.test);
            all.push(r.early_stop);
            all.sort();
            prop_assert_eq!(all, (0..k).collect::<Vec<_>>());
            prop_assert_eq!(r.early_stop, (test + 1) % k);
        }
    }

    #[test]
    fn subsets_are_distinct_members(n in 1usize..=8, seed in any::<u64>()) {
        let train: Vec<usize> = (2..10).collect();
        let s = subset_train_folds(&train, n, seed).unwrap();
        prop_assert_eq!(s.len(), n);
        prop_assert!(s.iter().all(|f| train.contains(f)));
        prop_assert_eq!(s.iter().collect::<BTreeSet<_>>().len(), n);
    }
}

#[test]
fn speaker_disjoint_plans_keep_speakers_together() {
    let ds = corpus(&[12, 30, 7, 18, 25, 9, 14, 3, 22, 16, 11]);
    let plan = make_folds(&ds, 10, 3, Stratification::SpeakerDisjoint).unwrap();
    for counts in per_speaker_fold_counts(&ds, plan.assignment(), 10).values() {
        assert_eq!(counts.iter().filter(|&&c| c > 0).count(), 1);
    }
    assert!(plan.fold_sizes().iter().all(|&s| s > 0));
    assert!(make_folds(&corpus(&[10, 10]), 10, 3, Stratification::SpeakerDisjoint).is_err());
}

#[test]
fn plans_depend_on_ids_not_row_order() {
    let ds = corpus(&[20, 15, 31]);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.reverse();
    let shuffled = ds.permuted(&order).unwrap();
    let a = make_folds(&ds, 10, 8, Stratification::Proportional).unwrap();
    let b = make_folds(&shuffled, 10, 8, Stratification::Proportional).unwrap();
    assert_eq!(a.fingerprint(), b.fingerprint());
    for u in ds.utterances() {
        assert_eq!(a.fold_of(&u.id), b.fold_of(&u.id));
    }
    let c = make_folds(&ds, 10, 9, Stratification::Proportional).unwrap();
    assert_ne!(a.fingerprint(), c.fingerprint());
}

#[test]
fn znormalization_meets_tolerance_and_is_idempotent() {
    let pair = gen_synthetic(&SynthConfig::default(), 5).unwrap();
    let (norm, _) = znormalize(&pair.source).unwrap();
    let n = norm.len() as f64;
    for j in 0..norm.feature_dim() {
        let col: Vec<f64> = norm.utterances().iter().map(|u| u.features[j]).collect();
        let mean = col.iter().sum::<f64>() / n;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-9);
    }
    let (twice, _) = znormalize(&norm).unwrap();
    for (a, b) in norm.utterances().iter().zip(twice.utterances()) {
        for (x, y) in a.features.iter().zip(&b.features) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

fn prototype_correlation(cfg: &SynthConfig, seed: u64) -> f64 {
    let pair = gen_synthetic(cfg, seed).unwrap();
    let a: Vec<f64> = pair.source_prototypes.iter().copied().collect();
    let b: Vec<f64> = pair.target_prototypes.iter().copied().collect();
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn independent_prototypes_are_uncorrelated_on_average() {
    let cfg = SynthConfig {
        transfer_coefficient: 0.0,
        n_speakers: 2,
        utterances_per_speaker: 4,
        ..Default::default()
    };
    let corrs: Vec<f64> = (0..200).map(|s| prototype_correlation(&cfg, s)).collect();
    let mean = corrs.iter().sum::<f64>() / corrs.len() as f64;
    assert!(mean.abs() < 0.05, "mean correlation {mean}");
}

#[test]
fn transfer_coefficient_sets_prototype_similarity() {
    let base = SynthConfig {
        n_speakers: 2,
        utterances_per_speaker: 4,
        ..Default::default()
    };
    let same = SynthConfig {
        transfer_coefficient: 1.0,
        ..base.clone()
    };
    let pair = gen_synthetic(&same, 1).unwrap();
    assert_eq!(pair.source_prototypes, pair.target_prototypes);
    let high: f64 = (0..50).map(|s| prototype_correlation(&base, s)).sum::<f64>() / 50.0;
    assert!((high - 0.9).abs() < 0.05, "mean correlation {high}");
}

#[test]
fn synthetic_pairs_have_the_configured_shape_and_are_deterministic() {
    let cfg = SynthConfig {
        utterances_per_speaker: 50,
        ..Default::default()
    };
    let a = gen_synthetic(&cfg, 12).unwrap();
    let b = gen_synthetic(&cfg, 12).unwrap();
    assert_eq!(a.source.len(), 500);
    assert_eq!(a.target.speakers().len(), 10);
    assert_eq!(a.source.utterances(), b.source.utterances());
    let src: BTreeSet<String> = a.source.speakers().into_iter().collect();
    assert!(a.target.speakers().iter().all(|s| !src.contains(s)));
}

#[test]
fn csv_files_round_trip() {
    let pair = gen_synthetic(
        &SynthConfig {
            utterances_per_speaker: 5,
            ..Default::default()
        },
        4,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.csv");
    write_csv_file(&pair.target, &path).unwrap();
    let back = load_csv(&path).unwrap();
    assert_eq!(back.utterances(), pair.target.utterances());
    assert!(matches!(
        load_csv(dir.path().join("missing.csv")),
        Err(prognet_core::Error::Io { .. })
    ));
}

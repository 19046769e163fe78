//! Latent-factor generator for source/target corpus pairs.
//!
//! A feature vector is `speaker + gender + emotion prototype + noise`. The two
//! corpora have disjoint speakers; their emotion prototypes are mixed as
//! `target = τ·source + sqrt(1 − τ²)·independent`, so τ = 1 gives identical
//! prototypes and τ = 0 independent ones.

use ndarray::Array2;
use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, Emotion, Gender, Utterance, DEFAULT_FEATURE_DIM};
use crate::nn::{seeded_rng, SeededRng};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_speakers: usize,
    pub utterances_per_speaker: usize,
    pub feature_dim: usize,
    pub transfer_coefficient: f64,
    /// Per-feature std of the isotropic Gaussian noise.
    pub noise_std: f64,
    /// Class priors in `angry, neutral, sad, happy` order.
    pub emotion_priors: [f64; 4],
    /// Expected norm of an emotion prototype.
    pub emotion_scale: f64,
    /// Expected norm of a speaker's latent offset.
    pub speaker_scale: f64,
    /// Norm of the gender offset (added as `±` along one direction).
    pub gender_scale: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_speakers: 10,
            utterances_per_speaker: 100,
            feature_dim: DEFAULT_FEATURE_DIM,
            transfer_coefficient: 0.9,
            noise_std: 1.0,
            emotion_priors: [0.25; 4],
            emotion_scale: 3.0,
            speaker_scale: 3.0,
            gender_scale: 2.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SynthConfig(m));
        if self.n_speakers == 0 || self.utterances_per_speaker == 0 || self.feature_dim == 0 {
            return bad("n_speakers, utterances_per_speaker and feature_dim must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.transfer_coefficient) {
            return bad(format!("transfer_coefficient {} not in [0, 1]", self.transfer_coefficient));
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std {} must be > 0", self.noise_std));
        }
        if self.emotion_priors.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return bad("emotion priors must be finite and non-negative".into());
        }
        let total: f64 = self.emotion_priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("emotion priors sum to {total}, not 1"));
        }
        for (name, v) in [
            ("emotion_scale", self.emotion_scale),
            ("speaker_scale", self.speaker_scale),
            ("gender_scale", self.gender_scale),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} {v} must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// A generated source/target pair plus the emotion prototypes behind it
/// (rows in [`Emotion::ALL`] order).
#[derive(Clone, Debug)]
pub struct SyntheticPair {
    pub source: Dataset,
    pub target: Dataset,
    pub source_prototypes: Array2<f64>,
    pub target_prototypes: Array2<f64>,
}

fn gaussian_matrix(rng: &mut SeededRng, rows: usize, cols: usize, std: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| std * rng.sample::<f64, _>(StandardNormal))
}

fn unit_vector(rng: &mut SeededRng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn corpus(
    cfg: &SynthConfig,
    rng: &mut SeededRng,
    tag: &str,
    prototypes: &Array2<f64>,
    gender_dir: &[f64],
) -> Result<Dataset> {
    let d = cfg.feature_dim;
    let per_dim = 1.0 / (d as f64).sqrt();
    let speakers = gaussian_matrix(rng, cfg.n_speakers, d, cfg.speaker_scale * per_dim);
    let priors = WeightedIndex::new(cfg.emotion_priors).map_err(|e| Error::SynthConfig(e.to_string()))?;
    let mut utterances = Vec::with_capacity(cfg.n_speakers * cfg.utterances_per_speaker);
    for s in 0..cfg.n_speakers {
        // Sessions pair one male and one female speaker.
        let gender = if s % 2 == 0 { Gender::Male } else { Gender::Female };
        let sign = if gender == Gender::Male { 1.0 } else { -1.0 };
        for u in 0..cfg.utterances_per_speaker {
            let emotion = Emotion::ALL[priors.sample(rng)];
            let proto = prototypes.row(emotion.index());
            let features = (0..d)
                .map(|j| {
                    speakers[[s, j]]
                        + sign * cfg.gender_scale * gender_dir[j]
                        + proto[j]
                        + cfg.noise_std * rng.sample::<f64, _>(StandardNormal)
                })
                .collect();
            utterances.push(Utterance {
                id: format!("{tag}_s{s:03}_u{u:04}"),
                dataset_id: format!("synth_{tag}"),
                speaker_id: format!("{tag}_spk{s:03}"),
                gender,
                emotion,
                features,
            });
        }
    }
    Dataset::new(utterances, d)
}

/// Generates a source/target corpus pair. Deterministic per seed.
pub fn gen_synthetic(cfg: &SynthConfig, seed: u64) -> Result<SyntheticPair> {
    cfg.validate()?;
    let mut rng = seeded_rng(seed);
    let d = cfg.feature_dim;
    let per_dim = cfg.emotion_scale / (d as f64).sqrt();
    let source_prototypes = gaussian_matrix(&mut rng, 4, d, per_dim);
    let independent = gaussian_matrix(&mut rng, 4, d, per_dim);
    let tau = cfg.transfer_coefficient;
    let target_prototypes = &source_prototypes * tau + &independent * (1.0 - tau * tau).sqrt();
    let gender_dir = unit_vector(&mut rng, d);
    let source = corpus(cfg, &mut rng, "src", &source_prototypes, &gender_dir)?;
    let target = corpus(cfg, &mut rng, "tgt", &target_prototypes, &gender_dir)?;
    Ok(SyntheticPair {
        source,
        target,
        source_prototypes,
        target_prototypes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_speakers: 4,
            utterances_per_speaker: 20,
            feature_dim: 12,
            ..Default::default()
        }
    }

    #[test]
    fn sizes_and_determinism() {
        let a = gen_synthetic(&small(), 5).unwrap();
        let b = gen_synthetic(&small(), 5).unwrap();
        assert_eq!(a.source, b.source);
        assert_eq!(a.target, b.target);
        assert_eq!(a.source.len(), 80);
        assert_eq!(a.target.feature_dim(), 12);
        assert_eq!(a.source.speakers().len(), 4);
        let c = gen_synthetic(&small(), 6).unwrap();
        assert_ne!(a.source, c.source);
    }

    #[test]
    fn tau_one_shares_prototypes() {
        let cfg = SynthConfig {
            transfer_coefficient: 1.0,
            ..small()
        };
        let p = gen_synthetic(&cfg, 1).unwrap();
        assert_eq!(p.source_prototypes, p.target_prototypes);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small();
        cfg.emotion_priors = [0.5, 0.5, 0.5, 0.0];
        assert!(matches!(gen_synthetic(&cfg, 0), Err(Error::SynthConfig(_))));
        cfg = small();
        cfg.noise_std = 0.0;
        assert!(gen_synthetic(&cfg, 0).is_err());
        cfg = small();
        cfg.transfer_coefficient = 1.5;
        assert!(gen_synthetic(&cfg, 0).is_err());
    }
}

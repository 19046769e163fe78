//! Variance-corrected resampled paired t-test over cross-validation results.

use serde::{Deserialize, Serialize};

use super::CVResult;
use crate::{Error, Result};

/// Significance threshold on the two-sided p-value.
pub const ALPHA: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: usize,
    pub p: f64,
    pub significant: bool,
    pub train_test_ratio: f64,
    pub n: usize,
    pub mean_difference: f64,
    /// The differences had zero sample variance.
    pub degenerate_variance: bool,
}

/// `t = mean(d) / sqrt((1/n + ratio) · var(d))` with sample variance, and a
/// two-sided p-value from Student's t with `df` degrees of freedom.
pub fn corrected_ttest_from_differences(d: &[f64], train_test_ratio: f64, df: usize) -> Result<TTestResult> {
    if d.len() < 2 {
        return Err(Error::Pairing(format!("need at least 2 paired differences, got {}", d.len())));
    }
    if df == 0 {
        return Err(Error::Pairing("degrees of freedom must be >= 1".into()));
    }
    if !(train_test_ratio >= 0.0 && train_test_ratio.is_finite()) {
        return Err(Error::Pairing(format!("invalid train/test ratio {train_test_ratio}")));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite paired difference".into()));
    }
    let n = d.len();
    let mean = d.iter().sum::<f64>() / n as f64;
    // Exactly equal differences have zero variance; the mean may not be
    // exactly representable, so the sum of squares would not be.
    let var = if d.iter().all(|&v| v == d[0]) {
        0.0
    } else {
        d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    };
    let (t, p, degenerate) = if var == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0, true)
        } else {
            (mean.signum() * f64::INFINITY, 0.0, true)
        }
    } else {
        let t = mean / ((1.0 / n as f64 + train_test_ratio) * var).sqrt();
        (t, student_t_two_sided_p(t, df as f64), false)
    };
    Ok(TTestResult {
        t,
        df,
        p,
        significant: p < ALPHA,
        train_test_ratio,
        n,
        mean_difference: mean,
        degenerate_variance: degenerate,
    })
}

/// Paired comparison of two CV results that share fold plans.
pub fn corrected_paired_ttest(a: &CVResult, b: &CVResult, train_test_ratio: f64, df: usize) -> Result<TTestResult> {
    a.check_paired(b)?;
    let d: Vec<f64> = a
        .uars
        .iter()
        .flatten()
        .zip(b.uars.iter().flatten())
        .map(|(x, y)| x - y)
        .collect();
    corrected_ttest_from_differences(&d, train_test_ratio, df)
}

/// `P(|T| > |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}

/// Student's t cumulative distribution function.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_sided_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `I_x(a, b)` via the continued fraction, evaluated on whichever side of
/// the mean converges fast.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

//! One-sided Diebold-Mariano test on squared-error loss with a rectangular
//! HAC variance and the Harvey-Leybourne-Newbold correction.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const DM_MIN_ROWS: usize = 10;
/// Significance level of the one-sided decision.
pub const DM_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    /// Corrected statistic; negative when `a` has the smaller loss.
    pub statistic: f64,
    /// `P(T <= statistic)` under `t(n - 1)`: evidence that `a` is better.
    pub p_value: f64,
    pub reject: bool,
    pub n: usize,
    pub horizon: usize,
}

/// Tests `H0: E[e_a^2] = E[e_b^2]` against `a` being more accurate.
///
/// Identical losses give statistic 0. A constant nonzero loss differential
/// has no variance and is an error.
pub fn dm_test(errors_a: &[f64], errors_b: &[f64], horizon: usize) -> Result<DmResult> {
    if errors_a.len() != errors_b.len() {
        return Err(Error::LengthMismatch {
            left: errors_a.len(),
            right: errors_b.len(),
        });
    }
    let n = errors_a.len();
    if n < DM_MIN_ROWS {
        return Err(Error::TooFewRows {
            needed: DM_MIN_ROWS,
            got: n,
        });
    }
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be positive".into()));
    }
    if errors_a.iter().chain(errors_b).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let d: Vec<f64> = errors_a
        .iter()
        .zip(errors_b)
        .map(|(a, b)| a * a - b * b)
        .collect();
    let neutral = DmResult {
        statistic: 0.0,
        p_value: 0.5,
        reject: false,
        n,
        horizon,
    };
    if d.iter().all(|v| *v == 0.0) {
        return Ok(neutral);
    }
    if d.iter().all(|v| *v == d[0]) {
        return Err(Error::ZeroVarianceDifferential);
    }
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let gamma = |k: usize| -> f64 {
        (k..n).map(|t| (d[t] - mean) * (d[t - k] - mean)).sum::<f64>() / nf
    };
    let g0 = gamma(0);
    let mut var = g0;
    for k in 1..horizon.min(n) {
        var += 2.0 * gamma(k);
    }
    // the rectangular kernel can go negative; fall back to the lag-0 term
    if var <= 0.0 {
        var = g0;
    }
    if var <= 0.0 {
        return Err(Error::ZeroVarianceDifferential);
    }
    let dm = mean / (var / nf).sqrt();
    let h = horizon as f64;
    let correction = ((nf + 1.0 - 2.0 * h + h * (h - 1.0) / nf) / nf).max(0.0).sqrt();
    let statistic = dm * correction;
    let t = StudentsT::new(0.0, 1.0, nf - 1.0).expect("n >= 10 gives positive degrees of freedom");
    let p_value = t.cdf(statistic);
    Ok(DmResult {
        statistic,
        p_value,
        reject: p_value < DM_LEVEL,
        n,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn series(n: usize, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = rng_from(seed);
        (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn identical_and_degenerate() {
        let a = series(30, 1.0, 1);
        let r = dm_test(&a, &a, 3).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        // 3^2 - 5^2 = 0^2 - 4^2
        let c: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 3.0 } else { 0.0 }).collect();
        let d: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 5.0 } else { 4.0 }).collect();
        assert!(matches!(dm_test(&c, &d, 1), Err(Error::ZeroVarianceDifferential)));
        assert!(matches!(dm_test(&a[..9], &a[..9], 1), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn antisymmetric_and_detects_better_model() {
        let a = series(120, 0.5, 2);
        let b = series(120, 2.0, 3);
        let ab = dm_test(&a, &b, 4).unwrap();
        let ba = dm_test(&b, &a, 4).unwrap();
        assert_eq!(ab.statistic, -ba.statistic);
        assert!(ab.reject && !ba.reject);
        assert!(ab.p_value < 1e-6);
    }
}

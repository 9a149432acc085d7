//! Goodness-of-fit statistics used by the Monte-Carlo checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{BbsError, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    covariance(xs, xs)
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (xs.len() as f64 - 1.0)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// `sup_x |F_n(x) - F(x)|` for the empirical CDF of `xs`.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut k = 0;
    while k < v.len() {
        // step over ties in one go
        let x = v[k];
        let mut e = k;
        while e < v.len() && v[e] == x {
            e += 1;
        }
        let f = cdf(x);
        d = d
            .max((e as f64 / n - f).abs())
            .max((f - k as f64 / n).abs());
        k = e;
    }
    d
}

/// `sup_x |F_a(x) - F_b(x)|` for two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov tail `P(K > lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    // the series converges slowly near 0, where the tail is 1 to 1e-9 anyway
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        s += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Approximate p-value of a two-sample KS distance.
pub fn ks_two_sample_pvalue(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let sq = ne.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Bins that remain after pooling those with expected count below 5.
    pub bins: usize,
    pub pooled: usize,
}

/// Pearson chi-square of `observed` against `expected`, pooling every bin
/// with expected count below 5 into one bin (merged with the smallest other
/// bin if the pool itself stays below 5). Degrees of freedom are bins - 1.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() {
        return Err(BbsError::DimensionMismatch {
            expected: expected.len(),
            got: observed.len(),
        });
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut po, mut pe, mut pooled) = (0.0, 0.0, 0);
    for (&o, &e) in observed.iter().zip(expected) {
        if e < 5.0 {
            po += o as f64;
            pe += e;
            pooled += 1;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled > 0 {
        if pe >= 5.0 || bins.is_empty() {
            bins.push((po, pe));
        } else {
            let k = (0..bins.len())
                .min_by(|&a, &b| bins[a].1.total_cmp(&bins[b].1))
                .unwrap();
            bins[k].0 += po;
            bins[k].1 += pe;
        }
    }
    if bins.len() < 2 {
        return Err(BbsError::InvalidArgument(
            "chi-square needs at least two bins after pooling".into(),
        ));
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = bins.len() - 1;
    let dist = ChiSquared::new(df as f64).map_err(|e| BbsError::InvalidArgument(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        df,
        p_value: dist.sf(statistic),
        bins: bins.len(),
        pooled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_one_sample_uniform() {
        let xs = [0.1, 0.4, 0.7];
        // F_n reaches 1 at 0.7 where F = 0.7
        let d = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.3).abs() < 1e-12, "{d}");
        // ties: both points at 0.5 make the jump 0 -> 1 there
        assert!((ks_one_sample(&[0.5, 0.5], |x| x) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ks_two_sample_cases() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[3.5]) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // standard table: P(K > 1.36) ~ 0.049, P(K > 1.63) ~ 0.0098
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.63) - 0.0098).abs() < 5e-4);
    }

    #[test]
    fn chi_square_pooling() {
        let r = chi_square(&[10, 10, 1, 1], &[10.0, 10.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.pooled, 2);
        assert_eq!(r.df, 1);
        let r = chi_square(&[20, 0], &[10.0, 10.0]).unwrap();
        assert!((r.statistic - 20.0).abs() < 1e-12);
        assert!(r.p_value < 1e-4);
    }
}

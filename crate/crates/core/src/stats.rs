//! Time-series statistics: autocorrelation times, blocking error bars and
//! replica bootstrap.

use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Integrated autocorrelation time `τ = 1/2 + Σ_{k≥1} ρ(k)` in units of the
/// sampling interval, with Sokal's self-consistent window `M ≥ c·τ(M)`, c = 5.
///
/// Returns 0.5 for uncorrelated or constant series.
pub fn integrated_autocorrelation_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 0.5;
    }
    let m = mean(xs);
    let c0 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 <= 0.0 || !c0.is_finite() {
        return 0.5;
    }
    let mut tau = 0.5;
    for k in 1..n / 2 {
        let ck = xs[..n - k]
            .iter()
            .zip(&xs[k..])
            .map(|(a, b)| (a - m) * (b - m))
            .sum::<f64>()
            / n as f64;
        tau += ck / c0;
        if (k as f64) >= 5.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Standard error of the mean from Flyvbjerg–Petersen blocking.
///
/// Blocks are halved repeatedly; the largest error over levels that keep at
/// least 32 blocks is returned. Fails with `None` below 32 samples.
pub fn blocking_stderr(xs: &[f64]) -> Option<f64> {
    const MIN_BLOCKS: usize = 32;
    if xs.len() < MIN_BLOCKS {
        return None;
    }
    let mut level: Vec<f64> = xs.to_vec();
    let mut best = 0.0_f64;
    while level.len() >= MIN_BLOCKS {
        let se = (variance(&level) / level.len() as f64).sqrt();
        best = best.max(se);
        level = level.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    }
    Some(best)
}

/// Bootstrap standard error of `statistic` over resampled group indices.
pub fn bootstrap_stderr<R, F>(groups: usize, resamples: usize, rng: &mut R, mut statistic: F) -> f64
where
    R: Rng + ?Sized,
    F: FnMut(&[usize]) -> f64,
{
    if groups < 2 || resamples < 2 {
        return 0.0;
    }
    let mut idx = alloc::vec![0usize; groups];
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for slot in idx.iter_mut() {
            *slot = rng.random_range(0..groups);
        }
        let v = statistic(&idx);
        if v.is_finite() {
            values.push(v);
        }
    }
    variance(&values).sqrt()
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    weighted_linear_fit(x, y, None)
}

pub fn weighted_linear_fit(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let weight = |i: usize| w.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..x.len()).map(weight).sum();
    if sw <= 0.0 {
        return None;
    }
    let mx = (0..x.len()).map(|i| weight(i) * x[i]).sum::<f64>() / sw;
    let my = (0..x.len()).map(|i| weight(i) * y[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..x.len()).map(|i| weight(i) * (x[i] - mx).powi(2)).sum();
    let sxy: f64 = (0..x.len()).map(|i| weight(i) * (x[i] - mx) * (y[i] - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / core::f64::consts::SQRT_2))
}

/// Asymptotic Kolmogorov tail `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov statistic and its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    if a.is_empty() || b.is_empty() {
        return (0.0, 1.0);
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j, mut dmax) = (0usize, 0usize, 0.0_f64);
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        dmax = dmax.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let sq = ne.sqrt();
    let p = kolmogorov_tail((sq + 0.12 + 0.11 / sq) * dmax);
    (dmax, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn basic_moments() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(variance(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(variance(&[4.0]), 0.0);
    }

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng::from_seed(seed);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x = phi * x + z;
                x
            })
            .collect()
    }

    #[test]
    fn autocorrelation_time_of_ar1() {
        // τ_int = (1 + φ) / (2 (1 − φ)) for an AR(1) process.
        let phi = 0.8;
        let xs = ar1(phi, 200_000, 3);
        let tau = integrated_autocorrelation_time(&xs);
        let exact = (1.0 + phi) / (2.0 * (1.0 - phi));
        assert!((tau - exact).abs() / exact < 0.1, "tau {tau} exact {exact}");
        assert_eq!(integrated_autocorrelation_time(&[1.0; 100]), 0.5);
    }

    #[test]
    fn blocking_accounts_for_correlation() {
        let phi = 0.9;
        let xs = ar1(phi, 1 << 17, 5);
        let naive = (variance(&xs) / xs.len() as f64).sqrt();
        let se = blocking_stderr(&xs).unwrap();
        let tau = (1.0 + phi) / (2.0 * (1.0 - phi));
        let expected = naive * (2.0 * tau).sqrt();
        assert!(se > 3.0 * naive);
        assert!((se / expected - 1.0).abs() < 0.3, "se {se} expected {expected}");
        assert!(blocking_stderr(&xs[..10]).is_none());
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|x| 1.5 - 0.25 * x).collect();
        let (a, b) = linear_fit(&x, &y).unwrap();
        assert!((a - 1.5).abs() < 1e-12 && (b + 0.25).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
    }

    #[test]
    fn ks_two_sample_behaviour() {
        let mut r = rng::from_seed(5);
        let a: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut r)).collect();
        let b: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut r)).collect();
        let c: Vec<f64> = b.iter().map(|x: &f64| x + 0.3).collect();
        let (d_same, p_same) = ks_two_sample(&a, &b);
        let (d_shift, p_shift) = ks_two_sample(&a, &c);
        assert!(d_same < 0.04 && p_same > 0.01);
        assert!(d_shift > 0.08 && p_shift < 1e-6);
        assert_eq!(ks_two_sample(&a, &a).0, 0.0);
    }
}

//! Sampled position variance of the scalar regulator against the Gibbs value,
//! as a χ² statistic over independent replicas.

use nlhv_core::dynamics::{run_with_final, IntegratorConfig};
use nlhv_core::matrix::{MatrixConfiguration, ModelParams};
use nlhv_core::rng;

/// `Σ x²/σ²` over `m` independent replicas, with `σ² = T / (2κμω²)`.
fn chi_square(kappa: f64, mu: f64, omega: f64, t: f64, m: u64, seed: u64) -> f64 {
    let params = ModelParams::new(1, 1, mu, omega).with_kappa(kappa);
    let start = MatrixConfiguration::zeros(&params);
    let var = t / (2.0 * kappa * mu * omega * omega);
    (0..m)
        .map(|r| {
            let integ = IntegratorConfig::langevin(0.05, 600, 1.0, t, rng::derive_seed(seed, r, "chi2"));
            let (_, end) = run_with_final(&start, &params, &integ).unwrap();
            let x = end.x[0].get(0, 0);
            x * x / var
        })
        .sum()
}

#[test]
fn marginal_variance_is_chi_square_consistent() {
    let m = 4000;
    for (k, &(kappa, mu, omega, t)) in [(1.0, 1.0, 1.0, 0.1), (1.0, 1.0, 1.0, 0.5), (0.5, 2.0, 1.5, 0.3)]
        .iter()
        .enumerate()
    {
        let s = chi_square(kappa, mu, omega, t, m, 10 + k as u64);
        // χ²_m is close to N(m, 2m) here; |z| < 3.29 is the two-sided 0.1% band
        let z = (s - m as f64) / (2.0 * m as f64).sqrt();
        assert!(z.abs() < 3.29, "κ={kappa} μ={mu} ω={omega} T={t}: z = {z}");
    }
}

//! Confidence bounds for Monte Carlo summaries.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;

/// One-sided Clopper–Pearson lower bound on a binomial proportion: the
/// smallest `p` with `P[X ≥ successes | p] ≥ 1 − confidence`.
pub fn clopper_pearson_lower(successes: u64, trials: u64, confidence: f64) -> f64 {
    assert!(successes <= trials && trials > 0);
    if successes == 0 {
        return 0.0;
    }
    let alpha = 1.0 - confidence;
    if successes == trials {
        return alpha.powf(1.0 / trials as f64);
    }
    // P[X ≥ k | p] = I_p(k, n − k + 1), increasing in p.
    let (a, b) = (successes as f64, (trials - successes + 1) as f64);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Two-sided normal-approximation confidence interval for a mean.
pub fn mean_interval(samples: &[f64], confidence: f64) -> (f64, f64, f64) {
    let k = samples.len();
    if k == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, mean, mean);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + confidence / 2.0);
    let half = z * (var / k as f64).sqrt();
    (mean, mean - half, mean + half)
}

//! Small helpers for finite probability vectors.

use crate::error::{Error, Result};

/// Absolute tolerance used when checking that a vector sums to one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Checks that `p` is nonnegative, finite and sums to one within
/// [`NORMALIZATION_TOL`]. `field` names the offending input in the error.
pub fn check_distribution(p: &[f64], field: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::config(field, "distribution is empty"));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::config(
            field,
            format!("entry {x} is negative or not finite"),
        ));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::config(
            field,
            format!("entries sum to {total}, expected 1"),
        ));
    }
    Ok(())
}

/// Shannon entropy in nats with the `0 ln 0 = 0` convention.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `ln Σ exp(x_i)`, stabilized by the maximum.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Mixes `p` with the uniform distribution so every entry is at least
/// `kappa`: `(1 - kappa * n) p + kappa`.
pub fn floor_distribution(p: &[f64], kappa: f64) -> Vec<f64> {
    let scale = 1.0 - kappa * p.len() as f64;
    p.iter().map(|x| scale * x + kappa).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.5, 0.5, 0.1]), 0);
        assert_eq!(argmax(&[0.2, 0.9, 0.9]), 1);
    }

    #[test]
    fn entropy_of_fair_coin() {
        assert!((entropy(&[0.5, 0.5]) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(check_distribution(&[0.5, 0.6], "p").is_err());
        assert!(check_distribution(&[-0.1, 1.1], "p").is_err());
        assert!(check_distribution(&[0.25; 4], "p").is_ok());
    }
}

//! Exponential decay fits of sup|H − 𝓗| over a monitor series.

use crate::identities::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub samples: usize,
}

/// Least squares of log err against s over the trailing half of the samples.
///
/// `None` when fewer than two trailing samples are positive and finite.
pub fn trailing_half_fit(s: &[f64], err: &[f64]) -> Option<DecayFit> {
    let n = s.len().min(err.len());
    let start = n / 2;
    let pts: Vec<(f64, f64)> = (start..n)
        .filter(|&i| err[i] > 0.0 && err[i].is_finite())
        .map(|i| (s[i], err[i].ln()))
        .collect();
    if pts.len() < 2 || pts.len() < n - start {
        return None;
    }
    let (slope, intercept, r2) = linear_fit(&pts);
    Some(DecayFit { slope, intercept, r2, samples: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let s: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let e: Vec<f64> = s.iter().map(|x| 3.0 * (-x).exp()).collect();
        let fit = trailing_half_fit(&s, &e).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert_eq!(fit.samples, 25);
    }

    #[test]
    fn zeros_skip_the_fit() {
        assert!(trailing_half_fit(&[0.0, 1.0, 2.0, 3.0], &[0.0; 4]).is_none());
    }
}

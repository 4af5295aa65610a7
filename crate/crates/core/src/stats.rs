//! Batch-mean error estimation for Monte Carlo streams.
//!
//! Draws arrive in a deterministic order (one RNG stream per draw index), so
//! batching by contiguous index ranges keeps every reported number
//! reproducible for a fixed seed, independent of thread count.

use num_complex::Complex64;

/// Number of batches used for standard errors.
pub const BATCHES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchStats {
    pub mean: f64,
    pub stderr: f64,
    pub batches: usize,
}

/// Splits `values` into `BATCHES` contiguous batches (the last one absorbs
/// the remainder) and returns the batch means.
pub fn batch_means(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    assert!(n >= BATCHES, "need at least {BATCHES} samples");
    let size = n / BATCHES;
    (0..BATCHES)
        .map(|b| {
            let lo = b * size;
            let hi = if b + 1 == BATCHES { n } else { lo + size };
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Overall mean plus the batch-mean standard error.
pub fn batch_stats(values: &[f64]) -> BatchStats {
    let means = batch_means(values);
    let b = means.len() as f64;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (b - 1.0);
    BatchStats {
        mean,
        stderr: (var / b).sqrt(),
        batches: means.len(),
    }
}

/// Complex analogue; the scalar stderr bounds the scatter of batch means in
/// the plane: `sqrt((Var(re) + Var(im)) / B)`.
pub fn batch_stats_complex(values: &[Complex64]) -> (Complex64, f64, usize) {
    let n = values.len();
    assert!(n >= BATCHES, "need at least {BATCHES} samples");
    let size = n / BATCHES;
    let means: Vec<Complex64> = (0..BATCHES)
        .map(|b| {
            let lo = b * size;
            let hi = if b + 1 == BATCHES { n } else { lo + size };
            values[lo..hi].iter().sum::<Complex64>() / (hi - lo) as f64
        })
        .collect();
    let mean = values.iter().sum::<Complex64>() / n as f64;
    let b = means.len() as f64;
    let var: f64 = means.iter().map(|m| (m - mean).norm_sqr()).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt(), means.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stream_has_zero_error() {
        let v = vec![2.5; 64];
        let s = batch_stats(&v);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.stderr, 0.0);
        assert_eq!(s.batches, BATCHES);
    }

    #[test]
    fn remainder_goes_to_last_batch() {
        let v: Vec<f64> = (0..37).map(|i| i as f64).collect();
        let means = batch_means(&v);
        assert_eq!(means.len(), BATCHES);
        // every sample is used exactly once
        let s = batch_stats(&v);
        assert!((s.mean - 18.0).abs() < 1e-12);
    }

    #[test]
    fn iid_normal_scale() {
        // stderr of n iid unit-variance samples is near 1/sqrt(n)
        use rand::prelude::*;
        use rand_distr::StandardNormal;
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let v: Vec<f64> = (0..4096).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let s = batch_stats(&v);
        let ideal = 1.0 / 4096f64.sqrt();
        assert!(s.stderr > ideal / 3.0 && s.stderr < ideal * 3.0);
    }

    #[test]
    fn complex_mean_matches_parts() {
        let v: Vec<Complex64> = (0..32)
            .map(|i| Complex64::new(i as f64, -(i as f64)))
            .collect();
        let (mean, stderr, b) = batch_stats_complex(&v);
        assert!((mean.re - 15.5).abs() < 1e-12);
        assert!((mean.im + 15.5).abs() < 1e-12);
        assert!(stderr > 0.0);
        assert_eq!(b, BATCHES);
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::histogram::{build_histogram, GridBounds, GridHistogram};
use crate::error::{Error, Result};

pub const BOOTSTRAP_RESAMPLES: usize = 100;

/// Base-2 Jensen-Shannon divergence of two distributions over the same
/// support. Bins where both are zero contribute nothing.
pub fn jsd_distributions(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::GridMismatch);
    }
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        let mut t = 0.0;
        if a > 0.0 {
            t += a * (a / m).log2();
        }
        if b > 0.0 {
            t += b * (b / m).log2();
        }
        total += 0.5 * t;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// `(jsd, sqrt(jsd))` of two histograms on the same grid.
pub fn jensen_shannon(p: &GridHistogram, q: &GridHistogram) -> Result<(f64, f64)> {
    if p.grid != q.grid || p.bounds != q.bounds {
        return Err(Error::GridMismatch);
    }
    if p.count == 0 || q.count == 0 {
        return Err(Error::Empty("histogram built from zero points".into()));
    }
    let j = jsd_distributions(&p.bins, &q.bins)?;
    Ok((j, j.sqrt()))
}

fn resample(points: &[(f64, f64)], rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    (0..points.len())
        .map(|_| points[rng.gen_range(0..points.len())])
        .collect()
}

/// Sample standard deviation of the jsd over seeded bootstrap resamples of
/// both point sets.
pub fn bootstrap_jsd_std(
    a: &[(f64, f64)],
    b: &[(f64, f64)],
    bounds: &GridBounds,
    grid: usize,
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("bootstrap needs points on both sides".into()));
    }
    if resamples < 2 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let ha = build_histogram(&resample(a, &mut rng), bounds, grid)?;
        let hb = build_histogram(&resample(b, &mut rng), bounds, grid)?;
        values.push(jensen_shannon(&ha, &hb)?.0);
    }
    Ok(sample_std(&values))
}

pub(crate) fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let j = jsd_distributions(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((j - 0.31128).abs() < 1e-5);
        assert!((j.sqrt() - 0.55792).abs() < 1e-5);
        assert_eq!(jsd_distributions(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(jsd_distributions(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert!(jsd_distributions(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn grid_mismatch() {
        let b1 = GridBounds::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let b2 = GridBounds::new(0.0, 2.0, 0.0, 1.0).unwrap();
        let p = build_histogram(&[(0.5, 0.5)], &b1, 15).unwrap();
        let q = build_histogram(&[(0.5, 0.5)], &b2, 15).unwrap();
        assert!(matches!(jensen_shannon(&p, &q), Err(Error::GridMismatch)));
    }

    #[test]
    fn bootstrap_is_seeded() {
        let b = GridBounds::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let a: Vec<(f64, f64)> = (0..50).map(|i| (i as f64 / 50.0, 0.3)).collect();
        let c: Vec<(f64, f64)> = (0..50).map(|i| (0.5, i as f64 / 50.0)).collect();
        let s1 = bootstrap_jsd_std(&a, &c, &b, 15, 100, 3).unwrap();
        let s2 = bootstrap_jsd_std(&a, &c, &b, 15, 100, 3).unwrap();
        assert_eq!(s1, s2);
        assert!(s1 > 0.0);
    }
}

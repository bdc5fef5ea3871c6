use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps latents to the plane. Implementations must be deterministic.
pub trait Projector: Send + Sync {
    fn method(&self) -> &'static str;
    fn project(&self, latent: &[f64]) -> Result<(f64, f64)>;

    fn project_rows(&self, latents: ArrayView2<f64>) -> Result<Vec<(f64, f64)>> {
        latents
            .rows()
            .into_iter()
            .map(|r| self.project(&r.to_vec()))
            .collect()
    }
}

/// Top-2 principal directions of the fitted latents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaProjector {
    pub mean: Vec<f64>,
    /// Unit-norm, mutually orthogonal; the first nonzero entry of each is
    /// positive.
    pub components: [Vec<f64>; 2],
    /// Variance of the fitted data along each component.
    pub variances: [f64; 2],
}

const ZERO_VARIANCE: f64 = 1e-12;

fn normalize_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl PcaProjector {
    pub fn fit(latents: ArrayView2<f64>) -> Result<Self> {
        let (n, d) = latents.dim();
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "projector needs at least 3 points, got {n}"
            )));
        }
        if d < 2 {
            return Err(Error::InvalidArgument("latents need at least 2 dimensions".into()));
        }
        let mean = latents.mean_axis(ndarray::Axis(0)).unwrap();
        let centered: Array2<f64> = &latents - &mean;
        let cov = centered.t().dot(&centered) / (n - 1) as f64;
        let cov = DMatrix::from_fn(d, d, |i, j| cov[[i, j]]);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut components: [Vec<f64>; 2] = Default::default();
        let mut variances = [0.0; 2];
        for k in 0..2 {
            let idx = order[k];
            variances[k] = eig.eigenvalues[idx].max(0.0);
            components[k] = eig.eigenvectors.column(idx).iter().copied().collect();
        }
        if variances[0] <= ZERO_VARIANCE * scale {
            return Err(Error::DegenerateVariance { component: 1 });
        }
        // re-orthonormalize against eigen-solver rounding
        let c0 = components[0].clone();
        let n0 = dot(&c0, &c0).sqrt();
        components[0].iter_mut().for_each(|x| *x /= n0);
        let proj = dot(&components[1], &components[0]);
        let c0 = components[0].clone();
        components[1].iter_mut().zip(&c0).for_each(|(x, c)| *x -= proj * c);
        let n1 = dot(&components[1], &components[1]).sqrt();
        components[1].iter_mut().for_each(|x| *x /= n1);
        normalize_sign(&mut components[0]);
        normalize_sign(&mut components[1]);
        Ok(PcaProjector {
            mean: mean.to_vec(),
            components,
            variances,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

impl Projector for PcaProjector {
    fn method(&self) -> &'static str {
        "pca"
    }

    fn project(&self, latent: &[f64]) -> Result<(f64, f64)> {
        if latent.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "latent has {} values, projector expects {}",
                latent.len(),
                self.dim()
            )));
        }
        let mut xy = [0.0; 2];
        for (k, c) in self.components.iter().enumerate() {
            xy[k] = latent
                .iter()
                .zip(&self.mean)
                .zip(c)
                .map(|((v, m), c)| (v - m) * c)
                .sum();
        }
        Ok((xy[0], xy[1]))
    }
}

/// Fits a projector by method tag.
pub fn fit_projector(method: &str, latents: ArrayView2<f64>) -> Result<Box<dyn Projector>> {
    match method {
        "pca" => Ok(Box::new(PcaProjector::fit(latents)?)),
        other => Err(Error::Config(format!("unknown projector `{other}` (available: pca)"))),
    }
}

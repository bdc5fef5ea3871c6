use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridBounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl GridBounds {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        if !(xmin < xmax && ymin < ymax) {
            return Err(Error::InvalidArgument(format!(
                "bounds need xmin < xmax and ymin < ymax, got [{xmin}, {xmax}] x [{ymin}, {ymax}]"
            )));
        }
        Ok(GridBounds { xmin, xmax, ymin, ymax })
    }

    /// Min/max over every point. A collapsed axis is widened by 0.5 on
    /// each side so the grid stays well formed.
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a (f64, f64)>) -> Result<Self> {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        let mut any = false;
        for &(x, y) in points {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite point ({x}, {y})")));
            }
            any = true;
            b[0] = b[0].min(x);
            b[1] = b[1].max(x);
            b[2] = b[2].min(y);
            b[3] = b[3].max(y);
        }
        if !any {
            return Err(Error::Empty("no points for grid bounds".into()));
        }
        for lo in [0, 2] {
            if b[lo] == b[lo + 1] {
                b[lo] -= 0.5;
                b[lo + 1] += 0.5;
            }
        }
        Self::new(b[0], b[1], b[2], b[3])
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.xmin..=self.xmax).contains(&x) && (self.ymin..=self.ymax).contains(&y)
    }

    /// `min(floor((v - lo) / (hi - lo) * grid), grid - 1)` per axis.
    pub fn bin(&self, x: f64, y: f64, grid: usize) -> Result<(usize, usize)> {
        if !self.contains(x, y) {
            return Err(Error::OutOfBounds { x, y });
        }
        let f = |v: f64, lo: f64, hi: f64| (((v - lo) / (hi - lo) * grid as f64).floor() as usize).min(grid - 1);
        Ok((f(x, self.xmin, self.xmax), f(y, self.ymin, self.ymax)))
    }
}

/// Normalized counts over a `grid x grid` lattice, row-major by y then x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHistogram {
    pub bounds: GridBounds,
    pub grid: usize,
    pub bins: Vec<f64>,
    pub count: usize,
}

impl GridHistogram {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.bins[iy * self.grid + ix]
    }
}

pub fn build_histogram(points: &[(f64, f64)], bounds: &GridBounds, grid: usize) -> Result<GridHistogram> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid size must be >= 1".into()));
    }
    if points.is_empty() {
        return Err(Error::Empty("histogram needs at least one point".into()));
    }
    let mut counts = vec![0u64; grid * grid];
    for &(x, y) in points {
        let (ix, iy) = bounds.bin(x, y, grid)?;
        counts[iy * grid + ix] += 1;
    }
    let n = points.len() as f64;
    Ok(GridHistogram {
        bounds: *bounds,
        grid,
        bins: counts.into_iter().map(|c| c as f64 / n).collect(),
        count: points.len(),
    })
}

//! Persistence images.
//!
//! Each interval `(b, d)` becomes the point `(b, |b - d|)` in (birth,
//! persistence) coordinates and contributes a weighted isotropic Gaussian.
//! Cell values are exact integrals of that Gaussian over the cell, so summing
//! 2x2 blocks of an `2n` grid reproduces the `n` grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::{Interval, IntervalKind, PersistenceDiagram};

/// Persistence weighting of each Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weight {
    /// `persistence / range_max`; vanishes on the diagonal.
    #[default]
    Linear,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorizationParams {
    /// Cells per axis.
    pub n: usize,
    /// Both axes span `[0, range_max]`.
    pub range_max: f64,
    pub sigma: f64,
    pub weight: Weight,
}

impl VectorizationParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("persistence image needs n >= 1".into()));
        }
        if !(self.range_max > 0.0 && self.range_max.is_finite()) {
            return Err(Error::Config(format!(
                "range_max must be positive, got {}",
                self.range_max
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// `n x n` grid; row = persistence bin (row 0 lowest), column = birth bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceImageGrid {
    n: usize,
    data: Vec<f64>,
}

impl PersistenceImageGrid {
    pub fn zeros(n: usize) -> Self {
        PersistenceImageGrid {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_data(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Geometry(format!("{} values for a {n}x{n} grid", data.len())));
        }
        Ok(PersistenceImageGrid { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs_diff(&self, other: &PersistenceImageGrid) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|&v| v as f32).collect()
    }
}

impl std::ops::AddAssign<&PersistenceImageGrid> for PersistenceImageGrid {
    fn add_assign(&mut self, rhs: &PersistenceImageGrid) {
        assert_eq!(self.n, rhs.n, "grid sizes differ");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// Intervals of the requested kinds with finite, nonzero persistence.
pub fn select_intervals(diagram: &PersistenceDiagram, kinds: &[IntervalKind]) -> Vec<Interval> {
    diagram
        .intervals()
        .iter()
        .filter(|i| kinds.contains(&i.kind))
        .filter(|i| i.birth.is_finite() && i.death.is_finite() && i.persistence() > 0.0)
        .copied()
        .collect()
}

/// Gaussian mass of each of the `n` cells of `[0, range_max]` for a 1-D
/// Gaussian centered at `center`.
fn cell_masses(center: f64, params: &VectorizationParams) -> Vec<f64> {
    let scale = params.sigma * std::f64::consts::SQRT_2;
    let step = params.range_max / params.n as f64;
    let cdf: Vec<f64> = (0..=params.n)
        .map(|k| libm::erf((k as f64 * step - center) / scale))
        .collect();
    cdf.windows(2).map(|w| 0.5 * (w[1] - w[0])).collect()
}

/// Mass of the unweighted Gaussian at `(birth, persistence)` that falls inside
/// `[0, range_max]^2`.
pub fn in_range_mass(birth: f64, persistence: f64, params: &VectorizationParams) -> f64 {
    let x: f64 = cell_masses(birth, params).iter().sum();
    let y: f64 = cell_masses(persistence, params).iter().sum();
    x * y
}

pub fn persistence_image(intervals: &[Interval], params: &VectorizationParams) -> PersistenceImageGrid {
    let n = params.n;
    let mut grid = PersistenceImageGrid::zeros(n);
    for interval in intervals {
        if !(interval.birth.is_finite() && interval.death.is_finite()) {
            continue;
        }
        let x = interval.birth;
        let y = interval.persistence();
        let w = match params.weight {
            Weight::Linear => y / params.range_max,
            Weight::Constant => 1.0,
        };
        let cols = cell_masses(x, params);
        let rows = cell_masses(y, params);
        for (r, &my) in rows.iter().enumerate() {
            let wy = w * my;
            let row = &mut grid.data[r * n..(r + 1) * n];
            for (cell, &mx) in row.iter_mut().zip(&cols) {
                *cell += wy * mx;
            }
        }
    }
    grid
}

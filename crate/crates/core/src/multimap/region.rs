use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Box, lattice resolution, sample budget and seed for a search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub lower: Vector,
    pub upper: Vector,
    pub grid_resolution: usize,
    pub sample_budget: usize,
    pub seed: u64,
}

/// Grid scans are skipped above this many nodes.
pub const MAX_GRID_NODES: usize = 200_000;

impl SearchRegion {
    pub fn new(
        lower: Vector,
        upper: Vector,
        grid_resolution: usize,
        sample_budget: usize,
        seed: u64,
    ) -> Result<Self> {
        let r = SearchRegion {
            lower,
            upper,
            grid_resolution,
            sample_budget,
            seed,
        };
        r.validate()?;
        Ok(r)
    }

    /// `[-half, half]^dim` around `center`.
    pub fn around(center: &[f64], half_width: f64, grid_resolution: usize, sample_budget: usize, seed: u64) -> Result<Self> {
        SearchRegion::new(
            center.iter().map(|c| c - half_width).collect(),
            center.iter().map(|c| c + half_width).collect(),
            grid_resolution,
            sample_budget,
            seed,
        )
    }

    /// `[-5, 5]^dim`, 11 nodes per axis, 2000 samples, seed 42.
    pub fn default_for(dim: usize) -> Self {
        SearchRegion::around(&vec![0.0; dim], 5.0, 11, 2000, 42).expect("valid defaults")
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::DimensionMismatch {
                expected: self.lower.len(),
                found: self.upper.len(),
            });
        }
        for (i, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "region axis {i}: need finite lower < upper, got [{l}, {u}]"
                )));
            }
        }
        if self.grid_resolution < 2 {
            return Err(Error::InvalidInput("grid_resolution must be ≥ 2".into()));
        }
        if self.sample_budget < 1 {
            return Err(Error::InvalidInput("sample_budget must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.sample_budget = budget.max(1);
        self
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| *l <= *x && *x <= *u)
    }

    pub fn clamp(&self, p: &[f64]) -> Vector {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| x.clamp(*l, *u))
            .collect()
    }

    /// Largest half-width over the axes.
    pub fn half_width(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .fold(0.0, |m, (l, u)| m.max(0.5 * (u - l)))
    }

    pub fn grid_len(&self) -> usize {
        let mut n: usize = 1;
        for _ in 0..self.dim() {
            n = n.saturating_mul(self.grid_resolution);
        }
        n
    }

    /// Node `idx` of the lattice in lexicographic order (last axis fastest).
    pub fn grid_node(&self, mut idx: usize) -> Vector {
        let r = self.grid_resolution;
        let mut out = vec![0.0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let k = idx % r;
            idx /= r;
            let (l, u) = (self.lower[axis], self.upper[axis]);
            out[axis] = l + (u - l) * k as f64 / (r - 1) as f64;
        }
        out
    }

    /// All lattice nodes, or none when the lattice exceeds [`MAX_GRID_NODES`].
    pub fn grid_nodes(&self) -> Vec<Vector> {
        let n = self.grid_len();
        if n > MAX_GRID_NODES {
            return Vec::new();
        }
        (0..n).map(|i| self.grid_node(i)).collect()
    }

    /// The `2^dim` corners of the box.
    pub fn corners(&self) -> Vec<Vector> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|i| if mask >> i & 1 == 1 { self.upper[i] } else { self.lower[i] })
                    .collect()
            })
            .collect()
    }
}

//! Frequency grids for characteristic-function comparisons.
//!
//! Coordinates come from {±0.5, ±1, ±1.5, ±2}; every coordinate is
//! nonzero because the law's perturbation vanishes the moment any
//! frequency coordinate is zero, so all-nonzero points are what give the
//! tests their power. The first point is always the all-ones point.

use crate::error::{Error, Result};

pub const GRID_COORDINATE_VALUES: [f64; 8] = [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];

const GRID_SEED: u64 = 0x6672_6571_2e67_7269;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A fixed, deterministic set of frequency points in R^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl FrequencyGrid {
    pub const DEFAULT_POINTS: usize = 20;

    pub fn for_dim(dim: usize) -> Result<Self> {
        Self::with_point_count(dim, Self::DEFAULT_POINTS)
    }

    /// Build a grid of up to `count` distinct points (dimension 1 tops
    /// out at the 8 coordinate values).
    pub fn with_point_count(dim: usize, count: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("grid dimension must be ≥ 1".into()));
        }
        if count == 0 {
            return Err(Error::InvalidInput("grid needs at least one point".into()));
        }
        let mut points: Vec<Vec<f64>> = vec![vec![1.0; dim]];
        let mut candidate = 0u64;
        let mut attempts = 0u64;
        while points.len() < count && attempts < 10_000 {
            let point: Vec<f64> = (0..dim)
                .map(|j| {
                    let h = splitmix64(GRID_SEED ^ candidate.wrapping_mul(0x100) ^ j as u64);
                    GRID_COORDINATE_VALUES[(h >> 33) as usize % 8]
                })
                .collect();
            if !points.contains(&point) {
                points.push(point);
            }
            candidate += 1;
            attempts += 1;
        }
        Ok(Self { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_deterministic_and_distinct() {
        let a = FrequencyGrid::for_dim(3).unwrap();
        let b = FrequencyGrid::for_dim(3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), FrequencyGrid::DEFAULT_POINTS);
        for (i, p) in a.points().iter().enumerate() {
            assert_eq!(p.len(), 3);
            assert!(p.iter().all(|c| *c != 0.0));
            for q in &a.points()[..i] {
                assert_ne!(p, q);
            }
        }
    }

    #[test]
    fn first_point_is_all_ones() {
        let g = FrequencyGrid::for_dim(4).unwrap();
        assert_eq!(g.point(0), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn one_dimensional_grid_saturates_at_eight_points() {
        let g = FrequencyGrid::for_dim(1).unwrap();
        assert_eq!(g.len(), 8);
    }

    #[test]
    fn degenerate_requests_are_rejected() {
        assert!(FrequencyGrid::with_point_count(0, 5).is_err());
        assert!(FrequencyGrid::with_point_count(2, 0).is_err());
    }
}

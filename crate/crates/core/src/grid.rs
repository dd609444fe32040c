//! Symmetric signal/frequency grids.
//!
//! The signal grid is `x_k = (k - N/2)·Δx` with `Δx = 2L/N`; the frequency grid is
//! `ω_j = (j - N/2)·Δω` with `Δω = π/L`, so `Δx·Δω = 2π/N`. Both are symmetric about 0
//! in the periodic sense: index `N/2` is the origin and index `N/2 ± m` are mirror images.

use serde::{Deserialize, Serialize};

use crate::dist::DistributionModel;
use crate::error::{Error, Result};

pub const DEFAULT_NUM_POINTS: usize = 4096;
/// Tail mass tolerated when sizing a default grid.
const DEFAULT_TAIL_MASS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width: f64,
    num_points: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, num_points: usize) -> Result<Self> {
        if num_points < 64 || !num_points.is_power_of_two() {
            return Err(Error::InvalidGridSize(num_points));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidHalfWidth(half_width));
        }
        Ok(Self {
            half_width,
            num_points,
        })
    }

    /// Default grid wide enough for the sum of the given independent variables.
    pub fn covering(dists: &[&DistributionModel]) -> Self {
        Self::covering_with(dists, DEFAULT_NUM_POINTS)
    }

    pub fn covering_with(dists: &[&DistributionModel], num_points: usize) -> Self {
        let max_sd = dists
            .iter()
            .map(|d| d.std_dev())
            .fold(0.0_f64, f64::max);
        let tails: f64 = dists
            .iter()
            .map(|d| d.tail_half_width(DEFAULT_TAIL_MASS))
            .sum();
        let half_width = (12.0 * max_sd).max(tails).max(f64::MIN_POSITIVE);
        Self::new(half_width, num_points).expect("power-of-two grid size")
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    /// Index of the origin on both grids.
    pub fn center(&self) -> usize {
        self.num_points / 2
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.num_points as f64
    }

    pub fn d_omega(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    pub fn x(&self, k: usize) -> f64 {
        (k as f64 - self.center() as f64) * self.dx()
    }

    pub fn omega(&self, j: usize) -> f64 {
        (j as f64 - self.center() as f64) * self.d_omega()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.num_points).map(|k| self.x(k)).collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.omega(j)).collect()
    }

    /// Largest representable frequency magnitude.
    pub fn omega_max(&self) -> f64 {
        self.center() as f64 * self.d_omega()
    }

    /// Index of the mirror point `-ω_j`, if it lies on the grid.
    pub fn mirror(&self, j: usize) -> Option<usize> {
        (j > 0).then(|| self.num_points - j)
    }

    /// Same grid up to floating-point noise in the half-width.
    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.num_points == other.num_points
            && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert_eq!(GridSpec::new(1.0, 32), Err(Error::InvalidGridSize(32)));
        assert_eq!(GridSpec::new(1.0, 100), Err(Error::InvalidGridSize(100)));
        assert!(matches!(GridSpec::new(0.0, 64), Err(Error::InvalidHalfWidth(_))));
        assert!(matches!(
            GridSpec::new(f64::NAN, 64),
            Err(Error::InvalidHalfWidth(_))
        ));
    }

    #[test]
    fn grids_are_symmetric_about_origin() {
        let g = GridSpec::new(5.0, 64).unwrap();
        assert_eq!(g.x(g.center()), 0.0);
        assert_eq!(g.omega(g.center()), 0.0);
        for m in 1..g.center() {
            assert!((g.x(g.center() + m) + g.x(g.center() - m)).abs() < 1e-12);
            assert!((g.omega(g.center() + m) + g.omega(g.center() - m)).abs() < 1e-12);
        }
        assert!((g.dx() * g.d_omega() - 2.0 * std::f64::consts::PI / 64.0).abs() < 1e-15);
        assert_eq!(g.x(0), -5.0);
    }

    #[test]
    fn covering_grid_is_wide_enough_for_laplace() {
        let lap = DistributionModel::laplace(1.0).unwrap();
        let g = GridSpec::covering(&[&lap]);
        assert!(g.half_width() >= lap.tail_half_width(1e-10));
        assert_eq!(g.num_points(), DEFAULT_NUM_POINTS);
    }
}

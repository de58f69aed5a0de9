//! Periodic 2D grid descriptor: coordinates, wavenumbers and the cell masks
//! used by weighted diagnostics.

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use ndarray::Array2;
use std::sync::Arc;

/// Square periodic grid on `[-L/2, L/2)^2` with `n` points per axis.
///
/// Coordinates are `x_j = -L/2 + j h` with `h = L/n`; wavenumbers follow the
/// usual FFT layout `ξ_k = 2π k / L` for `k = 0..n/2-1, -n/2..-1`.
#[derive(Debug, Clone)]
pub struct Grid2D<T: Scalar> {
    n: usize,
    length: T,
    spacing: T,
    coords: Arc<Vec<T>>,
    wavenumbers: Arc<Vec<T>>,
    radius: Arc<Array2<T>>,
}

impl<T: Scalar> Grid2D<T> {
    pub fn new(n: usize, length: T) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= 16, got {n}"
            )));
        }
        if length <= T::zero() {
            return Err(Error::InvalidGrid("domain length must be positive".into()));
        }
        let spacing = length / cast::<T>(n as f64);
        let half = length / cast::<T>(2.0);
        let coords: Vec<T> = (0..n)
            .map(|j| cast::<T>(j as f64) * spacing - half)
            .collect();
        let two_pi_over_l = T::PI() * cast::<T>(2.0) / length;
        let wavenumbers: Vec<T> = (0..n)
            .map(|k| {
                let ks = if k < n / 2 {
                    k as f64
                } else {
                    k as f64 - n as f64
                };
                cast::<T>(ks) * two_pi_over_l
            })
            .collect();
        let mut radius = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let x = coords[i];
                let y = coords[j];
                radius[[i, j]] = (x * x + y * y).sqrt();
            }
        }
        Ok(Self {
            n,
            length,
            spacing,
            coords: Arc::new(coords),
            wavenumbers: Arc::new(wavenumbers),
            radius: Arc::new(radius),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    /// Cell area `h^2`, the L2 quadrature weight.
    pub fn cell_area(&self) -> T {
        self.spacing * self.spacing
    }

    /// Coordinate along either axis.
    pub fn coord(&self, j: usize) -> T {
        self.coords[j]
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    /// Signed wavenumber for FFT bin `k`.
    pub fn wavenumber(&self, k: usize) -> T {
        self.wavenumbers[k]
    }

    pub fn wavenumbers(&self) -> &[T] {
        &self.wavenumbers
    }

    /// `r = |x|` for every cell.
    pub fn radius(&self) -> &Array2<T> {
        &self.radius
    }

    /// Radial floor below which `x/r` weights are undefined: one grid spacing.
    pub fn r_floor(&self) -> T {
        self.spacing
    }

    /// Whether a cell is within `margin` cells of the periodic seam at
    /// `x = ±L/2` along either axis.
    pub fn near_seam(&self, i: usize, j: usize, margin: usize) -> bool {
        let close = |k: usize| k < margin || k >= self.n - margin;
        close(i) || close(j)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }

    pub fn require_same_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "expected n={} L={}, got n={} L={}",
                self.n, self.length, other.n, other.length
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = Grid2D::<f64>::new(16, 8.0).unwrap();
        assert_eq!(g.n(), 16);
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.coord(0), -4.0);
        assert_eq!(g.coord(8), 0.0);
        // Wavenumber bins: k=1 -> 2π/L, k=n/2 -> -n/2 * 2π/L.
        let dk = 2.0 * std::f64::consts::PI / 8.0;
        assert!((g.wavenumber(1) - dk).abs() < 1e-15);
        assert!((g.wavenumber(8) + 8.0 * dk).abs() < 1e-14);
        assert!((g.wavenumber(15) + dk).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid2D::<f64>::new(12, 8.0).is_err());
        assert!(Grid2D::<f64>::new(8, 8.0).is_err());
        assert!(Grid2D::<f64>::new(16, -1.0).is_err());
    }

    #[test]
    fn origin_is_on_grid_and_radius_matches() {
        let g = Grid2D::<f64>::new(32, 16.0).unwrap();
        let c = g.n() / 2;
        assert_eq!(g.radius()[[c, c]], 0.0);
        assert!((g.radius()[[c + 1, c]] - g.spacing()).abs() < 1e-15);
    }

    #[test]
    fn seam_mask() {
        let g = Grid2D::<f64>::new(16, 8.0).unwrap();
        assert!(g.near_seam(0, 8, 2));
        assert!(g.near_seam(8, 15, 2));
        assert!(!g.near_seam(8, 8, 2));
        assert!(g.near_seam(1, 8, 2));
        assert!(!g.near_seam(2, 8, 2));
    }
}

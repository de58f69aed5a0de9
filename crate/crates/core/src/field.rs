//! Time-stamped field containers on the periodic grid.
//!
//! A spinor field stores its two components as separate complex planes so the
//! FFT engine can transform them without repacking; pointwise spinor access
//! goes through [`SpinorField::at`] / [`SpinorField::set`].

use crate::algebra::Spinor;
use crate::error::Result;
use crate::grid::Grid2D;
use crate::scalar::{Scalar, C};
use ndarray::Array2;
use num_complex::Complex;

/// Complex scalar field on the grid.
#[derive(Debug, Clone)]
pub struct ScalarField<T: Scalar> {
    pub grid: Grid2D<T>,
    pub time: T,
    pub values: Array2<C<T>>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn zeros(grid: &Grid2D<T>, time: T) -> Self {
        Self {
            grid: grid.clone(),
            time,
            values: Array2::zeros((grid.n(), grid.n())),
        }
    }

    pub fn from_fn(grid: &Grid2D<T>, time: T, mut f: impl FnMut(T, T) -> C<T>) -> Self {
        let n = grid.n();
        let mut values = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                values[[i, j]] = f(grid.coord(i), grid.coord(j));
            }
        }
        Self {
            grid: grid.clone(),
            time,
            values,
        }
    }

    /// Discrete L2 norm with cell weight `h^2`.
    pub fn l2_norm(&self) -> T {
        let mut acc = T::zero();
        for v in self.values.iter() {
            acc = acc + v.norm_sqr();
        }
        (acc * self.grid.cell_area()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for v in self.values.iter() {
            m = m.max(v.norm());
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Complex 2-spinor field on the grid, stored as two component planes.
#[derive(Debug, Clone)]
pub struct SpinorField<T: Scalar> {
    pub grid: Grid2D<T>,
    pub time: T,
    pub comps: [Array2<C<T>>; 2],
}

impl<T: Scalar> SpinorField<T> {
    pub fn zeros(grid: &Grid2D<T>, time: T) -> Self {
        let n = grid.n();
        Self {
            grid: grid.clone(),
            time,
            comps: [Array2::zeros((n, n)), Array2::zeros((n, n))],
        }
    }

    pub fn from_fn(grid: &Grid2D<T>, time: T, mut f: impl FnMut(T, T) -> Spinor<T>) -> Self {
        let mut out = Self::zeros(grid, time);
        let n = grid.n();
        for i in 0..n {
            for j in 0..n {
                let s = f(grid.coord(i), grid.coord(j));
                out.comps[0][[i, j]] = s.c0;
                out.comps[1][[i, j]] = s.c1;
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Spinor<T> {
        Spinor::new(self.comps[0][[i, j]], self.comps[1][[i, j]])
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, s: Spinor<T>) {
        self.comps[0][[i, j]] = s.c0;
        self.comps[1][[i, j]] = s.c1;
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    /// Apply a pointwise map `(x1, x2, ψ) -> ψ'` in place.
    pub fn map_cells(&mut self, mut f: impl FnMut(T, T, Spinor<T>) -> Spinor<T>) {
        let n = self.grid.n();
        for i in 0..n {
            let x = self.grid.coord(i);
            for j in 0..n {
                let y = self.grid.coord(j);
                let s = f(x, y, self.at(i, j));
                self.set(i, j, s);
            }
        }
    }

    /// Discrete L2 norm with cell weight `h^2`.
    pub fn l2_norm(&self) -> T {
        (self.l2_norm_sqr()).sqrt()
    }

    pub fn l2_norm_sqr(&self) -> T {
        let mut acc = T::zero();
        for c in &self.comps {
            for v in c.iter() {
                acc = acc + v.norm_sqr();
            }
        }
        acc * self.grid.cell_area()
    }

    /// Discrete L1 norm of the pointwise spinor magnitude.
    pub fn l1_norm(&self) -> T {
        let n = self.grid.n();
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc = acc + self.at(i, j).norm();
            }
        }
        acc * self.grid.cell_area()
    }

    /// Largest pointwise spinor magnitude.
    pub fn max_abs(&self) -> T {
        let n = self.grid.n();
        let mut m = T::zero();
        for i in 0..n {
            for j in 0..n {
                m = m.max(self.at(i, j).norm());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }

    pub fn scaled(&self, s: C<T>) -> Self {
        let mut out = self.clone();
        for c in &mut out.comps {
            c.mapv_inplace(|v| v * s);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.require_same_shape(&other.grid)?;
        let mut out = self.clone();
        for k in 0..2 {
            out.comps[k] = &out.comps[k] + &other.comps[k];
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.require_same_shape(&other.grid)?;
        let mut out = self.clone();
        for k in 0..2 {
            out.comps[k] = &out.comps[k] - &other.comps[k];
        }
        Ok(out)
    }

    /// Pointwise application of a constant 2x2 matrix.
    pub fn apply_matrix(&self, m: &crate::algebra::Mat2<T>) -> Self {
        let mut out = Self::zeros(&self.grid, self.time);
        let (a, b, c, d) = (m.e[0][0], m.e[0][1], m.e[1][0], m.e[1][1]);
        ndarray::Zip::from(&mut out.comps[0])
            .and(&self.comps[0])
            .and(&self.comps[1])
            .for_each(|o, &v0, &v1| *o = a * v0 + b * v1);
        ndarray::Zip::from(&mut out.comps[1])
            .and(&self.comps[0])
            .and(&self.comps[1])
            .for_each(|o, &v0, &v1| *o = c * v0 + d * v1);
        out
    }

    /// L2 distance to another field on the same grid.
    pub fn l2_distance(&self, other: &Self) -> Result<T> {
        self.grid.require_same_shape(&other.grid)?;
        let mut acc = T::zero();
        for k in 0..2 {
            for (a, b) in self.comps[k].iter().zip(other.comps[k].iter()) {
                acc = acc + (*a - *b).norm_sqr();
            }
        }
        Ok((acc * self.grid.cell_area()).sqrt())
    }
}

/// Construct a complex unit from re/im parts, a compact test helper.
pub fn cplx<T: Scalar>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_norm_of_single_cell_is_value_times_h() {
        let grid = Grid2D::<f64>::new(16, 8.0).unwrap();
        let mut f = SpinorField::zeros(&grid, 0.0);
        f.set(3, 5, Spinor::new(cplx(3.0, 4.0), cplx(0.0, 0.0)));
        // |v| h with |v| = 5, h = 0.5.
        assert!((f.l2_norm() - 5.0 * 0.5).abs() < 1e-14);
    }

    #[test]
    fn add_sub_roundtrip() {
        let grid = Grid2D::<f64>::new(16, 8.0).unwrap();
        let a = SpinorField::from_fn(&grid, 0.0, |x, y| Spinor::new(cplx(x, y), cplx(x * y, 0.0)));
        let b = SpinorField::from_fn(&grid, 0.0, |x, y| {
            Spinor::new(cplx(y, 0.2 * x), cplx(0.0, y))
        });
        let c = a.add(&b).unwrap().sub(&b).unwrap();
        assert!(c.l2_distance(&a).unwrap() < 1e-13);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let g1 = Grid2D::<f64>::new(16, 8.0).unwrap();
        let g2 = Grid2D::<f64>::new(32, 8.0).unwrap();
        let a = SpinorField::zeros(&g1, 0.0);
        let b = SpinorField::zeros(&g2, 0.0);
        assert!(a.add(&b).is_err());
    }
}

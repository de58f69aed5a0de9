//! Fourier-space grid operators: spectral derivatives, Sobolev norms,
//! dealias masks and weighted suprema.

use crate::error::Result;
use crate::fft::Fft2;
use crate::field::{ScalarField, SpinorField};
use crate::grid::Grid2D;
use crate::scalar::{cast, Scalar, C};
use ndarray::Array2;
use num_complex::Complex;

/// Spatial axis of the grid; `X1` runs along the first (row) index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub fn from_index(a: usize) -> Option<Self> {
        match a {
            1 => Some(Axis::X1),
            2 => Some(Axis::X2),
            _ => None,
        }
    }
}

/// Japanese bracket `<w> = sqrt(1 + w^2)`.
pub fn bracket<T: Scalar>(w: T) -> T {
    (T::one() + w * w).sqrt()
}

/// Shared spectral workhorse. Owns one FFT engine; `&mut self` gives the
/// exclusive checkout the transform workspace needs.
#[derive(Debug, Clone)]
pub struct SpectralOps<T: Scalar> {
    grid: Grid2D<T>,
    fft: Fft2<T>,
}

impl<T: Scalar> SpectralOps<T> {
    pub fn new(grid: &Grid2D<T>) -> Self {
        Self {
            grid: grid.clone(),
            fft: Fft2::new(grid.n()),
        }
    }

    pub fn grid(&self) -> &Grid2D<T> {
        &self.grid
    }

    pub fn forward_plane(&mut self, plane: &mut Array2<C<T>>) {
        self.fft.forward(plane);
    }

    pub fn inverse_plane(&mut self, plane: &mut Array2<C<T>>) {
        self.fft.inverse(plane);
    }

    /// Spectral derivative of one Fourier plane, in place.
    fn derivative_fourier(&self, plane: &mut Array2<C<T>>, axis: Axis) {
        let n = self.grid.n();
        for i in 0..n {
            for j in 0..n {
                let xi = match axis {
                    Axis::X1 => self.grid.wavenumber(i),
                    Axis::X2 => self.grid.wavenumber(j),
                };
                let v = plane[[i, j]];
                plane[[i, j]] = Complex::new(-v.im * xi, v.re * xi);
            }
        }
    }

    /// `∂_a f` for a spinor field via the Fourier multiplier `i ξ_a`.
    pub fn spatial_derivative(&mut self, f: &SpinorField<T>, axis: Axis) -> SpinorField<T> {
        let mut out = f.clone();
        for c in &mut out.comps {
            self.fft.forward(c);
            self.derivative_fourier(c, axis);
            self.fft.inverse(c);
        }
        out
    }

    /// `∂_a f` for a scalar field.
    pub fn spatial_derivative_scalar(&mut self, f: &ScalarField<T>, axis: Axis) -> ScalarField<T> {
        let mut out = f.clone();
        self.fft.forward(&mut out.values);
        self.derivative_fourier(&mut out.values, axis);
        self.fft.inverse(&mut out.values);
        out
    }

    /// Both spatial derivatives with a single forward transform per component.
    pub fn gradient(&mut self, f: &SpinorField<T>) -> (SpinorField<T>, SpinorField<T>) {
        let mut dx = f.clone();
        let mut dy = f.clone();
        for k in 0..2 {
            let mut hat = f.comps[k].clone();
            self.fft.forward(&mut hat);
            let mut hx = hat.clone();
            self.derivative_fourier(&mut hx, Axis::X1);
            self.fft.inverse(&mut hx);
            dx.comps[k] = hx;
            self.derivative_fourier(&mut hat, Axis::X2);
            self.fft.inverse(&mut hat);
            dy.comps[k] = hat;
        }
        (dx, dy)
    }

    /// Discrete `H^s` norm via the multiplier `<ξ>^s`, Parseval-scaled so that
    /// `s = 0` matches the cell-weighted L2 norm.
    pub fn sobolev_norm(&mut self, f: &SpinorField<T>, s: T) -> T {
        let mut planes = [f.comps[0].clone(), f.comps[1].clone()];
        for p in &mut planes {
            self.fft.forward(p);
        }
        self.sobolev_norm_fourier(&planes, s)
    }

    /// `H^s` norm straight from Fourier planes (unnormalized forward data).
    pub fn sobolev_norm_fourier(&self, planes: &[Array2<C<T>>; 2], s: T) -> T {
        let n = self.grid.n();
        let half_s = s / cast::<T>(2.0);
        let mut acc = T::zero();
        for i in 0..n {
            let xi1 = self.grid.wavenumber(i);
            for j in 0..n {
                let xi2 = self.grid.wavenumber(j);
                let k2 = xi1 * xi1 + xi2 * xi2;
                let w = (T::one() + k2).powf(half_s);
                let mag = planes[0][[i, j]].norm_sqr() + planes[1][[i, j]].norm_sqr();
                acc = acc + w * w * mag;
            }
        }
        let scale = self.grid.cell_area() / T::from_usize(n * n).unwrap();
        (acc * scale).sqrt()
    }

    /// Zero every Fourier bin with signed index magnitude above `n/3`,
    /// the standard two-thirds dealias rule, in place on a Fourier plane.
    pub fn dealias_plane(&self, plane: &mut Array2<C<T>>) {
        let n = self.grid.n();
        let cut = n / 3;
        let zero = C::<T>::default();
        for i in 0..n {
            let ki = signed_index(i, n).unsigned_abs();
            for j in 0..n {
                let kj = signed_index(j, n).unsigned_abs();
                if ki > cut || kj > cut {
                    plane[[i, j]] = zero;
                }
            }
        }
    }

    /// Two-thirds mask applied to a real-space spinor field.
    pub fn dealias_field(&mut self, f: &mut SpinorField<T>) {
        for k in 0..2 {
            self.fft.forward(&mut f.comps[k]);
            let mut plane = std::mem::take(&mut f.comps[k]);
            self.dealias_plane(&mut plane);
            self.fft.inverse(&mut plane);
            f.comps[k] = plane;
        }
    }

    /// Round-trip relative error of the transform pair on a given field.
    pub fn roundtrip_error(&mut self, f: &SpinorField<T>) -> Result<T> {
        let mut g = f.clone();
        for c in &mut g.comps {
            self.fft.forward(c);
            self.fft.inverse(c);
        }
        let denom = f.l2_norm().max(T::min_positive_value());
        Ok(g.l2_distance(f)? / denom)
    }
}

/// Signed FFT bin index for bin `k` of `n`: `0..n/2-1, -n/2..-1`.
pub fn signed_index(k: usize, n: usize) -> isize {
    if k < n / 2 {
        k as isize
    } else {
        k as isize - n as isize
    }
}

/// Fine-grid bin holding signed index `s` for transform size `m`.
pub fn bin_for_signed(s: isize, m: usize) -> usize {
    ((s + m as isize) % m as isize) as usize
}

/// Embed an `n`-grid spectrum into an `m > n` grid spectrum (band-limited
/// interpolation), rescaling so real-space amplitudes are preserved.
pub fn pad_spectrum<T: Scalar>(coarse: &Array2<C<T>>, m: usize) -> Array2<C<T>> {
    let n = coarse.dim().0;
    assert!(m >= n);
    let scale = cast::<T>((m * m) as f64 / (n * n) as f64);
    let mut fine = Array2::zeros((m, m));
    for i in 0..n {
        let si = signed_index(i, n);
        let fi = bin_for_signed(si, m);
        for j in 0..n {
            let sj = signed_index(j, n);
            let fj = bin_for_signed(sj, m);
            fine[[fi, fj]] = coarse[[i, j]] * scale;
        }
    }
    fine
}

/// Keep only the bins an `n`-grid can hold from an `m`-grid spectrum, with
/// the inverse amplitude rescale of [`pad_spectrum`].
pub fn truncate_spectrum<T: Scalar>(fine: &Array2<C<T>>, n: usize) -> Array2<C<T>> {
    let m = fine.dim().0;
    assert!(m >= n);
    let scale = cast::<T>((n * n) as f64 / (m * m) as f64);
    let mut coarse = Array2::zeros((n, n));
    for i in 0..n {
        let si = signed_index(i, n);
        let fi = bin_for_signed(si, m);
        for j in 0..n {
            let sj = signed_index(j, n);
            let fj = bin_for_signed(sj, m);
            coarse[[i, j]] = fine[[fi, fj]] * scale;
        }
    }
    coarse
}

/// Weighted supremum `max w(t,x) |f(x)|` with `w = <t+r>^alpha <t-r>^beta`,
/// excluding cells with `r < r_floor` and cells within `seam_margin` cells of
/// the periodic seam. Returns the supremum and its cell location.
pub fn weighted_sup<T: Scalar>(
    f: &SpinorField<T>,
    alpha: T,
    beta: T,
    seam_margin: usize,
) -> (T, (usize, usize)) {
    let grid = &f.grid;
    let n = grid.n();
    let t = f.time;
    let r_floor = grid.r_floor();
    let mut best = T::zero();
    let mut arg = (0, 0);
    for i in 0..n {
        for j in 0..n {
            if grid.near_seam(i, j, seam_margin) {
                continue;
            }
            let r = grid.radius()[[i, j]];
            if r < r_floor {
                continue;
            }
            let w = bracket(t + r).powf(alpha) * bracket(t - r).powf(beta);
            let v = w * f.at(i, j).norm();
            if v > best {
                best = v;
                arg = (i, j);
            }
        }
    }
    (best, arg)
}

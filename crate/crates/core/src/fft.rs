//! 2D FFT engine on square complex planes.
//!
//! Wraps `rustfft` with row/column sweeps and owns its scratch, so a caller
//! holds exclusive access through `&mut self`; clone the engine for use from
//! another thread.

use crate::scalar::{Scalar, C};
use ndarray::Array2;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct Fft2<T: Scalar> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<C<T>>,
    transpose: Vec<C<T>>,
}

impl<T: Scalar> Clone for Fft2<T> {
    fn clone(&self) -> Self {
        Self::new(self.n)
    }
}

impl<T: Scalar> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2(n={})", self.n)
    }
}

impl<T: Scalar> Fft2<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![C::<T>::default(); scratch_len],
            transpose: vec![C::<T>::default(); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn rows(&mut self, data: &mut [C<T>], forward: bool) {
        let plan = if forward {
            &self.forward
        } else {
            &self.inverse
        };
        for row in data.chunks_exact_mut(self.n) {
            plan.process_with_scratch(row, &mut self.scratch);
        }
    }

    fn transpose_into_buf(&mut self, data: &[C<T>]) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                self.transpose[j * n + i] = data[i * n + j];
            }
        }
    }

    /// Unnormalized forward 2D transform, in place.
    pub fn forward(&mut self, plane: &mut Array2<C<T>>) {
        self.transform(plane, true);
    }

    /// Inverse 2D transform normalized by `1/n^2`, in place.
    pub fn inverse(&mut self, plane: &mut Array2<C<T>>) {
        self.transform(plane, false);
        let scale = T::one() / T::from_usize(self.n * self.n).unwrap();
        plane.mapv_inplace(|v| v * scale);
    }

    fn transform(&mut self, plane: &mut Array2<C<T>>, forward: bool) {
        let n = self.n;
        assert_eq!(plane.dim(), (n, n), "plane size does not match engine");
        {
            let data = plane.as_slice_mut().expect("plane must be contiguous");
            self.rows(data, forward);
            self.transpose_into_buf(data);
        }
        // Column pass: run rows of the transposed copy, then transpose back.
        let mut buf = std::mem::take(&mut self.transpose);
        self.rows(&mut buf, forward);
        {
            let data = plane.as_slice_mut().expect("plane must be contiguous");
            for i in 0..n {
                for j in 0..n {
                    data[i * n + j] = buf[j * n + i];
                }
            }
        }
        self.transpose = buf;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn roundtrip_is_identity() {
        let n = 64;
        let mut eng = Fft2::<f64>::new(n);
        let mut plane = Array2::from_shape_fn((n, n), |(i, j)| {
            Complex64::new((i as f64 * 0.37).sin(), (j as f64 * 0.11).cos())
        });
        let orig = plane.clone();
        eng.forward(&mut plane);
        eng.inverse(&mut plane);
        let mut max_err: f64 = 0.0;
        let mut max_val: f64 = 0.0;
        for (a, b) in plane.iter().zip(orig.iter()) {
            max_err = max_err.max((a - b).norm());
            max_val = max_val.max(b.norm());
        }
        assert!(max_err / max_val <= 1e-13, "roundtrip error {max_err}");
    }

    #[test]
    fn single_mode_lands_in_one_bin() {
        let n = 32;
        let mut eng = Fft2::<f64>::new(n);
        // e^{2πi(3 i + 5 j)/n} should produce a delta at bin (3, 5) of height n^2.
        let mut plane = Array2::from_shape_fn((n, n), |(i, j)| {
            let phase = 2.0 * std::f64::consts::PI * (3.0 * i as f64 + 5.0 * j as f64) / n as f64;
            Complex64::new(phase.cos(), phase.sin())
        });
        eng.forward(&mut plane);
        for i in 0..n {
            for j in 0..n {
                let expect = if (i, j) == (3, 5) {
                    (n * n) as f64
                } else {
                    0.0
                };
                assert!(
                    (plane[[i, j]].norm() - expect).abs() < 1e-8,
                    "bin ({i},{j}) = {}",
                    plane[[i, j]]
                );
            }
        }
    }
}

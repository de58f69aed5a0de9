//! Synthetic spacetime test fields with analytic time derivatives.
//!
//! These feed the identity and commutator checks: every jet level is exact,
//! so residuals measure only the grid operators, never a time discretization.

use crate::field::{ScalarField, SpinorField};
use crate::grid::Grid2D;
use crate::scalar::{cast, Scalar, C};
use crate::vector_fields::{FieldJet, ScalarJet};
use num_complex::Complex;

/// Gaussian-envelope plane-wave packet
/// `Φ_c(t,x) = A_c exp(-|x-x0|^2 / (2 w^2)) e^{i(k·x - ω t)}`.
///
/// All time derivatives multiply by `-iω`, so jets of any order are exact.
#[derive(Debug, Clone)]
pub struct GaussianPacket {
    pub amp: [Complex<f64>; 2],
    pub center: [f64; 2],
    pub width: f64,
    pub wavevec: [f64; 2],
    pub omega: f64,
}

impl GaussianPacket {
    /// A few fixed, well-resolved parameter sets for tests.
    pub fn example(which: usize) -> Self {
        let presets = [
            GaussianPacket {
                amp: [Complex::new(1.0, 0.0), Complex::new(0.3, -0.2)],
                center: [0.6, -0.4],
                width: 1.6,
                wavevec: [1.2, -0.8],
                omega: 1.4,
            },
            GaussianPacket {
                amp: [Complex::new(0.4, 0.7), Complex::new(-0.5, 0.1)],
                center: [-1.0, 0.2],
                width: 2.0,
                wavevec: [0.6, 1.1],
                omega: 0.9,
            },
            GaussianPacket {
                amp: [Complex::new(0.8, -0.1), Complex::new(0.2, 0.6)],
                center: [0.0, 0.8],
                width: 1.8,
                wavevec: [-0.9, 0.5],
                omega: 2.1,
            },
        ];
        presets[which % presets.len()].clone()
    }

    fn cell<T: Scalar>(&self, x: T, y: T, t: T, level: usize, comp: usize) -> C<T> {
        let dx = x - cast::<T>(self.center[0]);
        let dy = y - cast::<T>(self.center[1]);
        let w = cast::<T>(self.width);
        let env = (-(dx * dx + dy * dy) / (cast::<T>(2.0) * w * w)).exp();
        let phase = cast::<T>(self.wavevec[0]) * x + cast::<T>(self.wavevec[1]) * y
            - cast::<T>(self.omega) * t;
        let osc = Complex::new(T::zero(), phase).exp();
        let amp = Complex::new(cast::<T>(self.amp[comp].re), cast::<T>(self.amp[comp].im));
        let minus_i_omega = Complex::new(T::zero(), -cast::<T>(self.omega));
        let mut factor = Complex::new(T::one(), T::zero());
        for _ in 0..level {
            factor = factor * minus_i_omega;
        }
        amp * osc * factor * env
    }

    /// Spinor jet `(Φ, ∂_tΦ, ..., ∂_t^order Φ)` at time `t`.
    pub fn spinor_jet<T: Scalar>(&self, grid: &Grid2D<T>, t: f64, order: usize) -> FieldJet<T> {
        let tt = cast::<T>(t);
        let mut levels = Vec::with_capacity(order + 1);
        for m in 0..=order {
            let mut f = SpinorField::zeros(grid, tt);
            let n = grid.n();
            for i in 0..n {
                for j in 0..n {
                    let x = grid.coord(i);
                    let y = grid.coord(j);
                    f.comps[0][[i, j]] = self.cell(x, y, tt, m, 0);
                    f.comps[1][[i, j]] = self.cell(x, y, tt, m, 1);
                }
            }
            levels.push(f);
        }
        FieldJet::new(levels)
    }

    /// Scalar jet built from the first component.
    pub fn scalar_jet<T: Scalar>(&self, grid: &Grid2D<T>, t: f64, order: usize) -> ScalarJet<T> {
        let tt = cast::<T>(t);
        let mut levels = Vec::with_capacity(order + 1);
        for m in 0..=order {
            let mut f = ScalarField::zeros(grid, tt);
            let n = grid.n();
            for i in 0..n {
                for j in 0..n {
                    let x = grid.coord(i);
                    let y = grid.coord(j);
                    f.values[[i, j]] = self.cell(x, y, tt, m, 0);
                }
            }
            levels.push(f);
        }
        ScalarJet::new(levels)
    }
}

/// Outgoing radial pulse `u(t,x) = g(r-t) (1+r^2)^{-1/4}` with a Gaussian
/// profile `g(s) = exp(-s^2/(2σ^2))`; time derivatives are `∓g'`, `g''`.
///
/// The radial factor is smooth in `x` (it is a function of `r^2`), so the
/// only non-smooth point is the weak cusp of `g(r-t)` at the origin, far from
/// the pulse once `t >> σ`.
#[derive(Debug, Clone)]
pub struct OutgoingPulse {
    pub sigma: f64,
}

impl OutgoingPulse {
    pub fn new(sigma: f64) -> Self {
        Self { sigma }
    }

    fn profile(&self, s: f64, order: usize) -> f64 {
        let sig2 = self.sigma * self.sigma;
        let g = (-s * s / (2.0 * sig2)).exp();
        match order {
            0 => g,
            1 => -s / sig2 * g,
            2 => (s * s / (sig2 * sig2) - 1.0 / sig2) * g,
            _ => unreachable!("profile derivatives above 2 are not needed"),
        }
    }

    /// Scalar jet of order 2 at time `t`.
    pub fn scalar_jet<T: Scalar>(&self, grid: &Grid2D<T>, t: f64) -> ScalarJet<T> {
        let tt = cast::<T>(t);
        let n = grid.n();
        let mut levels = Vec::with_capacity(3);
        for m in 0..3usize {
            let mut f = ScalarField::zeros(grid, tt);
            for i in 0..n {
                for j in 0..n {
                    let x = grid.coord(i).to_f64_lossy();
                    let y = grid.coord(j).to_f64_lossy();
                    let r = (x * x + y * y).sqrt();
                    let eta = (1.0 + r * r).powf(-0.25);
                    // ∂_t^m g(r-t) = (-1)^m g^{(m)}(r-t)
                    let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
                    let v = sign * self.profile(r - t, m) * eta;
                    f.values[[i, j]] = Complex::new(cast::<T>(v), T::zero());
                }
            }
            levels.push(f);
        }
        ScalarJet::new(levels)
    }
}

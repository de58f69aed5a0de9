//! Exact Fourier-space flows: the linear Dirac group and the forced linear
//! wave flow used by the companion construction.
//!
//! Per mode the Dirac symbol is the Hermitian matrix
//! `M(ξ) = ξ_a γ0 γ^a - m γ0` with `M^2 = (|ξ|^2 + m^2) I`, so the flow
//! `e^{-i dt M} = cos(ω dt) I - i sin(ω dt)/ω M` is closed-form and exactly
//! unitary per mode; the `ω -> 0` limit is handled analytically.

use crate::algebra::{GammaRep, Mat2};
use crate::error::Result;
use crate::field::SpinorField;
use crate::grid::Grid2D;
use crate::scalar::{cast, im, re, Scalar, C};
use crate::spectral::SpectralOps;
use ndarray::Array2;

/// The per-mode Dirac symbol `M(ξ)` and its frequency `ω(ξ)`.
#[derive(Debug, Clone)]
pub struct DiracSymbol<T: Scalar> {
    grid: Grid2D<T>,
    mass: T,
    /// `M(ξ)` per mode, FFT bin layout.
    pub matrices: Array2<Mat2<T>>,
    /// `ω(ξ) = sqrt(|ξ|^2 + m^2)` per mode.
    pub omega: Array2<T>,
}

impl<T: Scalar> DiracSymbol<T> {
    pub fn new(grid: &Grid2D<T>, rep: &GammaRep<T>, mass: T) -> Self {
        let n = grid.n();
        let mut matrices = Array2::from_elem((n, n), Mat2::zero());
        let mut omega = Array2::zeros((n, n));
        for i in 0..n {
            let xi1 = grid.wavenumber(i);
            for j in 0..n {
                let xi2 = grid.wavenumber(j);
                let mut m = rep.gamma0_gamma[0]
                    .scale(re(xi1))
                    .add(&rep.gamma0_gamma[1].scale(re(xi2)));
                if mass != T::zero() {
                    m = m.sub(&rep.gamma[0].scale(re(mass)));
                }
                matrices[[i, j]] = m;
                omega[[i, j]] = (xi1 * xi1 + xi2 * xi2 + mass * mass).sqrt();
            }
        }
        Self {
            grid: grid.clone(),
            mass,
            matrices,
            omega,
        }
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn grid(&self) -> &Grid2D<T> {
        &self.grid
    }

    /// Flow matrix `e^{-i dt M(ξ)}` for one mode.
    pub fn flow_matrix(&self, i: usize, j: usize, dt: T) -> Mat2<T> {
        let w = self.omega[[i, j]];
        let phase = w * dt;
        let (c, sinc) = if w == T::zero() {
            // ω = 0 only at the zero mode of a massless run, where M = 0.
            (T::one(), dt)
        } else {
            (phase.cos(), phase.sin() / w)
        };
        let mut out = Mat2::identity().scale(re(c));
        out = out.sub(&self.matrices[[i, j]].scale(im::<T>() * sinc));
        out
    }

    /// Largest entrywise residual of `M(ξ)^2 - ω(ξ)^2 I` over all modes.
    pub fn squared_symbol_residual(&self) -> T {
        let n = self.grid.n();
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                let m = &self.matrices[[i, j]];
                let w2 = self.omega[[i, j]] * self.omega[[i, j]];
                let res = m.mul(m).sub(&Mat2::identity().scale(re(w2))).max_abs();
                let rel = res / (T::one() + w2);
                if rel > worst {
                    worst = rel;
                }
            }
        }
        worst
    }
}

/// Precomputed per-mode flow for a fixed time step.
#[derive(Debug, Clone)]
pub struct DiracFlowTable<T: Scalar> {
    pub dt: T,
    pub matrices: Array2<Mat2<T>>,
}

impl<T: Scalar> DiracFlowTable<T> {
    pub fn new(symbol: &DiracSymbol<T>, dt: T) -> Self {
        let n = symbol.grid.n();
        let mut matrices = Array2::from_elem((n, n), Mat2::identity());
        for i in 0..n {
            for j in 0..n {
                matrices[[i, j]] = symbol.flow_matrix(i, j, dt);
            }
        }
        Self { dt, matrices }
    }

    /// Apply the tabulated flow to Fourier planes in place.
    pub fn apply(&self, planes: &mut [Array2<C<T>>; 2]) {
        let (p0, p1) = planes.split_at_mut(1);
        let a = &mut p0[0];
        let b = &mut p1[0];
        ndarray::Zip::from(a)
            .and(b)
            .and(&self.matrices)
            .for_each(|v0, v1, m| {
                let w0 = m.e[0][0] * *v0 + m.e[0][1] * *v1;
                let w1 = m.e[1][0] * *v0 + m.e[1][1] * *v1;
                *v0 = w0;
                *v1 = w1;
            });
    }
}

/// Apply the linear Dirac group `S(dt)` to a real-space field.
pub fn dirac_flow<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    psi: &SpinorField<T>,
    dt: T,
    mass: T,
) -> SpinorField<T> {
    let symbol = DiracSymbol::new(&psi.grid, rep, mass);
    dirac_flow_with_symbol(ops, &symbol, psi, dt)
}

/// As [`dirac_flow`] with a precomputed symbol.
pub fn dirac_flow_with_symbol<T: Scalar>(
    ops: &mut SpectralOps<T>,
    symbol: &DiracSymbol<T>,
    psi: &SpinorField<T>,
    dt: T,
) -> SpinorField<T> {
    let mut out = psi.clone();
    for c in &mut out.comps {
        ops.forward_plane(c);
    }
    apply_flow_fourier(symbol, &mut out.comps, dt);
    for c in &mut out.comps {
        ops.inverse_plane(c);
    }
    out.time = psi.time + dt;
    out
}

/// Apply `e^{-i dt M(ξ)}` to Fourier planes in place.
pub fn apply_flow_fourier<T: Scalar>(
    symbol: &DiracSymbol<T>,
    planes: &mut [Array2<C<T>>; 2],
    dt: T,
) {
    let n = symbol.grid.n();
    for i in 0..n {
        for j in 0..n {
            let m = symbol.flow_matrix(i, j, dt);
            let v0 = planes[0][[i, j]];
            let v1 = planes[1][[i, j]];
            planes[0][[i, j]] = m.e[0][0] * v0 + m.e[0][1] * v1;
            planes[1][[i, j]] = m.e[1][0] * v0 + m.e[1][1] * v1;
        }
    }
}

/// Inverse group element: `dirac_flow` with `dt` negated.
pub fn dirac_flow_inverse<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    psi: &SpinorField<T>,
    dt: T,
    mass: T,
) -> SpinorField<T> {
    dirac_flow(ops, rep, psi, -dt, mass)
}

/// Wave companion state `(Ψ, ∂_tΨ)`, kept in Fourier space so the
/// homogeneous rotation is applied per mode without transforms.
#[derive(Debug, Clone)]
pub struct WaveState<T: Scalar> {
    pub grid: Grid2D<T>,
    pub time: T,
    /// Fourier planes of `Ψ` (two spinor components).
    pub psi_hat: [Array2<C<T>>; 2],
    /// Fourier planes of `∂_tΨ`.
    pub dpsi_hat: [Array2<C<T>>; 2],
}

impl<T: Scalar> WaveState<T> {
    pub fn zeros(grid: &Grid2D<T>, time: T) -> Self {
        let n = grid.n();
        Self {
            grid: grid.clone(),
            time,
            psi_hat: [Array2::zeros((n, n)), Array2::zeros((n, n))],
            dpsi_hat: [Array2::zeros((n, n)), Array2::zeros((n, n))],
        }
    }

    /// Real-space `Ψ` at the current time.
    pub fn psi_real(&self, ops: &mut SpectralOps<T>) -> SpinorField<T> {
        let mut f = SpinorField::zeros(&self.grid, self.time);
        for k in 0..2 {
            let mut p = self.psi_hat[k].clone();
            ops.inverse_plane(&mut p);
            f.comps[k] = p;
        }
        f
    }

    /// Real-space `∂_tΨ` at the current time.
    pub fn dpsi_real(&self, ops: &mut SpectralOps<T>) -> SpinorField<T> {
        let mut f = SpinorField::zeros(&self.grid, self.time);
        for k in 0..2 {
            let mut p = self.dpsi_hat[k].clone();
            ops.inverse_plane(&mut p);
            f.comps[k] = p;
        }
        f
    }

    pub fn is_finite(&self) -> bool {
        self.psi_hat
            .iter()
            .chain(self.dpsi_hat.iter())
            .all(|p| p.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }
}

/// Companion data `(Ψ, ∂_tΨ)|_{t=0} = (0, -iγ0 ψ0)`.
pub fn init_wave_companion<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    psi0: &SpinorField<T>,
) -> WaveState<T> {
    let mut state = WaveState::zeros(&psi0.grid, psi0.time);
    let v = psi0.apply_matrix(&rep.gamma[0]).scaled(-im::<T>());
    for k in 0..2 {
        let mut p = v.comps[k].clone();
        ops.forward_plane(&mut p);
        state.dpsi_hat[k] = p;
    }
    state
}

/// Per-mode coefficients of one homogeneous wave step plus the trapezoidal
/// Duhamel correction for endpoint-sampled sources.
#[derive(Debug, Clone)]
pub struct WaveFlowTable<T: Scalar> {
    pub dt: T,
    /// `cos(|ξ| dt)`
    cos: Array2<T>,
    /// `sin(|ξ| dt)/|ξ|` with the `|ξ| -> 0` limit `dt`
    sinc: Array2<T>,
    /// `-|ξ| sin(|ξ| dt)`
    msin: Array2<T>,
}

impl<T: Scalar> WaveFlowTable<T> {
    pub fn new(grid: &Grid2D<T>, dt: T) -> Self {
        let n = grid.n();
        let mut cos = Array2::zeros((n, n));
        let mut sinc = Array2::zeros((n, n));
        let mut msin = Array2::zeros((n, n));
        for i in 0..n {
            let xi1 = grid.wavenumber(i);
            for j in 0..n {
                let xi2 = grid.wavenumber(j);
                let k = (xi1 * xi1 + xi2 * xi2).sqrt();
                let phase = k * dt;
                cos[[i, j]] = phase.cos();
                sinc[[i, j]] = if k == T::zero() { dt } else { phase.sin() / k };
                msin[[i, j]] = -k * phase.sin();
            }
        }
        Self {
            dt,
            cos,
            sinc,
            msin,
        }
    }
}

/// Advance the wave state by one step of `∂_t^2 Ψ = ΔΨ - F` with the exact
/// homogeneous rotation and a trapezoidal Duhamel term; the sources are the
/// Fourier transforms of `F` at the step endpoints.
pub fn wave_flow_step<T: Scalar>(
    state: &mut WaveState<T>,
    table: &WaveFlowTable<T>,
    source_at_t0: &[Array2<C<T>>; 2],
    source_at_t1: &[Array2<C<T>>; 2],
) {
    let dt = table.dt;
    let half_dt = dt * cast::<T>(0.5);
    for k in 0..2 {
        ndarray::Zip::from(&mut state.psi_hat[k])
            .and(&mut state.dpsi_hat[k])
            .and(&table.cos)
            .and(&table.sinc)
            .and(&table.msin)
            .for_each(|p, v, &c, &s, &ms| {
                let p0 = *p;
                let v0 = *v;
                *p = p0 * c + v0 * s;
                *v = p0 * ms + v0 * c;
            });
        // Duhamel with g = -F: the Ψ kernel at the left endpoint is
        // sin(|ξ| dt)/|ξ| and vanishes at the right endpoint; the ∂_tΨ
        // kernel is cos at the left endpoint and 1 at the right.
        ndarray::Zip::from(&mut state.psi_hat[k])
            .and(&source_at_t0[k])
            .and(&table.sinc)
            .for_each(|p, &g0, &s| {
                *p = *p - g0 * (half_dt * s);
            });
        ndarray::Zip::from(&mut state.dpsi_hat[k])
            .and(&source_at_t0[k])
            .and(&source_at_t1[k])
            .and(&table.cos)
            .for_each(|v, &g0, &g1, &c| {
                *v = *v - (g0 * c + g1) * half_dt;
            });
    }
    state.time = state.time + dt;
}

/// Reconstruct `𝒟Ψ = iγ0 ∂_tΨ + iγ^a ∂_aΨ` from a wave state, using the
/// stored `∂_tΨ` rather than any differencing.
pub fn dirac_of_wave<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    state: &WaveState<T>,
) -> Result<SpinorField<T>> {
    let psi = state.psi_real(ops);
    let dpsi = state.dpsi_real(ops);
    crate::vector_fields::dirac_apply(ops, rep, &psi, &dpsi)
}

//! Scattering-state construction and the linear-comparison error report.
//!
//! The run accumulates `∫_0^T S(-τ) γ0 F̂(τ) dτ` in Fourier space; the
//! truncated scattering state is `ψ+_T = ψ0 - i (that integral)`, compared
//! against the trajectory through `||ψ(t) - S(t) ψ+||_{H^s}`.

use crate::algebra::GammaRep;
use crate::error::{Error, Result};
use crate::evolve::RunArtifacts;
use crate::field::SpinorField;
use crate::propagator::{apply_flow_fourier, DiracSymbol};
use crate::scalar::{cast, Scalar, C};
use crate::spectral::{bracket, SpectralOps};
use ndarray::Array2;

/// One comparison sample of the report.
#[derive(Debug, Clone, Copy)]
pub struct ScatterSample<T: Scalar> {
    pub t: T,
    /// `||ψ(t) - S(t)ψ+||_{H^s}` for `s = 0..3`.
    pub err: [T; 4],
    /// `err / (<t>^{-1/2} ln(2+t))`.
    pub ratio: [T; 4],
    /// `∫_t^{t_end} ||F(τ)||_{H^s} dτ`.
    pub tail: [T; 4],
    /// `| ||S(t)ψ+|| - ||ψ+|| | / ||ψ+||` in `H^0`, a unitarity control.
    pub unitarity_drift: T,
}

#[derive(Debug, Clone)]
pub struct ScatteringReport<T: Scalar> {
    /// Set when the run's `H` is not `γ0`: the comparison is still computed
    /// but the scattering theory behind it only covers the `γ0` cubic term.
    pub heuristic: bool,
    pub samples: Vec<ScatterSample<T>>,
}

impl<T: Scalar> ScatteringReport<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t,err_h0,err_h1,err_h2,err_h3,ratio_h0,ratio_h1,ratio_h2,ratio_h3,tail_h0,tail_h1,tail_h2,tail_h3\n",
        );
        for s in &self.samples {
            let f = |v: T| format!("{:.16e}", v);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                f(s.t),
                f(s.err[0]),
                f(s.err[1]),
                f(s.err[2]),
                f(s.err[3]),
                f(s.ratio[0]),
                f(s.ratio[1]),
                f(s.ratio[2]),
                f(s.ratio[3]),
                f(s.tail[0]),
                f(s.tail[1]),
                f(s.tail[2]),
                f(s.tail[3]),
            ));
        }
        out
    }
}

/// The truncated scattering state produced by the run.
pub fn finalize_scattering_state<T: Scalar>(art: &RunArtifacts<T>) -> Result<&SpinorField<T>> {
    art.psi_plus.as_ref().ok_or(Error::AccumulatorDisabled)
}

/// Tail `∫_t^{t_end}` of the running `||F||_{H^s}` integrals at a sample
/// time, linearly interpolated between rows.
fn tail_at<T: Scalar>(series: &[(T, [T; 4])], t: T) -> [T; 4] {
    let total = series.last().map(|(_, v)| *v).unwrap_or([T::zero(); 4]);
    let mut at = series.first().map(|(_, v)| *v).unwrap_or([T::zero(); 4]);
    for w in series.windows(2) {
        let (t0, v0) = w[0];
        let (t1, v1) = w[1];
        if t <= t0 {
            at = v0;
            break;
        }
        if t <= t1 {
            let u = if t1 > t0 {
                (t - t0) / (t1 - t0)
            } else {
                T::zero()
            };
            for s in 0..4 {
                at[s] = v0[s] + (v1[s] - v0[s]) * u;
            }
            break;
        }
        at = v1;
    }
    let mut out = [T::zero(); 4];
    for s in 0..4 {
        out[s] = (total[s] - at[s]).max(T::zero());
    }
    out
}

/// Compare trajectory snapshots against the free evolution of `ψ+`.
pub fn scattering_error<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    mass: T,
    snapshots: &[SpinorField<T>],
    psi_plus: &SpinorField<T>,
    f_hs_integral_series: &[(T, [T; 4])],
) -> Result<ScatteringReport<T>> {
    let symbol = DiracSymbol::new(&psi_plus.grid, rep, mass);
    let mut plus_hat: [Array2<C<T>>; 2] = [psi_plus.comps[0].clone(), psi_plus.comps[1].clone()];
    for p in &mut plus_hat {
        ops.forward_plane(p);
    }
    let plus_norm = ops.sobolev_norm_fourier(&plus_hat, T::zero());
    let mut samples = Vec::with_capacity(snapshots.len());
    for snap in snapshots {
        psi_plus.grid.require_same_shape(&snap.grid)?;
        let t = snap.time;
        // S(t) ψ+ in Fourier space.
        let mut flowed = plus_hat.clone();
        apply_flow_fourier(&symbol, &mut flowed, t);
        let flowed_norm = ops.sobolev_norm_fourier(&flowed, T::zero());
        let unitarity_drift = if plus_norm > T::zero() {
            (flowed_norm - plus_norm).abs() / plus_norm
        } else {
            T::zero()
        };
        let mut snap_hat: [Array2<C<T>>; 2] = [snap.comps[0].clone(), snap.comps[1].clone()];
        for p in &mut snap_hat {
            ops.forward_plane(p);
        }
        for k in 0..2 {
            snap_hat[k] = &snap_hat[k] - &flowed[k];
        }
        let err = [
            ops.sobolev_norm_fourier(&snap_hat, T::zero()),
            ops.sobolev_norm_fourier(&snap_hat, T::one()),
            ops.sobolev_norm_fourier(&snap_hat, cast::<T>(2.0)),
            ops.sobolev_norm_fourier(&snap_hat, cast::<T>(3.0)),
        ];
        let weight = bracket(t).powf(cast::<T>(-0.5)) * (cast::<T>(2.0) + t).ln();
        let mut ratio = [T::zero(); 4];
        for s in 0..4 {
            ratio[s] = err[s] / weight;
        }
        let tail = tail_at(f_hs_integral_series, t);
        samples.push(ScatterSample {
            t,
            err,
            ratio,
            tail,
            unitarity_drift,
        });
    }
    Ok(ScatteringReport {
        heuristic: !rep.h_is_gamma0(),
        samples,
    })
}

/// `(||ψ+_{t2} - ψ+_{t1}||_{H^0}, ∫_{t1}^{t2} ||F||_{H^0} dτ)`: the first
/// must not exceed the second beyond quadrature tolerance.
pub fn truncation_consistency<T: Scalar>(
    ops: &mut SpectralOps<T>,
    early: &SpinorField<T>,
    late: &SpinorField<T>,
    f_hs_integral_series: &[(T, [T; 4])],
    t1: T,
    t2: T,
) -> Result<(T, T)> {
    let diff = late.sub(early)?;
    let lhs = ops.sobolev_norm(&diff, T::zero());
    let tail1 = tail_at(f_hs_integral_series, t1);
    let tail2 = tail_at(f_hs_integral_series, t2);
    Ok((lhs, tail1[0] - tail2[0]))
}

//! Pseudospectral simulator and diagnostics suite for the 2D cubic Dirac
//! equation on a periodic grid.
//!
//! The library evolves complex 2-spinor fields under
//! `i γ^μ ∂_μ ψ + m ψ = (ψ* H ψ) ψ`
//! with an exact Fourier-space linear flow and Strang splitting, co-evolves
//! the wave companion `□Ψ = F`, and computes the decay, energy-balance and
//! scattering diagnostics that the solver is built to monitor.
//!
//! All numerics are generic over the scalar type (`f32`/`f64`) through the
//! [`scalar::Scalar`] trait; the concrete double-precision aliases below are
//! what the CLI and the test suites use.

pub mod algebra;
pub mod config;
pub mod diagnostics;
pub mod evolve;
pub mod fft;
pub mod field;
pub mod grid;
pub mod identities;
pub mod propagator;
pub mod scalar;
pub mod scattering;
pub mod snapshot;
pub mod spectral;
pub mod synthetic;
pub mod vector_fields;

mod error;

pub use error::Error;
pub use scalar::Scalar;

/// Default scalar type used by the CLI and the shipped diagnostics.
pub type Real = f64;

/// Concrete double-precision instantiations of the core types.
pub type Grid2D64 = grid::Grid2D<f64>;
pub type SpinorField64 = field::SpinorField<f64>;
pub type ScalarField64 = field::ScalarField<f64>;
pub type GammaRep64 = algebra::GammaRep<f64>;
pub type Spinor64 = algebra::Spinor<f64>;
pub type Mat2x64 = algebra::Mat2<f64>;
pub type WaveState64 = propagator::WaveState<f64>;
pub type TrajectoryState64 = evolve::TrajectoryState<f64>;
pub type DiagnosticsRow64 = diagnostics::DiagnosticsRow<f64>;

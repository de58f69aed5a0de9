//! Exact 2x2 complex matrix algebra: Dirac matrices, the radial projectors
//! `T±`, and the cubic nonlinearity `F(ψ) = (ψ* H ψ) ψ`.
//!
//! Everything here is a pure function on small values and is safe to call
//! concurrently.

use crate::error::{Error, Result};
use crate::scalar::{im, re, Scalar, C};
use num_complex::Complex;

/// Complex 2-spinor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor<T: Scalar> {
    pub c0: C<T>,
    pub c1: C<T>,
}

impl<T: Scalar> Spinor<T> {
    pub fn new(c0: C<T>, c1: C<T>) -> Self {
        Self { c0, c1 }
    }

    pub fn zero() -> Self {
        Self::new(
            Complex::new(T::zero(), T::zero()),
            Complex::new(T::zero(), T::zero()),
        )
    }

    /// Euclidean magnitude `sqrt(|c0|^2 + |c1|^2)`.
    pub fn norm(&self) -> T {
        (self.c0.norm_sqr() + self.c1.norm_sqr()).sqrt()
    }

    pub fn norm_sqr(&self) -> T {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    /// Hermitian inner product `self* other`.
    pub fn dot(&self, other: &Self) -> C<T> {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self::new(self.c0 * s, self.c1 * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.c0 + other.c0, self.c1 + other.c1)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.c0 - other.c0, self.c1 - other.c1)
    }

    pub fn is_finite(&self) -> bool {
        self.c0.re.is_finite()
            && self.c0.im.is_finite()
            && self.c1.re.is_finite()
            && self.c1.im.is_finite()
    }
}

/// Dense 2x2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T: Scalar> {
    pub e: [[C<T>; 2]; 2],
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> Self {
        Self {
            e: [[a, b], [c, d]],
        }
    }

    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(z, z, z, z)
    }

    pub fn identity() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        let o = Complex::new(T::one(), T::zero());
        Self::new(o, z, z, o)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.e[i][j] = self.e[i][0] * rhs.e[0][j] + self.e[i][1] * rhs.e[1][j];
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.e[i][j] = out.e[i][j] + rhs.e[i][j];
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.e[i][j] = out.e[i][j] - rhs.e[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.e[i][j] = out.e[i][j] * s;
            }
        }
        out
    }

    /// Hermitian conjugate.
    pub fn adjoint(&self) -> Self {
        Self::new(
            self.e[0][0].conj(),
            self.e[1][0].conj(),
            self.e[0][1].conj(),
            self.e[1][1].conj(),
        )
    }

    pub fn apply(&self, v: &Spinor<T>) -> Spinor<T> {
        Spinor::new(
            self.e[0][0] * v.c0 + self.e[0][1] * v.c1,
            self.e[1][0] * v.c0 + self.e[1][1] * v.c1,
        )
    }

    /// Largest entrywise absolute value.
    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                m = m.max(self.e[i][j].norm());
            }
        }
        m
    }
}

/// Minkowski metric `g = diag(-1, 1, 1)`, upper or lower indices alike.
pub fn metric<T: Scalar>(mu: usize, nu: usize) -> T {
    if mu != nu {
        T::zero()
    } else if mu == 0 {
        -T::one()
    } else {
        T::one()
    }
}

/// The concrete Dirac matrices together with the interaction matrix `H`.
///
/// The fixed representation is `γ0 = [[1,0],[0,-1]]`, `γ1 = [[0,i],[i,0]]`,
/// `γ2 = [[0,1],[-1,0]]`; the Clifford relations are verified in tests rather
/// than trusted.
#[derive(Debug, Clone)]
pub struct GammaRep<T: Scalar> {
    pub gamma: [Mat2<T>; 3],
    pub h_matrix: Mat2<T>,
    /// Products `γ0 γ1`, `γ0 γ2` used by the symbol and the projectors.
    pub gamma0_gamma: [Mat2<T>; 2],
    /// Product `γ1 γ2` used by the modified rotation.
    pub gamma1_gamma2: Mat2<T>,
}

/// Build the fixed representation and store the interaction matrix.
pub fn make_default_rep<T: Scalar>(h_matrix: Mat2<T>) -> GammaRep<T> {
    let z = Complex::new(T::zero(), T::zero());
    let one = re(T::one());
    let i = im::<T>();
    let gamma0 = Mat2::new(one, z, z, -one);
    let gamma1 = Mat2::new(z, i, i, z);
    let gamma2 = Mat2::new(z, one, -one, z);
    let gamma0_gamma = [gamma0.mul(&gamma1), gamma0.mul(&gamma2)];
    let gamma1_gamma2 = gamma1.mul(&gamma2);
    GammaRep {
        gamma: [gamma0, gamma1, gamma2],
        h_matrix,
        gamma0_gamma,
        gamma1_gamma2,
    }
}

impl<T: Scalar> GammaRep<T> {
    /// `γ^μ γ^ν + γ^ν γ^μ`; the Clifford relations say this is `-2 g^{μν} I`.
    pub fn anticommutator(&self, mu: usize, nu: usize) -> Result<Mat2<T>> {
        if mu > 2 {
            return Err(Error::IndexOutOfRange(mu));
        }
        if nu > 2 {
            return Err(Error::IndexOutOfRange(nu));
        }
        let a = &self.gamma[mu];
        let b = &self.gamma[nu];
        Ok(a.mul(b).add(&b.mul(a)))
    }

    /// The radial matrices `(T-, T+) = I ∓ (x_a/r) γ0 γ^a`.
    ///
    /// Below `r_floor` the direction `x_a/r` is undefined and both matrices
    /// degenerate to the identity; weighted diagnostics exclude those cells.
    pub fn t_projectors(&self, x: [T; 2], r_floor: T) -> (Mat2<T>, Mat2<T>) {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r < r_floor {
            return (Mat2::identity(), Mat2::identity());
        }
        let p = self.gamma0_gamma[0]
            .scale(re(x[0] / r))
            .add(&self.gamma0_gamma[1].scale(re(x[1] / r)));
        let id = Mat2::identity();
        (id.sub(&p), id.add(&p))
    }

    /// Split `ψ` into `([ψ]-, [ψ]+) = (T- ψ, T+ ψ)`; the halves average back
    /// to `ψ` exactly.
    pub fn decompose(&self, psi: &Spinor<T>, x: [T; 2], r_floor: T) -> (Spinor<T>, Spinor<T>) {
        let (tm, tp) = self.t_projectors(x, r_floor);
        (tm.apply(psi), tp.apply(psi))
    }

    /// Residual of the pairing identity
    /// `φ*γ0Φ = ([φ]-*γ0[Φ]+ + [φ]+*γ0[Φ]-)/4`.
    pub fn pairing_identity_residual(
        &self,
        phi: &Spinor<T>,
        cap_phi: &Spinor<T>,
        x: [T; 2],
        r_floor: T,
    ) -> C<T> {
        let g0 = &self.gamma[0];
        let lhs = phi.dot(&g0.apply(cap_phi));
        let (pm, pp) = self.decompose(phi, x, r_floor);
        let (qm, qp) = self.decompose(cap_phi, x, r_floor);
        let quarter = re(T::from_f64_lossy(0.25));
        let rhs = (pm.dot(&g0.apply(&qp)) + pp.dot(&g0.apply(&qm))) * quarter;
        lhs - rhs
    }

    /// Cubic nonlinearity `F(ψ) = (ψ* H ψ) ψ`.
    pub fn cubic_nonlinearity(&self, psi: &Spinor<T>) -> Spinor<T> {
        let rho = psi.dot(&self.h_matrix.apply(psi));
        psi.scale(rho)
    }

    /// The density `ψ* H ψ` (real when `H` is Hermitian).
    pub fn interaction_density(&self, psi: &Spinor<T>) -> C<T> {
        psi.dot(&self.h_matrix.apply(psi))
    }

    /// Whether the stored `H` is Hermitian to a relative tolerance.
    pub fn h_is_hermitian(&self, tol: T) -> bool {
        let d = self.h_matrix.sub(&self.h_matrix.adjoint()).max_abs();
        d <= tol * (T::one() + self.h_matrix.max_abs())
    }

    /// Whether the stored `H` equals `γ0` exactly.
    pub fn h_is_gamma0(&self) -> bool {
        self.h_matrix.sub(&self.gamma[0]).max_abs() == T::zero()
    }
}

//! The named self-verification suite: every algebraic, commutator and
//! pairing identity the solver relies on, evaluated on synthetic fields with
//! a recorded residual and tolerance. The CLI `check-identities` command and
//! the acceptance tests both run this list.

use crate::algebra::{make_default_rep, metric, GammaRep, Mat2, Spinor};
use crate::error::Result;
use crate::grid::Grid2D;
use crate::scalar::re;
use crate::spectral::SpectralOps;
use crate::synthetic::{GaussianPacket, OutgoingPulse};
use crate::vector_fields::{
    apply_gamma_jet, apply_gamma_jet_scalar, dirac_jet, good_derivative, jet_product, NUM_FIELDS,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One named identity with its measured residual.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tolerance
    }
}

fn check(name: impl Into<String>, residual: f64, tolerance: f64) -> IdentityCheck {
    IdentityCheck {
        name: name.into(),
        residual,
        tolerance,
    }
}

/// Algebraic identities of the matrices alone (no grid).
pub fn algebraic_checks(rep: &GammaRep<f64>) -> Vec<IdentityCheck> {
    let mut out = Vec::new();
    for mu in 0..3 {
        for nu in 0..3 {
            let ac = rep.anticommutator(mu, nu).expect("indices in range");
            let expected =
                Mat2::identity().scale(Complex64::new(-2.0 * metric::<f64>(mu, nu), 0.0));
            out.push(check(
                format!("clifford({mu},{nu})"),
                ac.sub(&expected).max_abs(),
                1e-12,
            ));
        }
    }
    out.push(check(
        "gamma0 hermitian",
        rep.gamma[0].sub(&rep.gamma[0].adjoint()).max_abs(),
        1e-14,
    ));
    for a in 1..3 {
        out.push(check(
            format!("gamma{a} anti-hermitian"),
            rep.gamma[a].add(&rep.gamma[a].adjoint()).max_abs(),
            1e-14,
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst_minus: f64 = 0.0;
    let mut worst_plus: f64 = 0.0;
    for _ in 0..200 {
        let x: [f64; 2] = [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
        if (x[0] * x[0] + x[1] * x[1]).sqrt() < 0.1 {
            continue;
        }
        let (tm, tp) = rep.t_projectors(x, 0.1);
        worst_minus = worst_minus.max(tm.mul(&rep.gamma[0]).mul(&tm).max_abs());
        worst_plus = worst_plus.max(tp.mul(&rep.gamma[0]).mul(&tp).max_abs());
    }
    out.push(check("T- gamma0 T- = 0", worst_minus, 1e-14));
    out.push(check("T+ gamma0 T+ = 0", worst_plus, 1e-14));

    let mut worst_pairing: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    for _ in 0..1000 {
        let rand_spinor = |rng: &mut ChaCha8Rng| {
            Spinor::new(
                Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            )
        };
        let phi = rand_spinor(&mut rng);
        let cap = rand_spinor(&mut rng);
        let mut x: [f64; 2] = [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
        if (x[0] * x[0] + x[1] * x[1]).sqrt() < 0.2 {
            x = [0.7, -1.1];
        }
        let res = rep.pairing_identity_residual(&phi, &cap, x, 0.1).norm()
            / (1.0 + phi.norm() * cap.norm());
        worst_pairing = worst_pairing.max(res);
    }
    out.push(check(
        "pairing identity (1000 samples)",
        worst_pairing,
        1e-12,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst_decomp: f64 = 0.0;
    let mut worst_homog: f64 = 0.0;
    let mut worst_minus_structure: f64 = 0.0;
    for _ in 0..200 {
        let psi = Spinor::new(
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        );
        let x: [f64; 2] = [rng.gen_range(0.3..5.0), rng.gen_range(-5.0..5.0)];
        let (pm, pp) = rep.decompose(&psi, x, 0.1);
        let back = pm.add(&pp).scale(Complex64::new(0.5, 0.0));
        worst_decomp = worst_decomp.max(back.sub(&psi).norm() / (1.0 + psi.norm()));
        let lam = Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let lhs = rep.cubic_nonlinearity(&psi.scale(lam));
        let rhs = rep.cubic_nonlinearity(&psi).scale(lam * lam.norm_sqr());
        let scale = lhs.norm().max(rhs.norm()).max(1e-30);
        worst_homog = worst_homog.max(lhs.sub(&rhs).norm() / scale);
        let f = rep.cubic_nonlinearity(&psi);
        let (fm, _) = rep.decompose(&f, x, 0.1);
        let rho = rep.interaction_density(&psi);
        let expected = pm.scale(rho);
        worst_minus_structure =
            worst_minus_structure.max(fm.sub(&expected).norm() / (1.0 + expected.norm()));
    }
    out.push(check(
        "decomposition halves average back",
        worst_decomp,
        1e-14,
    ));
    out.push(check(
        "cubic homogeneity F(λψ)=|λ|^2 λ F(ψ)",
        worst_homog,
        1e-12,
    ));
    out.push(check(
        "minus part of F is (ψ*Hψ)[ψ]-",
        worst_minus_structure,
        1e-13,
    ));
    out
}

/// Grid-level commutator and product-rule identities on synthetic fields.
pub fn commutator_checks(rep: &GammaRep<f64>, n: usize) -> Result<Vec<IdentityCheck>> {
    let grid = Grid2D::<f64>::new(n, 32.0)?;
    let mut ops = SpectralOps::new(&grid);
    let packet = GaussianPacket {
        amp: [Complex64::new(0.9, 0.2), Complex64::new(-0.3, 0.6)],
        center: [0.4, -0.7],
        width: 1.4,
        wavevec: [1.1, -0.7],
        omega: 1.3,
    };
    let t = 0.8;
    let jet = packet.spinor_jet(&grid, t, 2);
    let h2 = ops.sobolev_norm(jet.value(), 2.0);
    let dirac_of_jet = dirac_jet(&mut ops, rep, &jet)?;
    let mut out = Vec::new();
    for k in 1..=NUM_FIELDS {
        let gamma_first = apply_gamma_jet(&mut ops, rep, k, true, &jet)?;
        let d_gamma = dirac_jet(&mut ops, rep, &gamma_first)?;
        let gamma_d = apply_gamma_jet(&mut ops, rep, k, true, &dirac_of_jet)?;
        let mut comm = d_gamma.value().sub(gamma_d.value())?;
        let name = if k == 7 {
            // The scaling field obeys [𝒟, L0] = 𝒟 instead of vanishing.
            comm = comm.sub(dirac_of_jet.value())?;
            "commutator [D, L0] = D".to_string()
        } else {
            format!("commutator [D, hatted gamma_{k}] = 0")
        };
        out.push(check(name, comm.l2_norm() / h2, 1e-8));
    }

    // Leibniz rule for the modified fields against a scalar factor.
    let scalar_packet = GaussianPacket {
        amp: [Complex64::new(0.7, -0.4), Complex64::new(0.0, 0.0)],
        center: [-0.9, 0.5],
        width: 1.7,
        wavevec: [-0.8, 0.5],
        omega: 0.9,
    };
    let u = scalar_packet.scalar_jet(&grid, t, 2);
    let product = jet_product(&u, &jet);
    let mut worst: f64 = 0.0;
    for k in 1..=NUM_FIELDS {
        let lhs = apply_gamma_jet(&mut ops, rep, k, true, &product)?;
        let gu = apply_gamma_jet_scalar(&mut ops, k, &u)?;
        let gphi = apply_gamma_jet(&mut ops, rep, k, true, &jet)?;
        let mut rhs = jet_product(&gu, &jet);
        let term2 = jet_product(&u, &gphi);
        rhs.levels[0] = rhs.levels[0].add(&term2.levels[0])?;
        let res = lhs.value().l2_distance(rhs.value())?;
        worst = worst.max(res);
    }
    out.push(check("Leibniz rule for modified fields", worst, 1e-10));

    // Good-derivative identity G_a u = (L_a u + (r - t) ∂_a u)/r.
    let psi = jet.levels[0].clone();
    let dpsi = jet.levels[1].clone();
    let mut worst_g: f64 = 0.0;
    for (k, axis) in [
        (4usize, crate::spectral::Axis::X1),
        (5, crate::spectral::Axis::X2),
    ] {
        let ga = good_derivative(&mut ops, axis, &psi, &dpsi);
        let la = crate::vector_fields::apply_vector_field(&mut ops, rep, k, &psi, &dpsi, false)?;
        let da = ops.spatial_derivative(&psi, axis);
        for i in 0..grid.n() {
            for j in 0..grid.n() {
                let r = grid.radius()[[i, j]];
                if r < grid.r_floor() {
                    continue;
                }
                let rhs = la
                    .at(i, j)
                    .add(&da.at(i, j).scale(re(r - t)))
                    .scale(re(1.0 / r));
                worst_g = worst_g.max(ga.at(i, j).sub(&rhs).norm());
            }
        }
    }
    out.push(check("good derivative boost identity", worst_g, 1e-10));

    // Measured constant of <t-r>|∂u| + <t+r>|G_a u| <= C Σ|Γu|.
    let pulse = OutgoingPulse::new(1.0);
    let pulse_jet = pulse.scalar_jet(&grid, 6.0);
    let c_ks = crate::diagnostics::good_derivative_constant(&mut ops, &pulse_jet)?;
    out.push(check("good-derivative pointwise constant <= 4", c_ks, 4.0));
    Ok(out)
}

/// The full suite on the default representation (and the supplied `H`).
pub fn run_identity_suite(rep: &GammaRep<f64>, n: usize) -> Result<Vec<IdentityCheck>> {
    let mut out = algebraic_checks(rep);
    out.extend(commutator_checks(rep, n)?);
    Ok(out)
}

/// A deliberately broken representation for failure-path exercises:
/// `γ1` scaled by the given factor violates the Clifford relations.
pub fn corrupted_rep(factor: f64) -> GammaRep<f64> {
    let mut rep = make_default_rep::<f64>(Mat2::identity());
    rep.gamma[1] = rep.gamma[1].scale(Complex64::new(factor, 0.0));
    rep.gamma0_gamma = [
        rep.gamma[0].mul(&rep.gamma[1]),
        rep.gamma[0].mul(&rep.gamma[2]),
    ];
    rep.gamma1_gamma2 = rep.gamma[1].mul(&rep.gamma[2]);
    rep
}

//! The Klainerman vector fields as grid operators.
//!
//! The ordered family is `Γ_1..Γ_7 = ∂_t, ∂_1, ∂_2, L_1, L_2, Ω_12, L_0`
//! with the modified boosts `L̂_a = L_a - γ0γ^a/2` and rotation
//! `Ω̂ = Ω - γ1γ2/2`; the scaling field is never modified.
//!
//! Because boosts and scaling contain `∂_t`, fields are handled as short
//! time-jets: a [`FieldJet`] stores `Φ, ∂_tΦ, ..., ∂_t^p Φ` at one time, each
//! operator application consumes one jet level, and `∂_t` is never obtained
//! by differencing stored time levels. For PDE solutions the jet comes from
//! the equation ([`solution_jet`]); for synthetic test fields it is analytic.

use crate::algebra::{GammaRep, Mat2};
use crate::error::{Error, Result};
use crate::field::{ScalarField, SpinorField};
use crate::scalar::{cast, im, re, Scalar};
use crate::spectral::{Axis, SpectralOps};

/// Number of vector fields in the ordered family.
pub const NUM_FIELDS: usize = 7;

/// Jet of a spinor field in time: `levels[m] = ∂_t^m Φ` on the same grid at
/// the same time.
#[derive(Debug, Clone)]
pub struct FieldJet<T: Scalar> {
    pub levels: Vec<SpinorField<T>>,
}

impl<T: Scalar> FieldJet<T> {
    pub fn new(levels: Vec<SpinorField<T>>) -> Self {
        assert!(!levels.is_empty());
        Self { levels }
    }

    pub fn order(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn value(&self) -> &SpinorField<T> {
        &self.levels[0]
    }

    pub fn time(&self) -> T {
        self.levels[0].time
    }
}

/// Jet of a complex scalar field in time.
#[derive(Debug, Clone)]
pub struct ScalarJet<T: Scalar> {
    pub levels: Vec<ScalarField<T>>,
}

impl<T: Scalar> ScalarJet<T> {
    pub fn new(levels: Vec<ScalarField<T>>) -> Self {
        assert!(!levels.is_empty());
        Self { levels }
    }

    pub fn order(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn value(&self) -> &ScalarField<T> {
        &self.levels[0]
    }
}

pub(crate) fn mul_coord<T: Scalar>(f: &SpinorField<T>, axis: Axis) -> SpinorField<T> {
    let mut out = f.clone();
    let n = f.grid.n();
    for k in 0..2 {
        for i in 0..n {
            for j in 0..n {
                let x = match axis {
                    Axis::X1 => f.grid.coord(i),
                    Axis::X2 => f.grid.coord(j),
                };
                out.comps[k][[i, j]] = out.comps[k][[i, j]] * x;
            }
        }
    }
    out
}

fn mul_coord_scalar<T: Scalar>(f: &ScalarField<T>, axis: Axis) -> ScalarField<T> {
    let mut out = f.clone();
    let n = f.grid.n();
    for i in 0..n {
        for j in 0..n {
            let x = match axis {
                Axis::X1 => f.grid.coord(i),
                Axis::X2 => f.grid.coord(j),
            };
            out.values[[i, j]] = out.values[[i, j]] * x;
        }
    }
    out
}

/// `∂_t^m (Γ_k Φ)` from jet levels, for one output level `m`.
fn gamma_level<T: Scalar>(
    ops: &mut SpectralOps<T>,
    k: usize,
    jet: &FieldJet<T>,
    m: usize,
) -> Result<SpinorField<T>> {
    let t = jet.time();
    let lv = &jet.levels;
    let out = match k {
        1 => lv[m + 1].clone(),
        2 | 3 => {
            let axis = if k == 2 { Axis::X1 } else { Axis::X2 };
            ops.spatial_derivative(&lv[m], axis)
        }
        4 | 5 => {
            // L_a = x_a ∂_t + t ∂_a:
            // ∂_t^m(L_a Φ) = x_a ∂_t^{m+1}Φ + t ∂_a ∂_t^mΦ + m ∂_a ∂_t^{m-1}Φ.
            let axis = if k == 4 { Axis::X1 } else { Axis::X2 };
            let mut acc = mul_coord(&lv[m + 1], axis);
            acc = acc.add(&ops.spatial_derivative(&lv[m], axis).scaled(re(t)))?;
            if m > 0 {
                let extra = ops
                    .spatial_derivative(&lv[m - 1], axis)
                    .scaled(re(cast::<T>(m as f64)));
                acc = acc.add(&extra)?;
            }
            acc
        }
        6 => {
            // Ω = x_1 ∂_2 - x_2 ∂_1 commutes with ∂_t.
            let d2 = ops.spatial_derivative(&lv[m], Axis::X2);
            let d1 = ops.spatial_derivative(&lv[m], Axis::X1);
            mul_coord(&d2, Axis::X1).sub(&mul_coord(&d1, Axis::X2))?
        }
        7 => {
            // L_0 = t ∂_t + x^a ∂_a:
            // ∂_t^m(L_0 Φ) = t ∂_t^{m+1}Φ + m ∂_t^mΦ + x^a ∂_a ∂_t^mΦ.
            let mut acc = lv[m + 1].scaled(re(t));
            if m > 0 {
                acc = acc.add(&lv[m].scaled(re(cast::<T>(m as f64))))?;
            }
            let d1 = ops.spatial_derivative(&lv[m], Axis::X1);
            let d2 = ops.spatial_derivative(&lv[m], Axis::X2);
            acc = acc.add(&mul_coord(&d1, Axis::X1))?;
            acc.add(&mul_coord(&d2, Axis::X2))?
        }
        _ => return Err(Error::VectorFieldIndex(k)),
    };
    let mut out = out;
    out.time = t;
    Ok(out)
}

/// Constant matrix subtracted by the hatted variant of field `k`, if any.
pub fn hatted_correction<T: Scalar>(rep: &GammaRep<T>, k: usize) -> Option<Mat2<T>> {
    let half = re(cast::<T>(0.5));
    match k {
        4 => Some(rep.gamma0_gamma[0].scale(half)),
        5 => Some(rep.gamma0_gamma[1].scale(half)),
        6 => Some(rep.gamma1_gamma2.scale(half)),
        _ => None,
    }
}

/// Apply `Γ_k` (or `Γ̂_k`) to a jet, consuming one level.
pub fn apply_gamma_jet<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    k: usize,
    hatted: bool,
    jet: &FieldJet<T>,
) -> Result<FieldJet<T>> {
    if jet.order() == 0 {
        return Err(Error::OrderTooLarge {
            requested: 1,
            max: 0,
        });
    }
    let correction = if hatted {
        hatted_correction(rep, k)
    } else {
        None
    };
    let mut levels = Vec::with_capacity(jet.order());
    for m in 0..jet.order() {
        let mut lvl = gamma_level(ops, k, jet, m)?;
        if let Some(c) = &correction {
            lvl = lvl.sub(&jet.levels[m].apply_matrix(c))?;
        }
        levels.push(lvl);
    }
    Ok(FieldJet::new(levels))
}

/// Apply `Γ_k` to a scalar jet (scalars have no hatted variant).
pub fn apply_gamma_jet_scalar<T: Scalar>(
    ops: &mut SpectralOps<T>,
    k: usize,
    jet: &ScalarJet<T>,
) -> Result<ScalarJet<T>> {
    if jet.order() == 0 {
        return Err(Error::OrderTooLarge {
            requested: 1,
            max: 0,
        });
    }
    let t = jet.levels[0].time;
    let lv = &jet.levels;
    let mut levels = Vec::with_capacity(jet.order());
    for m in 0..jet.order() {
        let out = match k {
            1 => lv[m + 1].clone(),
            2 | 3 => {
                let axis = if k == 2 { Axis::X1 } else { Axis::X2 };
                ops.spatial_derivative_scalar(&lv[m], axis)
            }
            4 | 5 => {
                let axis = if k == 4 { Axis::X1 } else { Axis::X2 };
                let mut acc = mul_coord_scalar(&lv[m + 1], axis);
                let d = ops.spatial_derivative_scalar(&lv[m], axis);
                acc.values = &acc.values + &d.values.mapv(|v| v * t);
                if m > 0 {
                    let dm = ops.spatial_derivative_scalar(&lv[m - 1], axis);
                    let mm = cast::<T>(m as f64);
                    acc.values = &acc.values + &dm.values.mapv(|v| v * mm);
                }
                acc
            }
            6 => {
                let d2 = ops.spatial_derivative_scalar(&lv[m], Axis::X2);
                let d1 = ops.spatial_derivative_scalar(&lv[m], Axis::X1);
                let mut acc = mul_coord_scalar(&d2, Axis::X1);
                acc.values = &acc.values - &mul_coord_scalar(&d1, Axis::X2).values;
                acc
            }
            7 => {
                let mut acc = lv[m + 1].clone();
                acc.values.mapv_inplace(|v| v * t);
                if m > 0 {
                    let mm = cast::<T>(m as f64);
                    acc.values = &acc.values + &lv[m].values.mapv(|v| v * mm);
                }
                let d1 = ops.spatial_derivative_scalar(&lv[m], Axis::X1);
                let d2 = ops.spatial_derivative_scalar(&lv[m], Axis::X2);
                acc.values = &acc.values + &mul_coord_scalar(&d1, Axis::X1).values;
                acc.values = &acc.values + &mul_coord_scalar(&d2, Axis::X2).values;
                acc
            }
            _ => return Err(Error::VectorFieldIndex(k)),
        };
        let mut out = out;
        out.time = t;
        levels.push(out);
    }
    Ok(ScalarJet::new(levels))
}

/// `Γ_k ψ` (or `Γ̂_k ψ`) given `ψ` and a consistent `∂_t ψ`.
pub fn apply_vector_field<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    k: usize,
    psi: &SpinorField<T>,
    dpsi_dt: &SpinorField<T>,
    hatted: bool,
) -> Result<SpinorField<T>> {
    psi.grid.require_same_shape(&dpsi_dt.grid)?;
    let jet = FieldJet::new(vec![psi.clone(), dpsi_dt.clone()]);
    let out = apply_gamma_jet(ops, rep, k, hatted, &jet)?;
    Ok(out.levels.into_iter().next().unwrap())
}

/// Dirac operator `𝒟Φ = iγ^μ∂_μΦ` on a jet, consuming one level.
pub fn dirac_jet<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    jet: &FieldJet<T>,
) -> Result<FieldJet<T>> {
    if jet.order() == 0 {
        return Err(Error::OrderTooLarge {
            requested: 1,
            max: 0,
        });
    }
    let i = im::<T>();
    let mut levels = Vec::with_capacity(jet.order());
    for m in 0..jet.order() {
        let mut acc = jet.levels[m + 1].apply_matrix(&rep.gamma[0]).scaled(i);
        let d1 = ops.spatial_derivative(&jet.levels[m], Axis::X1);
        acc = acc.add(&d1.apply_matrix(&rep.gamma[1]).scaled(i))?;
        let d2 = ops.spatial_derivative(&jet.levels[m], Axis::X2);
        acc = acc.add(&d2.apply_matrix(&rep.gamma[2]).scaled(i))?;
        acc.time = jet.time();
        levels.push(acc);
    }
    Ok(FieldJet::new(levels))
}

/// `𝒟Φ` from a field and its time derivative.
pub fn dirac_apply<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    value: &SpinorField<T>,
    dt_value: &SpinorField<T>,
) -> Result<SpinorField<T>> {
    let jet = FieldJet::new(vec![value.clone(), dt_value.clone()]);
    let out = dirac_jet(ops, rep, &jet)?;
    Ok(out.levels.into_iter().next().unwrap())
}

/// `∂_tψ` from the evolution equation:
/// `∂_tψ = -γ0γ^a ∂_aψ + i m γ0 ψ - i γ0 F(ψ)`.
pub fn time_derivative<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    psi: &SpinorField<T>,
    mass: T,
) -> SpinorField<T> {
    let d1 = ops.spatial_derivative(psi, Axis::X1);
    let d2 = ops.spatial_derivative(psi, Axis::X2);
    let mut out = d1
        .apply_matrix(&rep.gamma0_gamma[0])
        .add(&d2.apply_matrix(&rep.gamma0_gamma[1]))
        .expect("same grid")
        .scaled(re(-T::one()));
    if mass != T::zero() {
        let msrc = psi.apply_matrix(&rep.gamma[0]).scaled(im::<T>() * mass);
        out = out.add(&msrc).expect("same grid");
    }
    let mut f = cubic_field(rep, psi);
    f = f.apply_matrix(&rep.gamma[0]).scaled(-im::<T>());
    out = out.add(&f).expect("same grid");
    out.time = psi.time;
    out
}

/// Pointwise cubic nonlinearity on a whole field.
pub fn cubic_field<T: Scalar>(rep: &GammaRep<T>, psi: &SpinorField<T>) -> SpinorField<T> {
    let mut out = psi.clone();
    out.map_cells(|_, _, s| rep.cubic_nonlinearity(&s));
    out
}

/// `∂_t F(ψ)` from `ψ` and `∂_tψ`, pointwise.
pub fn cubic_time_derivative<T: Scalar>(
    rep: &GammaRep<T>,
    psi: &SpinorField<T>,
    dpsi: &SpinorField<T>,
) -> SpinorField<T> {
    let mut out = SpinorField::zeros(&psi.grid, psi.time);
    let n = psi.grid.n();
    for i in 0..n {
        for j in 0..n {
            let p = psi.at(i, j);
            let dp = dpsi.at(i, j);
            let hp = rep.h_matrix.apply(&p);
            let hdp = rep.h_matrix.apply(&dp);
            let drho = dp.dot(&hp) + p.dot(&hdp);
            let rho = p.dot(&hp);
            out.set(i, j, p.scale(drho).add(&dp.scale(rho)));
        }
    }
    out
}

/// Jet `(F(ψ), ∂_tF)` of the nonlinearity along a solution.
pub fn cubic_jet<T: Scalar>(
    rep: &GammaRep<T>,
    psi: &SpinorField<T>,
    dpsi: &SpinorField<T>,
) -> FieldJet<T> {
    FieldJet::new(vec![
        cubic_field(rep, psi),
        cubic_time_derivative(rep, psi, dpsi),
    ])
}

/// Jet of a PDE solution with `∂_t` (and `∂_t^2`) supplied by the equation.
pub fn solution_jet<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    psi: &SpinorField<T>,
    mass: T,
    order: usize,
) -> Result<FieldJet<T>> {
    if order > 2 {
        return Err(Error::OrderTooLarge {
            requested: order,
            max: 2,
        });
    }
    let mut levels = vec![psi.clone()];
    if order >= 1 {
        levels.push(time_derivative(ops, rep, psi, mass));
    }
    if order >= 2 {
        let dpsi = levels[1].clone();
        // ∂_t of the right-hand side, with ∂_tF expanded pointwise.
        let d1 = ops.spatial_derivative(&dpsi, Axis::X1);
        let d2 = ops.spatial_derivative(&dpsi, Axis::X2);
        let mut ddpsi = d1
            .apply_matrix(&rep.gamma0_gamma[0])
            .add(&d2.apply_matrix(&rep.gamma0_gamma[1]))?
            .scaled(re(-T::one()));
        if mass != T::zero() {
            ddpsi = ddpsi.add(&dpsi.apply_matrix(&rep.gamma[0]).scaled(im::<T>() * mass))?;
        }
        let df = cubic_time_derivative(rep, psi, &dpsi);
        ddpsi = ddpsi.add(&df.apply_matrix(&rep.gamma[0]).scaled(-im::<T>()))?;
        ddpsi.time = psi.time;
        levels.push(ddpsi);
    }
    Ok(FieldJet::new(levels))
}

/// Good derivative `G_a f = (x_a ∂_t f + r ∂_a f)/r`; cells below the radial
/// floor take the limit convention `∂_a f`.
pub fn good_derivative<T: Scalar>(
    ops: &mut SpectralOps<T>,
    axis: Axis,
    f: &SpinorField<T>,
    df_dt: &SpinorField<T>,
) -> SpinorField<T> {
    let da = ops.spatial_derivative(f, axis);
    let grid = f.grid.clone();
    let n = grid.n();
    let r_floor = grid.r_floor();
    let mut out = SpinorField::zeros(&grid, f.time);
    for i in 0..n {
        for j in 0..n {
            let r = grid.radius()[[i, j]];
            let s = if r < r_floor {
                da.at(i, j)
            } else {
                let xa = match axis {
                    Axis::X1 => grid.coord(i),
                    Axis::X2 => grid.coord(j),
                };
                df_dt.at(i, j).scale(re(xa / r)).add(&da.at(i, j))
            };
            out.set(i, j, s);
        }
    }
    out
}

/// Scalar-field version of [`good_derivative`].
pub fn good_derivative_scalar<T: Scalar>(
    ops: &mut SpectralOps<T>,
    axis: Axis,
    f: &ScalarField<T>,
    df_dt: &ScalarField<T>,
) -> ScalarField<T> {
    let da = ops.spatial_derivative_scalar(f, axis);
    let grid = f.grid.clone();
    let n = grid.n();
    let r_floor = grid.r_floor();
    let mut out = ScalarField::zeros(&grid, f.time);
    for i in 0..n {
        for j in 0..n {
            let r = grid.radius()[[i, j]];
            out.values[[i, j]] = if r < r_floor {
                da.values[[i, j]]
            } else {
                let xa = match axis {
                    Axis::X1 => grid.coord(i),
                    Axis::X2 => grid.coord(j),
                };
                df_dt.values[[i, j]] * (xa / r) + da.values[[i, j]]
            };
        }
    }
    out
}

/// Jet of the pointwise product `u Φ` by the Leibniz rule in time.
pub fn jet_product<T: Scalar>(u: &ScalarJet<T>, phi: &FieldJet<T>) -> FieldJet<T> {
    let order = u.order().min(phi.order());
    let grid = phi.levels[0].grid.clone();
    let t = phi.time();
    let n = grid.n();
    let binom = |m: usize, j: usize| -> f64 {
        let mut acc = 1.0;
        for i in 0..j {
            acc = acc * (m - i) as f64 / (j - i) as f64;
        }
        acc
    };
    let mut levels = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let mut out = SpinorField::zeros(&grid, t);
        for j in 0..=m {
            let coeff = cast::<T>(binom(m, j));
            for k in 0..2 {
                for i in 0..n {
                    for jj in 0..n {
                        let v = u.levels[j].values[[i, jj]]
                            * phi.levels[m - j].comps[k][[i, jj]]
                            * coeff;
                        out.comps[k][[i, jj]] = out.comps[k][[i, jj]] + v;
                    }
                }
            }
        }
        levels.push(out);
    }
    FieldJet::new(levels)
}

/// All canonical multi-indices of total order `<= order` over the family,
/// each listed as the ordered factors of `Γ^I` (applied right to left).
pub fn multi_indices_up_to(order: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    if order >= 1 {
        for k in 1..=NUM_FIELDS {
            out.push(vec![k]);
        }
    }
    if order >= 2 {
        for k1 in 1..=NUM_FIELDS {
            for k2 in k1..=NUM_FIELDS {
                out.push(vec![k1, k2]);
            }
        }
    }
    out
}

/// L2 norms of `Γ^I ψ` (or `Γ̂^I ψ`) for all `|I| <= order`, with `∂_t` from
/// the equation. Returns `(multi-index, norm)` pairs in canonical order.
pub fn vector_field_l2_norms<T: Scalar>(
    ops: &mut SpectralOps<T>,
    rep: &GammaRep<T>,
    psi: &SpinorField<T>,
    mass: T,
    order: usize,
    hatted: bool,
) -> Result<Vec<(Vec<usize>, T)>> {
    if order > 2 {
        return Err(Error::OrderTooLarge {
            requested: order,
            max: 2,
        });
    }
    let jet = solution_jet(ops, rep, psi, mass, order)?;
    let mut out = Vec::new();
    out.push((vec![], psi.l2_norm()));
    if order == 0 {
        return Ok(out);
    }
    // First applications consume one level; reuse them for the nested pass.
    let mut first: Vec<FieldJet<T>> = Vec::with_capacity(NUM_FIELDS);
    for k in 1..=NUM_FIELDS {
        first.push(apply_gamma_jet(ops, rep, k, hatted, &jet)?);
    }
    for (k, j1) in first.iter().enumerate() {
        out.push((vec![k + 1], j1.value().l2_norm()));
    }
    if order >= 2 {
        for k1 in 1..=NUM_FIELDS {
            for k2 in k1..=NUM_FIELDS {
                let j2 = apply_gamma_jet(ops, rep, k1, hatted, &first[k2 - 1])?;
                out.push((vec![k1, k2], j2.value().l2_norm()));
            }
        }
    }
    Ok(out)
}

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::accelerant::{apply_t, check_positive, potential_from_accelerant, Accelerant, Potential};
use crate::canonical::{theta_omega_at_zero, ThetaOmegaPair};
use crate::error::{Error, Result};
use crate::numerics::{
    central_derivative, cumulative_trapezoid, identity, max_abs_diff, re, Grid, MatrixFunction, VolterraOp,
};

use super::semiseparable::{build_l, monomials, SemiSepOperator};
use super::similarity::{ea_le_residual, similarity_e, similarity_kernel_direct, SimilarityData};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Second-order validation threshold `max(1e-6, C h^2)`.
const VALIDATION_C: f64 = 100.0;

fn validation_tolerance(grid: &Grid) -> f64 {
    (VALIDATION_C * grid.h() * grid.h()).max(1e-6)
}

/// The normalizing convolution operator `E_0` and its inverse.
#[derive(Clone, Debug)]
pub struct NormalizedE0 {
    pub e0: VolterraOp,
    pub e0inv: VolterraOp,
    /// `e_0 = (E^{-1} theta_{0,2})'`.
    pub e0_kernel: MatrixFunction,
    /// `sup || E_0 I - E^{-1} theta_{0,2} ||`.
    pub identity_residual: f64,
}

pub fn build_e0(pair: &ThetaOmegaPair, einv: &VolterraOp) -> Result<NormalizedE0> {
    let theta02 = pair.theta02();
    let f = einv.apply(&theta02)?;
    let e0_kernel = central_derivative(&f)?;
    let e0 = VolterraOp::convolution(theta02.sample(0), &e0_kernel)?;
    let e0inv = e0.inverse()?;
    let ones = MatrixFunction::constant(pair.grid(), &identity(pair.r()));
    let identity_residual = e0.apply(&ones)?.max_diff(&f)?;
    Ok(NormalizedE0 { e0, e0inv, e0_kernel, identity_residual })
}

/// Residuals of `S = Lambda Lambda*` against the convolution operator of `k`.
#[derive(Clone, Debug, Default)]
pub struct StResiduals {
    /// `A S + S A*` against the kernel `s(x) + s(t)*`.
    pub displacement: f64,
    /// `Lambda Lambda*` against `T`.
    pub direct: f64,
}

fn probes(grid: &Grid, r: usize) -> Vec<MatrixFunction> {
    let mut out = monomials(grid, r, 3);
    out.push(MatrixFunction::from_fn(grid, |t| identity(r) * crate::C64::new((3.0 * t).cos(), (2.0 * t).sin())));
    out
}

fn max_diff_positive(a: &MatrixFunction, b: &MatrixFunction) -> f64 {
    (1..a.grid().len()).map(|i| max_abs_diff(a.sample(i), b.sample(i))).fold(0.0, f64::max)
}

/// Residuals are taken over `x > 0`: at `x = 0` the adjoint of the discrete
/// `Lambda` integrates its first kernel column, which is only first order.
pub fn st_kernel_check(lambda: &VolterraOp, k: &Accelerant) -> Result<StResiduals> {
    let grid = lambda.grid();
    let r = lambda.r();
    let a = VolterraOp::integration(grid, r);
    let s = cumulative_trapezoid(&k.to_function()).map(|_, c| identity(r) * re(0.5) - c);
    let s_adj = s.adjoint();
    let apply_s = |f: &MatrixFunction| -> Result<MatrixFunction> { lambda.apply(&lambda.apply_adjoint(f)?) };
    let mut out = StResiduals::default();
    for f in probes(grid, r) {
        let sf = apply_s(&f)?;
        out.direct = out.direct.max(max_diff_positive(&sf, &apply_t(k, &f)?));
        let lhs = &a.apply(&sf)? + &apply_s(&a.apply_adjoint(&f)?)?;
        let total = crate::numerics::trapezoid_integral(&f, grid.n())?;
        let weighted = crate::numerics::trapezoid_integral(&s_adj.zip_with(&f, |x, y| x * y)?, grid.n())?;
        let rhs = s.map(|_, si| si * &total + &weighted);
        out.displacement = out.displacement.max(max_diff_positive(&lhs, &rhs));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    /// Both identities `(Lambda theta_{0,1})(0) = I/sqrt 2` and
    /// `(Lambda^{-1} I)/sqrt 2 = theta_{0,2}`.
    pub lambda_normalization: f64,
    pub ea_le: f64,
    pub st_displacement: f64,
    pub st_direct: f64,
    /// `Lambda theta = [2 s, I] / sqrt 2`.
    pub lambda_theta: f64,
    /// `E_0 I = E^{-1} theta_{0,2}`.
    pub e0_identity: f64,
    /// `(E_0^{-1} E^{-1} theta_{0,1})(0) = I`.
    pub normalization_at_zero: f64,
    pub row_identities: f64,
    pub fg: f64,
    pub rho_defect: f64,
    /// `v -> k -> v` on interior nodes.
    pub roundtrip: f64,
    pub positivity_margin: f64,
    pub neumann_terms: usize,
    pub term_norms: Vec<f64>,
    /// Neumann kernel against the forward-substitution solve, when requested.
    pub cross_check: Option<f64>,
    pub validation_tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub k: Accelerant,
    pub pair: ThetaOmegaPair,
    pub l: SemiSepOperator,
    pub similarity: SimilarityData,
    pub e0: NormalizedE0,
    pub lambda: VolterraOp,
    pub lambda_inv: VolterraOp,
    pub diagnostics: Diagnostics,
}

fn interior_diff(a: &Potential, b: &Potential) -> f64 {
    let n = a.grid().n();
    (1..n).map(|i| max_abs_diff(a.at(i), b.at(i))).fold(0.0, f64::max)
}

/// The full pipeline `theta -> L -> E -> E_0 -> Lambda -> k` with validations.
pub fn reconstruct(v: &Potential, tol: f64, cross_check: bool) -> Result<Reconstruction> {
    let grid = v.grid().clone();
    let r = v.r();
    let pair = theta_omega_at_zero(v)?;
    let l = build_l(&pair)?;
    let similarity = similarity_e(&l, &pair, tol)?;
    let cross = if cross_check {
        Some(similarity_kernel_direct(&similarity.alpha, &similarity.beta)?.max_diff(&similarity.n_kernel))
    } else {
        None
    };
    let e0 = build_e0(&pair, &similarity.einv)?;
    let lambda = e0.e0inv.compose(&similarity.einv)?.scaled(re(FRAC_1_SQRT_2));
    let lambda_inv = similarity.e.compose(&e0.e0)?.scaled(re(SQRT_2));

    let theta01 = pair.theta01();
    let theta02 = pair.theta02();
    let lt1 = lambda.apply(&theta01)?;
    let k_fn = central_derivative(&lt1)?.map(|_, d| d * re(-FRAC_1_SQRT_2));
    let k = Accelerant::new(grid.clone(), k_fn.into_samples())?;

    let id = identity(r);
    let ones = MatrixFunction::constant(&grid, &id);
    let lon_origin = max_abs_diff(lt1.sample(0), &(&id * re(FRAC_1_SQRT_2)));
    let lon_second = lambda_inv.apply(&ones)?.map(|_, m| m * re(FRAC_1_SQRT_2)).max_diff(&theta02)?;
    let normalization_at_zero = max_abs_diff(e0.e0inv.apply(&similarity.einv.apply(&theta01)?)?.sample(0), &id);

    let s = cumulative_trapezoid(&k.to_function()).map(|_, c| &id * re(0.5) - c);
    let lt2 = lambda.apply(&theta02)?;
    let lambda_theta = lt1
        .max_diff(&s.map(|_, m| m * re(SQRT_2)))?
        .max(lt2.max_diff(&MatrixFunction::constant(&grid, &(&id * re(FRAC_1_SQRT_2))))?);

    let vtol = validation_tolerance(&grid);
    let lambda_normalization = lon_origin.max(lon_second);
    if lambda_normalization > vtol {
        return Err(Error::Validation { check: "lambda normalization".into(), residual: lambda_normalization, tolerance: vtol });
    }
    let positivity = check_positive(&k).map_err(|e| match e {
        Error::NotPositive { tau, min_eigenvalue } => Error::Validation {
            check: format!("positivity of Lambda Lambda* (fails at tau = {tau})"),
            residual: -min_eigenvalue,
            tolerance: 0.0,
        },
        other => other,
    })?;
    let st = st_kernel_check(&lambda, &k)?;
    let roundtrip = interior_diff(&potential_from_accelerant(&k)?, v);
    let diagnostics = Diagnostics {
        lambda_normalization,
        ea_le: ea_le_residual(&l, &similarity.e, 3)?,
        st_displacement: st.displacement,
        st_direct: st.direct,
        lambda_theta,
        e0_identity: e0.identity_residual,
        normalization_at_zero,
        row_identities: pair.identities().max(),
        fg: l.fg_residual(),
        rho_defect: similarity.rho_defect,
        roundtrip,
        positivity_margin: positivity.min_margin(),
        neumann_terms: similarity.neumann_terms,
        term_norms: similarity.term_norms.clone(),
        cross_check: cross,
        validation_tolerance: vtol,
    };
    Ok(Reconstruction { k, pair, l, similarity, e0, lambda, lambda_inv, diagnostics })
}

pub fn accelerant_from_potential(v: &Potential, tol: f64) -> Result<Accelerant> {
    Ok(reconstruct(v, tol, false)?.k)
}

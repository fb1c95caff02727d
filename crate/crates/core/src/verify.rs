//! Invariant suite shared by `accelerant verify` and the acceptance tests.
//!
//! Every check reports a residual and a tolerance. Discretization residuals
//! use `max(1e-6, C h^p)` with the order `p` of the underlying quadrature and
//! the constant [`SUITE_C`]; identities that hold to rounding use fixed
//! absolute tolerances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::accelerant::{apply_t, check_positive, lu_factorize, resolvent_kernel, Accelerant, Potential};
use crate::canonical::{integrate_canonical, integrate_krein, theta_omega_at_zero};
use crate::direct::{fundamental_at_from_resolvent, krein_orthogonal, DirectSolver};
use crate::inverse::{build_l, monomials, reconstruct};
use crate::numerics::{
    central_derivative, cumulative_trapezoid, identity, j_matrix, max_abs_diff, q_matrix, re,
    trapezoid_integral, vstack, Grid, MatrixFunction, VolterraOp,
};
use crate::pseudo_exp::{block_residual, pe_accelerant, pe_potential, pe_state, sigma_corner_residual, AdmissibleTriple};
use crate::{CMat, Result, C64};

/// Constant in the `C h^p` tolerances, fixed once for the whole suite.
pub const SUITE_C: f64 = 100.0;
/// Floor of every discretization tolerance.
pub const TOLERANCE_FLOOR: f64 = 1e-6;
/// Spectral parameters used by the checks.
pub const SUITE_LAMBDAS: [C64; 4] = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 1.0)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// `max(floor, C h^p)`.
    Order(u32),
    /// Fixed absolute tolerance.
    Absolute(f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, residual: f64, bound: Bound, h: f64) -> Self {
        let tolerance = tolerance(bound, h);
        Check { name: name.to_string(), residual, tolerance, passed: residual.is_finite() && residual <= tolerance }
    }
}

pub fn tolerance(bound: Bound, h: f64) -> f64 {
    match bound {
        Bound::Order(p) => TOLERANCE_FLOOR.max(SUITE_C * h.powi(p as i32)),
        Bound::Absolute(t) => t,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub n: usize,
    pub t_end: f64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Plain-text pass/fail table.
    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<width$}  {:>10}  {:>10}  result\n", "check", "residual", "tolerance");
        for c in &self.checks {
            out.push_str(&format!(
                "{:<width$}  {:>10.3e}  {:>10.3e}  {}\n",
                c.name,
                c.residual,
                c.tolerance,
                if c.passed { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Interior nodes at which the dense resolvent is formed.
fn sample_nodes(grid: &Grid) -> Vec<usize> {
    let n = grid.n();
    let count = 8.min(n);
    let mut v: Vec<usize> = (1..=count).map(|j| (j * n) / count).collect();
    v.dedup();
    v
}

fn random_polynomial(grid: &Grid, r: usize, degree: usize, seed: u64) -> (MatrixFunction, MatrixFunction) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<CMat> = (0..=degree)
        .map(|_| CMat::from_fn(r, r, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    let f = MatrixFunction::from_fn(grid, |x| {
        coeffs.iter().enumerate().fold(CMat::zeros(r, r), |acc, (p, c)| acc + c * re(x.powi(p as i32)))
    });
    let df = MatrixFunction::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .skip(1)
            .fold(CMat::zeros(r, r), |acc, (p, c)| acc + c * re(p as f64 * x.powi(p as i32 - 1)))
    });
    (f, df)
}

fn max_over(nodes: impl Iterator<Item = f64>) -> f64 {
    nodes.fold(0.0, f64::max)
}

/// Checks on the direct side for one accelerant.
pub fn accelerant_checks(k: &Accelerant) -> Result<Vec<Check>> {
    let grid = k.grid().clone();
    let h = grid.h();
    let r = k.r();
    let n = grid.n();
    let solver = DirectSolver::new(k)?;
    let gk = solver.gamma_inv_k();
    let nodes = sample_nodes(&grid);
    let kernels = nodes.iter().map(|&m| resolvent_kernel(k, m)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();

    out.push(Check::new(
        "resolvent hermitian before symmetrization",
        max_over(kernels.iter().map(|g| g.asymmetry)),
        Bound::Order(2),
        h,
    ));

    out.push(Check::new(
        "gamma_inv k at endpoint",
        max_over(nodes.iter().zip(&kernels).map(|(&m, g)| max_abs_diff(gk.sample(m), &g.at(m, 0)))),
        Bound::Order(2),
        h,
    ));

    let (g, dg) = random_polynomial(&grid, r, 3, 11);
    let gg = solver.factor().apply(&g)?;
    let inner = cumulative_trapezoid(&gk.adjoint().zip_with(&gg, |a, b| a * b)?);
    let gamma_row = |m: usize, res: &crate::accelerant::ResolventKernel, f: &MatrixFunction| -> CMat {
        let w = crate::numerics::trapezoid_weights(m);
        (0..=m).fold(CMat::zeros(r, f.dims().1), |acc, s| acc + res.first_row(s) * f.sample(s) * re(h * w[s]))
    };
    out.push(Check::new(
        "inner product identity",
        max_over(nodes.iter().zip(&kernels).map(|(&m, res)| max_abs_diff(inner.sample(m), &gamma_row(m, res, &g)))),
        Bound::Order(2),
        h,
    ));

    let lhs = &central_derivative(&gg)? - &solver.factor().apply(&dg)?;
    out.push(Check::new(
        "derivative of gamma_inv f",
        max_over(nodes.iter().zip(&kernels).filter(|(&m, _)| m < n).map(|(&m, res)| {
            let rhs = res.at(m, 0) * (g.sample(0) + gamma_row(m, res, &g));
            max_abs_diff(lhs.sample(m), &rhs)
        })),
        Bound::Order(2),
        h,
    ));

    out.push(Check::new("last row of gamma_inv", lu_factorize(k)?.slice_residual, Bound::Order(2), h));

    // A T + T A* = B J B*, i.e. (A T f + T A* f)(x) = 1/2 int (h(x) + h(t)*) f(t) dt
    let hfun = cumulative_trapezoid(&k.to_function()).map(|_, c| identity(r) - c * re(2.0));
    let integ = VolterraOp::integration(&grid, r);
    let mut intertwining: f64 = 0.0;
    for f in monomials(&grid, r, 2).into_iter().chain(std::iter::once(g.clone())) {
        let at = integ.apply(&apply_t(k, &f)?)?;
        let ta = apply_t(k, &integ.apply_adjoint(&f)?)?;
        let total_f = trapezoid_integral(&f, n)?;
        let hf = trapezoid_integral(&hfun.adjoint().zip_with(&f, |a, b| a * b)?, n)?;
        for i in 0..=n {
            let want = (hfun.sample(i) * &total_f + &hf) * re(0.5);
            intertwining = intertwining.max(max_abs_diff(&(at.sample(i) + ta.sample(i)), &want));
        }
    }
    out.push(Check::new("intertwining with integration", intertwining, Bound::Order(2), h));

    let v = solver.potential()?;
    let mut unitarity: f64 = 0.0;
    let mut ode: f64 = 0.0;
    let mut routes: f64 = 0.0;
    let mut krein: f64 = 0.0;
    for &z in &SUITE_LAMBDAS {
        let u = solver.fundamental_solution(z)?;
        let ub = solver.fundamental_solution(z.conj())?;
        unitarity = unitarity.max(u.j_unitarity_residual(&ub));
        ode = ode.max(u.max_diff(&integrate_canonical(&v, z)?));
        for &m in &nodes {
            routes = routes.max(max_abs_diff(u.at(m), &fundamental_at_from_resolvent(k, m, z)?));
            let pair = krein_orthogonal(k, m, 2.0 * z.conj())?;
            krein = krein.max(pair.relation_residual(&u.block(m, 0, 1), &u.block(m, 1, 1)));
        }
    }
    out.push(Check::new("j-unitarity of fundamental solution", unitarity, Bound::Order(2), h));
    out.push(Check::new("fundamental solution vs ode", ode, Bound::Order(2), h));
    out.push(Check::new("resolvent route equivalence", routes, Bound::Order(2), h));
    out.push(Check::new("krein orthogonal functions", krein, Bound::Order(2), h));

    // e^{-i tau z} Y(tau, -2 conj z)* for the Krein system with potential i v
    // is the canonical solution started at Q* [I; I]
    let a = v.to_function().map(|_, m| m * C64::i());
    let mut hamil: f64 = 0.0;
    for &z in &SUITE_LAMBDAS {
        let y = integrate_krein(&a, -2.0 * z.conj())?;
        let u = integrate_canonical(&v, z)?;
        let start = q_matrix(r) * vstack(&identity(r), &identity(r));
        for i in 0..=n {
            let x = grid.node(i);
            let lhs = y.sample(i).adjoint() * (C64::new(0.0, -x) * z).exp();
            hamil = hamil.max(max_abs_diff(&lhs, &(u.at(i) * &start)));
        }
    }
    out.push(Check::new("krein system to canonical system", hamil, Bound::Order(2), h));
    Ok(out)
}

/// Checks on the inverse side for one potential.
pub fn potential_checks(v: &Potential, tol: f64) -> Result<Vec<Check>> {
    let grid = v.grid().clone();
    let h = grid.h();
    let r = v.r();
    let pair = theta_omega_at_zero(v)?;
    let ids = pair.identities();
    let rk = Bound::Order(4);
    let mut out = vec![
        Check::new("theta J theta* = I", ids.theta_j_theta, rk, h),
        Check::new("theta' J theta* = 0", ids.dtheta_j_theta, rk, h),
        Check::new("theta J omega* = 0", ids.theta_j_omega, rk, h),
        Check::new("omega J omega* = -I", ids.omega_j_omega, rk, h),
        Check::new("omega' J omega* = 0", ids.domega_j_omega, rk, h),
        Check::new("omega' J theta* = -i v*", ids.domega_j_theta, rk, h),
    ];
    let l = build_l(&pair)?;
    out.push(Check::new("F G = I", l.fg_residual(), Bound::Order(4), h));

    let rec = reconstruct(v, tol, false)?;
    let d = &rec.diagnostics;
    out.push(Check::new("lambda normalization", d.lambda_normalization, Bound::Order(2), h));
    out.push(Check::new("lambda on theta", d.lambda_theta, Bound::Order(2), h));
    out.push(Check::new("lambda lambda* vs T", d.st_direct, Bound::Order(2), h));
    out.push(Check::new("displacement of lambda lambda*", d.st_displacement, Bound::Order(2), h));
    out.push(Check::new("similarity L E = E A", d.ea_le, Bound::Order(2), h));
    out.push(Check::new("N(x, 0) = 0", rec.similarity.n_kernel.column_zero_norm(), Bound::Absolute(0.0), h));

    // L = Gamma^{-1} A Gamma with Gamma from the reconstructed accelerant
    check_positive(&rec.k)?;
    let lu = lu_factorize(&rec.k)?;
    let integ = VolterraOp::integration(&grid, r);
    let mut sim: f64 = 0.0;
    for f in monomials(&grid, r, 3) {
        let lhs = lu.gamma_inv.apply(&integ.apply(&lu.gamma.apply(&f)?)?)?;
        sim = sim.max(lhs.max_diff(&l.apply(&f)?)?);
    }
    out.push(Check::new("L similar to integration", sim, Bound::Order(2), h));
    out.push(Check::new("round trip v -> k -> v", d.roundtrip, Bound::Order(2), h));
    Ok(out)
}

/// Closed-form checks for an admissible triple.
pub fn triple_checks(triple: &AdmissibleTriple, grid: &Grid) -> Result<Vec<Check>> {
    let h = grid.h();
    let state = pe_state(triple, grid)?;
    let mut corner: f64 = 0.0;
    let mut blocks: f64 = 0.0;
    let mut monotone = f64::INFINITY;
    let mut sigma_min = f64::INFINITY;
    for i in 0..grid.len() {
        corner = corner.max(sigma_corner_residual(triple, &state, i)?);
        blocks = blocks.max(block_residual(triple, &state, i)?);
        sigma_min = sigma_min.min(state.sigma_min_eigenvalue(i));
        if i > 0 {
            let d = state.sigma(i) - state.sigma(i - 1);
            let eig = nalgebra::SymmetricEigen::new(d).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            monotone = monotone.min(eig);
        }
    }
    let r = triple.r();
    let j = j_matrix(r);
    let spectrum_guard = |z: C64| crate::numerics::try_inverse(&(CMat::identity(triple.nn(), triple.nn()) * z - triple.a()));
    let mut unitarity: f64 = 0.0;
    for &z in &SUITE_LAMBDAS {
        if spectrum_guard(z).is_none() || spectrum_guard(z.conj()).is_none() {
            continue;
        }
        for i in 0..grid.len() {
            let w = state.transfer_matrix(i, z)?;
            let wb = state.transfer_matrix(i, z.conj())?;
            unitarity = unitarity.max(max_abs_diff(&(wb.adjoint() * &j * &w), &j));
        }
    }
    let k = pe_accelerant(triple, grid)?;
    let v = pe_potential(triple, grid)?;
    let fwd = crate::accelerant::potential_from_accelerant(&k)?;
    let slice = {
        let m = grid.n();
        let res = resolvent_kernel(&k, m)?;
        let s = state.resolvent_slice(triple, m)?;
        (0..=m).map(|i| max_abs_diff(&s[i], &res.first_row(i))).fold(0.0, f64::max)
    };
    Ok(vec![
        Check::new("sigma corner identity", corner, Bound::Absolute(1e-8), h),
        Check::new("block structure of exp", blocks, Bound::Absolute(1e-8), h),
        Check::new("sigma >= I", (1.0 - sigma_min).max(0.0), Bound::Absolute(1e-10), h),
        Check::new("sigma monotone", (-monotone).max(0.0), Bound::Absolute(1e-10), h),
        Check::new("displacement of sigma", state.displacement_residual(), Bound::Absolute(1e-8), h),
        Check::new("j-unitarity of transfer matrix", unitarity, Bound::Absolute(1e-10), h),
        Check::new("closed-form potential vs forward map", v.max_diff(&fwd), Bound::Order(2), h),
        Check::new("closed-form resolvent slice", slice, Bound::Order(2), h),
    ])
}

/// The suite for an accelerant: direct checks on `k`, inverse checks on its
/// potential.
pub fn verify_accelerant(k: &Accelerant, tol: f64) -> Result<Report> {
    let mut checks = accelerant_checks(k)?;
    let v = crate::accelerant::potential_from_accelerant(k)?;
    checks.extend(potential_checks(&v, tol)?);
    Ok(Report { n: k.grid().n(), t_end: k.grid().t_end(), checks })
}

/// The suite for a potential: inverse checks on `v`, direct checks on the
/// reconstructed accelerant.
pub fn verify_potential(v: &Potential, tol: f64) -> Result<Report> {
    let mut checks = potential_checks(v, tol)?;
    let k = reconstruct(v, tol, false)?.k;
    checks.extend(accelerant_checks(&k)?);
    Ok(Report { n: v.grid().n(), t_end: v.grid().t_end(), checks })
}

/// The full suite for an admissible triple.
pub fn verify_triple(triple: &AdmissibleTriple, grid: &Grid, tol: f64) -> Result<Report> {
    let k = pe_accelerant(triple, grid)?;
    let v = pe_potential(triple, grid)?;
    let mut checks = triple_checks(triple, grid)?;
    checks.extend(accelerant_checks(&k)?);
    checks.extend(potential_checks(&v, tol)?);
    Ok(Report { n: grid.n(), t_end: grid.t_end(), checks })
}

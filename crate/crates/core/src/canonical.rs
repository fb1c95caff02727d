//! ODE oracles: the canonical system, the Krein system, and the `lambda = 0`
//! rows `theta`, `omega` used by the inverse pipeline.

use crate::accelerant::Potential;
use crate::direct::FundamentalSolutionSample;
use crate::error::{Error, Result};
use crate::numerics::{
    big_j_matrix, central_derivative, hstack, identity, j_matrix, max_abs, max_abs_diff, q_matrix, re, vstack, zeros,
    Grid, MatrixFunction,
};
use crate::{CMat, C64};

fn rk4_step<F: Fn(f64, &CMat) -> CMat>(f: &F, t: f64, h: f64, y: &CMat) -> CMat {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + &k1 * re(0.5 * h)));
    let k3 = f(t + 0.5 * h, &(y + &k2 * re(0.5 * h)));
    let k4 = f(t + h, &(y + &k3 * re(h)));
    y + (k1 + (k2 + k3) * re(2.0) + k4) * re(h / 6.0)
}

/// `i j (lambda I + V)` with `V = [[0, v], [v*, 0]]`.
fn canonical_coefficient(v: &CMat, lambda: C64) -> CMat {
    let r = v.nrows();
    let big_v = vstack(&hstack(&zeros(r, r), v), &hstack(&v.adjoint(), &zeros(r, r)));
    j_matrix(r) * (identity(2 * r) * lambda + big_v) * C64::i()
}

/// Integrate `u' = i j (lambda + V) u`, `u(0) = Q*` with an arbitrary
/// potential evaluator, reporting `u` on `grid`.
pub fn integrate_canonical_with<F: Fn(f64) -> CMat>(
    grid: &Grid,
    r: usize,
    v: F,
    lambda: C64,
) -> Result<FundamentalSolutionSample> {
    let h = grid.h();
    let rhs = |t: f64, u: &CMat| canonical_coefficient(&v(t), lambda) * u;
    let mut u = q_matrix(r).adjoint();
    let mut samples = Vec::with_capacity(grid.len());
    samples.push(u.clone());
    for i in 0..grid.n() {
        u = rk4_step(&rhs, grid.node(i), h, &u);
        samples.push(u.clone());
    }
    FundamentalSolutionSample::new(lambda, grid.clone(), samples)
}

/// RK4 on the canonical system; half-step values of `v` by linear interpolation.
pub fn integrate_canonical(v: &Potential, lambda: C64) -> Result<FundamentalSolutionSample> {
    integrate_canonical_with(v.grid(), v.r(), |t| v.eval(t), lambda)
}

/// RK4 with step `2 h_fine` reading half-step values straight from samples on
/// the finer grid; the result lives on the coarse grid.
pub fn integrate_canonical_fine(v_fine: &Potential, lambda: C64) -> Result<FundamentalSolutionSample> {
    let fine = v_fine.grid();
    if fine.n() % 2 != 0 {
        return Err(Error::InvalidGrid("fine grid needs an even number of intervals".into()));
    }
    let coarse = Grid::new(fine.t_end(), fine.n() / 2)?;
    let h = coarse.h();
    let r = v_fine.r();
    let mut u = q_matrix(r).adjoint();
    let mut samples = Vec::with_capacity(coarse.len());
    samples.push(u.clone());
    for i in 0..coarse.n() {
        let c0 = canonical_coefficient(&v_fine.samples()[2 * i], lambda);
        let c1 = canonical_coefficient(&v_fine.samples()[2 * i + 1], lambda);
        let c2 = canonical_coefficient(&v_fine.samples()[2 * i + 2], lambda);
        let k1 = &c0 * &u;
        let k2 = &c1 * (&u + &k1 * re(0.5 * h));
        let k3 = &c1 * (&u + &k2 * re(0.5 * h));
        let k4 = &c2 * (&u + &k3 * re(h));
        u = &u + (k1 + (k2 + k3) * re(2.0) + k4) * re(h / 6.0);
        samples.push(u.clone());
    }
    FundamentalSolutionSample::new(lambda, coarse, samples)
}

/// RK4 on `Y' = Y (i lambda diag(I, 0) + [[0, a], [a*, 0]])`, `Y(0) = [I, I]`.
pub fn integrate_krein(a: &MatrixFunction, lambda: C64) -> Result<MatrixFunction> {
    let (r, c) = a.dims();
    if r != c {
        return Err(Error::ShapeMismatch("Krein potential must be square".into()));
    }
    let grid = a.grid().clone();
    let h = grid.h();
    let eval = |t: f64| {
        let s = (t / h).clamp(0.0, grid.n() as f64);
        let i = (s.floor() as usize).min(grid.n().saturating_sub(1));
        let w = s - i as f64;
        a.sample(i) * re(1.0 - w) + a.sample(i + 1) * re(w)
    };
    let coef = |t: f64| {
        let at = eval(t);
        let mut m = vstack(&hstack(&zeros(r, r), &at), &hstack(&at.adjoint(), &zeros(r, r)));
        for d in 0..r {
            m[(d, d)] += C64::i() * lambda;
        }
        m
    };
    let rhs = |t: f64, y: &CMat| y * coef(t);
    let mut y = hstack(&identity(r), &identity(r));
    let mut samples = Vec::with_capacity(grid.len());
    samples.push(y.clone());
    for i in 0..grid.n() {
        y = rk4_step(&rhs, grid.node(i), h, &y);
        samples.push(y.clone());
    }
    MatrixFunction::new(grid, samples)
}

/// `U(tau, lambda) = e^{-i tau lambda} Y(tau, -2 conj lambda)*`, a `2r x r`
/// solution of the canonical system. `sweep` pairs spectral points with
/// Krein solutions; the entry for `-2 conj lambda` must be present.
pub fn krein_to_canonical(sweep: &[(C64, MatrixFunction)], lambda: C64) -> Result<MatrixFunction> {
    let target = -2.0 * lambda.conj();
    let (_, y) = sweep
        .iter()
        .find(|(mu, _)| (mu - target).norm() <= 1e-12 * (1.0 + target.norm()))
        .ok_or(Error::MissingSpectralPoint(target))?;
    let grid = y.grid().clone();
    Ok(y.adjoint().map(|i, m| m * (-C64::i() * lambda * grid.node(i)).exp()))
}

/// `max || -i j U' - lambda U - V U ||` over interior nodes, with `U'` by
/// central differences.
pub fn canonical_residual(u: &MatrixFunction, v: &Potential, lambda: C64) -> Result<f64> {
    let r = v.r();
    if u.dims().0 != 2 * r || u.grid().n() != v.grid().n() {
        return Err(Error::ShapeMismatch("canonical residual operands".into()));
    }
    let du = central_derivative(u)?;
    let j = j_matrix(r);
    let mut worst: f64 = 0.0;
    for i in 1..u.grid().n() {
        let vi = v.samples()[i].clone();
        let big_v = vstack(&hstack(&zeros(r, r), &vi), &hstack(&vi.adjoint(), &zeros(r, r)));
        let res = &j * du.sample(i) * (-C64::i()) - u.sample(i) * lambda - big_v * u.sample(i);
        worst = worst.max(max_abs(&res));
    }
    Ok(worst)
}

/// `theta`, `omega` rows of `u(., 0)` with their exact derivatives.
#[derive(Clone, Debug)]
pub struct ThetaOmegaPair {
    pub v: Potential,
    pub theta: MatrixFunction,
    pub omega: MatrixFunction,
    pub dtheta: MatrixFunction,
    pub domega: MatrixFunction,
}

/// Identities of the `lambda = 0` rows.
#[derive(Clone, Debug, Default)]
pub struct RowIdentityResiduals {
    /// `theta J theta* = I`
    pub theta_j_theta: f64,
    /// `theta' J theta* = 0`
    pub dtheta_j_theta: f64,
    /// `theta J omega* = 0`
    pub theta_j_omega: f64,
    /// `omega J omega* = -I`
    pub omega_j_omega: f64,
    /// `omega' J omega* = 0`
    pub domega_j_omega: f64,
    /// `omega' J theta* = -i v*`
    pub domega_j_theta: f64,
}

impl RowIdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.theta_j_theta,
            self.dtheta_j_theta,
            self.theta_j_omega,
            self.omega_j_omega,
            self.domega_j_omega,
            self.domega_j_theta,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn theta_omega_at_zero(v: &Potential) -> Result<ThetaOmegaPair> {
    let u = integrate_canonical(v, re(0.0))?;
    let r = v.r();
    let grid = v.grid().clone();
    let rows = |start: usize| {
        MatrixFunction::new(grid.clone(), u.samples().iter().map(|m| m.rows(start, r).into_owned()).collect())
    };
    let theta = rows(0)?;
    let omega = rows(r)?;
    let dtheta = theta.map(|i, _| v.samples()[i].clone() * omega.sample(i) * C64::i());
    let domega = omega.map(|i, _| v.samples()[i].adjoint() * theta.sample(i) * (-C64::i()));
    Ok(ThetaOmegaPair { v: v.clone(), theta, omega, dtheta, domega })
}

impl ThetaOmegaPair {
    pub fn grid(&self) -> &Grid {
        self.theta.grid()
    }

    pub fn r(&self) -> usize {
        self.v.r()
    }

    /// `theta_{0,1}`, the first `r` columns of `theta`.
    pub fn theta01(&self) -> MatrixFunction {
        self.theta.columns(0, self.r())
    }

    /// `theta_{0,2}`, the last `r` columns of `theta`.
    pub fn theta02(&self) -> MatrixFunction {
        self.theta.columns(self.r(), self.r())
    }

    pub fn omega01(&self) -> MatrixFunction {
        self.omega.columns(0, self.r())
    }

    pub fn omega02(&self) -> MatrixFunction {
        self.omega.columns(self.r(), self.r())
    }

    pub fn identities(&self) -> RowIdentityResiduals {
        let r = self.r();
        let big_j = big_j_matrix(r);
        let id = identity(r);
        let mut out = RowIdentityResiduals::default();
        for i in 0..self.grid().len() {
            let th = self.theta.sample(i);
            let om = self.omega.sample(i);
            let dth = self.dtheta.sample(i);
            let dom = self.domega.sample(i);
            let v = &self.v.samples()[i];
            out.theta_j_theta = out.theta_j_theta.max(max_abs_diff(&(th * &big_j * th.adjoint()), &id));
            out.dtheta_j_theta = out.dtheta_j_theta.max(max_abs(&(dth * &big_j * th.adjoint())));
            out.theta_j_omega = out.theta_j_omega.max(max_abs(&(th * &big_j * om.adjoint())));
            out.omega_j_omega = out.omega_j_omega.max(max_abs_diff(&(om * &big_j * om.adjoint()), &(-&id)));
            out.domega_j_omega = out.domega_j_omega.max(max_abs(&(dom * &big_j * om.adjoint())));
            out.domega_j_theta =
                out.domega_j_theta.max(max_abs_diff(&(dom * &big_j * th.adjoint()), &(v.adjoint() * (-C64::i()))));
        }
        out
    }
}

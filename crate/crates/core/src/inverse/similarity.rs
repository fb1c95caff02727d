use crate::canonical::ThetaOmegaPair;
use crate::error::{Error, Result};
use crate::numerics::{identity, max_abs, max_abs_diff, re, try_inverse, Grid, MatrixFunction, VolterraOp};
use crate::{CMat, C64};

use super::semiseparable::{monomials, SemiSepOperator};

pub const MAX_NEUMANN_TERMS: usize = 30;

/// Lower-triangle samples `(x_i, t_j)`, `j <= i`.
#[derive(Clone, Debug)]
pub struct Triangle {
    len: usize,
    data: Vec<CMat>,
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

impl Triangle {
    pub fn zeros(len: usize, rows: usize, cols: usize) -> Self {
        Triangle { len, data: vec![CMat::zeros(rows, cols); len * (len + 1) / 2] }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn at(&self, i: usize, j: usize) -> &CMat {
        &self.data[tri(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, m: CMat) {
        self.data[tri(i, j)] = m;
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(max_abs).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Triangle) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max)
    }

    fn add_assign(&mut self, other: &Triangle) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Largest value on the column `t = 0`.
    pub fn column_zero_norm(&self) -> f64 {
        (0..self.len).map(|i| max_abs(self.at(i, 0))).fold(0.0, f64::max)
    }
}

/// How `rho' = F' G rho` is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rho {
    /// `rho = I`, valid when `F' G = 0`.
    Identity,
    /// Integrate the equation.
    General,
}

#[derive(Clone, Debug)]
pub struct SimilarityData {
    pub rho: MatrixFunction,
    pub u1tilde: MatrixFunction,
    pub alpha: MatrixFunction,
    pub beta: MatrixFunction,
    /// `N(x, t) = sum_k gamma_k(x, t)`.
    pub n_kernel: Triangle,
    pub neumann_terms: usize,
    /// Sup norm of each `gamma_k`.
    pub term_norms: Vec<f64>,
    /// `max || F' G ||`, the size of what `Rho::Identity` discards.
    pub rho_defect: f64,
    pub e: VolterraOp,
    pub einv: VolterraOp,
}

/// RK4 on `y' = c(x) y` or `y' = y c(x)` with `c` linearly interpolated.
fn rk4_linear(coef: &[CMat], h: f64, y0: CMat, right: bool) -> Vec<CMat> {
    let mul = |c: &CMat, y: &CMat| if right { y * c } else { c * y };
    let mut y = y0;
    let mut out = Vec::with_capacity(coef.len());
    out.push(y.clone());
    for i in 0..coef.len() - 1 {
        let c0 = &coef[i];
        let c2 = &coef[i + 1];
        let c1 = (c0 + c2) * re(0.5);
        let k1 = mul(c0, &y);
        let k2 = mul(&c1, &(&y + &k1 * re(0.5 * h)));
        let k3 = mul(&c1, &(&y + &k2 * re(0.5 * h)));
        let k4 = mul(c2, &(&y + &k3 * re(h)));
        y = &y + (k1 + (k2 + k3) * re(2.0) + k4) * re(h / 6.0);
        out.push(y.clone());
    }
    out
}

/// `Psi(y, c) = int_c^y beta(s) m(s, c) ds` on the triangle.
fn psi_of(beta: &MatrixFunction, m: &Triangle, h: f64) -> Triangle {
    let len = m.len();
    let (p, r) = beta.dims();
    let mut psi = Triangle::zeros(len, p, r);
    for c in 0..len {
        let mut acc = CMat::zeros(p, r);
        let mut prev = beta.sample(c) * m.at(c, c);
        for y in c + 1..len {
            let cur = beta.sample(y) * m.at(y, c);
            acc += (&prev + &cur) * re(0.5 * h);
            psi.set(y, c, acc.clone());
            prev = cur;
        }
    }
    psi
}

/// `out(x, x - d) = int_d^x alpha(y) q(y, y - d) dy`.
fn along_diagonals(alpha: &MatrixFunction, q: impl Fn(usize, usize) -> CMat, len: usize, r: usize, h: f64) -> Triangle {
    let mut out = Triangle::zeros(len, r, r);
    for d in 0..len {
        let mut acc = CMat::zeros(r, r);
        let mut prev = alpha.sample(d) * q(d, 0);
        for x in d + 1..len {
            let cur = alpha.sample(x) * q(x, x - d);
            acc += (&prev + &cur) * re(0.5 * h);
            out.set(x, x - d, acc.clone());
            prev = cur;
        }
    }
    out
}

/// Neumann series for `N` with kernel `gamma(x, t) = alpha(x) beta(t)`.
fn neumann_kernel(alpha: &MatrixFunction, beta: &MatrixFunction, tol: f64) -> Result<(Triangle, Vec<f64>)> {
    let grid = alpha.grid();
    let len = grid.len();
    let r = alpha.dims().0;
    let h = grid.h();
    let mut term = along_diagonals(alpha, |_, c| beta.sample(c).clone(), len, r, h);
    let mut sum = term.clone();
    let mut norms = vec![term.sup_norm()];
    loop {
        let last = *norms.last().unwrap();
        if last < tol {
            return Ok((sum, norms));
        }
        if norms.len() >= MAX_NEUMANN_TERMS {
            return Err(Error::NoConvergence { terms: norms.len(), last });
        }
        let psi = psi_of(beta, &term, h);
        term = along_diagonals(alpha, |y, c| psi.at(y, c).clone(), len, r, h);
        norms.push(term.sup_norm());
        sum.add_assign(&term);
    }
}

/// `N` by forward substitution along the characteristics `x - t = d` of
/// `(d/dx + d/dt) N = gamma + int_t^x gamma(x, s) N(s, t) ds`, `N(x, 0) = 0`.
pub fn similarity_kernel_direct(alpha: &MatrixFunction, beta: &MatrixFunction) -> Result<Triangle> {
    let grid = alpha.grid();
    let len = grid.len();
    let (r, p) = alpha.dims();
    let h = grid.h();
    let gamma = |x: usize, t: usize| alpha.sample(x) * beta.sample(t);
    let mut n = Triangle::zeros(len, r, r);
    let mut psi = Triangle::zeros(len, p, r);
    for d in 0..len {
        let mut r_prev = gamma(d, 0);
        for x in d + 1..len {
            let c = x - d;
            let m_prev = n.at(x - 1, c - 1).clone();
            let m = if d == 0 {
                &m_prev + (&r_prev + gamma(x, x)) * re(0.5 * h)
            } else {
                let known_psi = psi.at(x - 1, c) + beta.sample(x - 1) * n.at(x - 1, c) * re(0.5 * h);
                let rhs = &m_prev
                    + (&r_prev + gamma(x, c) + alpha.sample(x) * &known_psi) * re(0.5 * h);
                let lhs = identity(r) - alpha.sample(x) * beta.sample(x) * re(0.25 * h * h);
                let inv = try_inverse(&lhs).ok_or_else(|| Error::Singular("characteristic step".into()))?;
                inv * rhs
            };
            n.set(x, c, m.clone());
            if d > 0 {
                let new_psi = psi.at(x - 1, c) + (beta.sample(x - 1) * n.at(x - 1, c) + beta.sample(x) * &m) * re(0.5 * h);
                psi.set(x, c, new_psi);
            }
            r_prev = gamma(x, c) + alpha.sample(x) * psi.at(x, c);
        }
    }
    Ok(n)
}

/// Similarity `L E = E A` for `L` from `theta`: `F' = theta'`, `G' = J theta'*`,
/// `rho = I`.
pub fn similarity_e(l: &SemiSepOperator, pair: &ThetaOmegaPair, tol: f64) -> Result<SimilarityData> {
    let big_j = crate::numerics::big_j_matrix(pair.r());
    let dg = pair.dtheta.map(|_, t| &big_j * t.adjoint());
    similarity_e_general(l, &pair.dtheta, &dg, Rho::Identity, tol)
}

pub fn similarity_e_general(
    l: &SemiSepOperator,
    df: &MatrixFunction,
    dg: &MatrixFunction,
    rho_mode: Rho,
    tol: f64,
) -> Result<SimilarityData> {
    let grid = l.grid().clone();
    let r = l.r();
    let p = l.p();
    let h = grid.h();
    if df.dims() != (r, p) || dg.dims() != (p, r) {
        return Err(Error::ShapeMismatch("derivatives of F and G".into()));
    }
    let g = l.g();
    let fg_prime: Vec<CMat> = (0..grid.len()).map(|i| df.sample(i) * g.sample(i)).collect();
    let rho_defect = fg_prime.iter().map(max_abs).fold(0.0, f64::max);
    let rho = match rho_mode {
        Rho::Identity => MatrixFunction::constant(&grid, &identity(r)),
        Rho::General => MatrixFunction::new(grid.clone(), rk4_linear(&fg_prime, h, identity(r), false))?,
    };
    let gf_prime: Vec<CMat> = (0..grid.len()).map(|i| -(g.sample(i) * df.sample(i))).collect();
    let u1tilde = MatrixFunction::new(grid.clone(), rk4_linear(&gf_prime, h, identity(p), false))?;
    let mut alpha = Vec::with_capacity(grid.len());
    let mut beta = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let rho_inv = try_inverse(rho.sample(i)).ok_or_else(|| Error::Singular(format!("rho at node {i}")))?;
        let u_inv =
            try_inverse(u1tilde.sample(i)).ok_or_else(|| Error::Singular(format!("u1 tilde at node {i}")))?;
        alpha.push(rho_inv * df.sample(i) * u1tilde.sample(i));
        let gi = g.sample(i);
        beta.push(-(u_inv * (gi * df.sample(i) * gi + dg.sample(i)) * rho.sample(i)));
    }
    let alpha = MatrixFunction::new(grid.clone(), alpha)?;
    let beta = MatrixFunction::new(grid.clone(), beta)?;
    let (n_kernel, term_norms) = neumann_kernel(&alpha, &beta, tol)?;
    let len = grid.len();
    let mut kernel = Vec::with_capacity(len * (len + 1) / 2);
    for i in 0..len {
        for j in 0..=i {
            kernel.push(rho.sample(i) * n_kernel.at(i, j));
        }
    }
    let e = VolterraOp::new(grid.clone(), r, rho.samples().to_vec(), kernel)?;
    let einv = e.inverse()?;
    Ok(SimilarityData {
        rho,
        u1tilde,
        alpha,
        beta,
        neumann_terms: term_norms.len(),
        term_norms,
        n_kernel,
        rho_defect,
        e,
        einv,
    })
}

/// `g(x, lambda) = e^{lambda x} I + int_0^x e^{lambda t} N(x, t) dt`.
pub fn g_from_kernel(data: &SimilarityData, lambda: C64) -> MatrixFunction {
    let grid = data.rho.grid().clone();
    let r = data.rho.dims().0;
    let h = grid.h();
    MatrixFunction::from_fn(&grid, |_| CMat::zeros(r, r)).map(|i, _| {
        let x = grid.node(i);
        let mut acc = identity(r) * (lambda * x).exp();
        for j in 0..=i {
            if i == 0 {
                break;
            }
            let w = if j == 0 || j == i { 0.5 } else { 1.0 };
            acc += data.n_kernel.at(i, j) * ((lambda * grid.node(j)).exp() * (w * h));
        }
        acc
    })
}

/// `rho(x)^{-1} F(x) u1(x, lambda) G(0)` with `u1' = lambda G F u1`, `u1(0) = I`.
pub fn g_from_u1(l: &SemiSepOperator, rho: &MatrixFunction, lambda: C64) -> Result<MatrixFunction> {
    let grid = l.grid();
    let coef: Vec<CMat> = (0..grid.len()).map(|i| l.g().sample(i) * l.f().sample(i) * lambda).collect();
    let u1 = rk4_linear(&coef, grid.h(), identity(l.p()), false);
    let g0 = l.g().sample(0).clone();
    let mut out = Vec::with_capacity(grid.len());
    for (i, u) in u1.iter().enumerate() {
        let rho_inv = try_inverse(rho.sample(i)).ok_or_else(|| Error::Singular(format!("rho at node {i}")))?;
        out.push(rho_inv * l.f().sample(i) * u * &g0);
    }
    MatrixFunction::new(grid.clone(), out)
}

pub fn u1_oracle_residual(l: &SemiSepOperator, data: &SimilarityData, lambda: C64) -> Result<f64> {
    g_from_kernel(data, lambda).max_diff(&g_from_u1(l, &data.rho, lambda)?)
}

/// `max_j sup_x || (L E A^j I)(x) - (E A^{j+1} I)(x) ||`, applied to the
/// monomials of degree `0..=degree`.
pub fn ea_le_residual(l: &SemiSepOperator, e: &VolterraOp, degree: usize) -> Result<f64> {
    let grid: &Grid = l.grid();
    let a = VolterraOp::integration(grid, l.r());
    let mut worst: f64 = 0.0;
    for m in monomials(grid, l.r(), degree) {
        let lhs = e.apply(&a.apply(&m)?)?;
        let rhs = l.apply(&e.apply(&m)?)?;
        worst = worst.max(lhs.max_diff(&rhs)?);
    }
    Ok(worst)
}

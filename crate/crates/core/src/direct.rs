//! Explicit fundamental solution of the canonical system from an
//! accelerant, and the Krein orthogonal functions.

use crate::accelerant::{check_positive, resolvent_kernel, Accelerant, PositivityReport, Potential, ResolventFactor};
use crate::error::{Error, Result};
use crate::numerics::{
    big_j_matrix, cumulative_trapezoid, hstack, j_matrix, max_abs, max_abs_diff, q_matrix, re, vstack, Grid,
    MatrixFunction,
};
use crate::{CMat, C64};

/// `u(tau_i, lambda)` on a grid, with blocks `[[theta1, theta2], [omega1, omega2]]`.
#[derive(Clone, Debug)]
pub struct FundamentalSolutionSample {
    pub lambda: C64,
    grid: Grid,
    samples: Vec<CMat>,
}

impl FundamentalSolutionSample {
    pub fn new(lambda: C64, grid: Grid, samples: Vec<CMat>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::ShapeMismatch("fundamental solution sample count".into()));
        }
        let n = samples[0].nrows();
        if n % 2 != 0 || samples.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::ShapeMismatch("fundamental solution blocks must be 2r x 2r".into()));
        }
        Ok(FundamentalSolutionSample { lambda, grid, samples })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn r(&self) -> usize {
        self.samples[0].nrows() / 2
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    pub fn at(&self, i: usize) -> &CMat {
        &self.samples[i]
    }

    /// Block `(row, col)` of `u(tau_i)`, each index in `{0, 1}`.
    pub fn block(&self, i: usize, row: usize, col: usize) -> CMat {
        let r = self.r();
        self.samples[i].view((row * r, col * r), (r, r)).into_owned()
    }

    pub fn max_diff(&self, other: &FundamentalSolutionSample) -> f64 {
        self.samples.iter().zip(&other.samples).fold(0.0, |m, (a, b)| m.max(max_abs_diff(a, b)))
    }

    /// `max_x || u(x, conj z)* j u(x, z) - J ||` where `self` holds `u(., z)`
    /// and `conj` holds `u(., conj z)`.
    pub fn j_unitarity_residual(&self, conj: &FundamentalSolutionSample) -> f64 {
        let r = self.r();
        let j = j_matrix(r);
        let big_j = big_j_matrix(r);
        self.samples
            .iter()
            .zip(&conj.samples)
            .map(|(u, ub)| max_abs_diff(&(ub.adjoint() * &j * u), &big_j))
            .fold(0.0, f64::max)
    }
}

/// `l1(x) = e^{2 i z x} (I - 2 int_0^x e^{-2 i z t} k(t) dt)`, `l2(x) = e^{2 i z x} I`.
pub fn ell_functions(k: &Accelerant, lambda: C64) -> (MatrixFunction, MatrixFunction) {
    let grid = k.grid();
    let r = k.r();
    let integrand = MatrixFunction::from_fn(grid, |_| CMat::zeros(r, r))
        .map(|i, _| &k.samples()[i] * (C64::new(0.0, -2.0) * lambda * grid.node(i)).exp());
    let cum = cumulative_trapezoid(&integrand);
    let l1 = cum.map(|i, c| {
        (CMat::identity(r, r) - c * re(2.0)) * (C64::new(0.0, 2.0) * lambda * grid.node(i)).exp()
    });
    let l2 = MatrixFunction::from_fn(grid, |x| CMat::identity(r, r) * (C64::new(0.0, 2.0) * lambda * x).exp());
    (l1, l2)
}

/// The four `r x r` blocks of the fundamental solution.
#[derive(Clone, Debug)]
pub struct ThetaOmega {
    pub theta1: MatrixFunction,
    pub theta2: MatrixFunction,
    pub omega1: MatrixFunction,
    pub omega2: MatrixFunction,
}

/// Direct problem for one accelerant: the nested factorization of `T` is
/// computed once and shared by every spectral parameter.
#[derive(Clone, Debug)]
pub struct DirectSolver {
    k: Accelerant,
    factor: ResolventFactor,
    positivity: PositivityReport,
    gamma_k: MatrixFunction,
}

impl DirectSolver {
    pub fn new(k: &Accelerant) -> Result<Self> {
        let positivity = check_positive(k)?;
        let factor = ResolventFactor::new(k)?;
        let gamma_k = factor.apply(&k.to_function())?;
        Ok(DirectSolver { k: k.clone(), factor, positivity, gamma_k })
    }

    pub fn accelerant(&self) -> &Accelerant {
        &self.k
    }

    pub fn factor(&self) -> &ResolventFactor {
        &self.factor
    }

    pub fn positivity(&self) -> &PositivityReport {
        &self.positivity
    }

    /// `(Gamma^{-1} k)(tau) = gamma_tau(tau, 0)`.
    pub fn gamma_inv_k(&self) -> &MatrixFunction {
        &self.gamma_k
    }

    pub fn potential(&self) -> Result<Potential> {
        Potential::new(self.k.grid().clone(), self.gamma_k.samples().iter().map(|g| g * (-C64::i())).collect())
    }

    /// `theta_j = e^{-i tau z} (Gamma^{-1} l_j)(tau) / sqrt 2` and
    /// `omega_j = e^{-i tau z} ((-1)^j I + int_0^tau (Gamma^{-1} k)* (Gamma^{-1} l_j)) / sqrt 2`.
    pub fn theta_omega(&self, lambda: C64) -> Result<ThetaOmega> {
        let grid = self.k.grid();
        let r = self.k.r();
        let (l1, l2) = ell_functions(&self.k, lambda);
        let gk_adj = self.gamma_k.adjoint();
        let phase = |i: usize| (C64::new(0.0, -1.0) * lambda * grid.node(i)).exp() * std::f64::consts::FRAC_1_SQRT_2;
        let mut parts = Vec::with_capacity(4);
        for (sign, l) in [(-1.0, &l1), (1.0, &l2)] {
            let g = self.factor.apply(l)?;
            let prod = gk_adj.zip_with(&g, |a, b| a * b)?;
            let cum = cumulative_trapezoid(&prod);
            parts.push(g.map(|i, m| m * phase(i)));
            parts.push(cum.map(|i, c| (CMat::identity(r, r) * re(sign) + c) * phase(i)));
        }
        let omega2 = parts.pop().unwrap();
        let theta2 = parts.pop().unwrap();
        let omega1 = parts.pop().unwrap();
        let theta1 = parts.pop().unwrap();
        Ok(ThetaOmega { theta1, theta2, omega1, omega2 })
    }

    pub fn fundamental_solution(&self, lambda: C64) -> Result<FundamentalSolutionSample> {
        let to = self.theta_omega(lambda)?;
        let samples = (0..self.k.grid().len())
            .map(|i| {
                vstack(
                    &hstack(to.theta1.sample(i), to.theta2.sample(i)),
                    &hstack(to.omega1.sample(i), to.omega2.sample(i)),
                )
            })
            .collect::<Vec<_>>();
        let mut samples = samples;
        // the formulas reproduce Q* at tau = 0 exactly up to rounding; pin it
        samples[0] = q_matrix(self.k.r()).adjoint();
        FundamentalSolutionSample::new(lambda, self.k.grid().clone(), samples)
    }
}

pub fn theta_omega(k: &Accelerant, lambda: C64) -> Result<ThetaOmega> {
    DirectSolver::new(k)?.theta_omega(lambda)
}

pub fn fundamental_solution(k: &Accelerant, lambda: C64) -> Result<FundamentalSolutionSample> {
    DirectSolver::new(k)?.fundamental_solution(lambda)
}

/// `u(tau, z)` at one node from the resolvent kernel `gamma_tau` directly:
/// `theta_j = e^{-i tau z} (l_j(tau) + int gamma_tau(tau, s) l_j(s) ds) / sqrt 2`,
/// `omega_j = e^{-i tau z} ((-1)^j I + int gamma_tau(0, s) l_j(s) ds) / sqrt 2`.
pub fn fundamental_at_from_resolvent(k: &Accelerant, tau_index: usize, lambda: C64) -> Result<CMat> {
    let grid = k.grid();
    let r = k.r();
    let res = resolvent_kernel(k, tau_index)?;
    let (l1, l2) = ell_functions(k, lambda);
    let m = tau_index;
    let h = grid.h();
    let w = crate::numerics::trapezoid_weights(m);
    let phase = (C64::new(0.0, -1.0) * lambda * grid.node(m)).exp() * std::f64::consts::FRAC_1_SQRT_2;
    let mut blocks = Vec::with_capacity(4);
    for (sign, l) in [(-1.0, &l1), (1.0, &l2)] {
        let mut top = l.sample(m).clone();
        let mut bottom = CMat::identity(r, r) * re(sign);
        for s in 0..=m {
            top += res.at(m, s) * l.sample(s) * re(h * w[s]);
            bottom += res.first_row(s) * l.sample(s) * re(h * w[s]);
        }
        blocks.push((top * phase, bottom * phase));
    }
    Ok(vstack(&hstack(&blocks[0].0, &blocks[1].0), &hstack(&blocks[0].1, &blocks[1].1)))
}

/// Krein orthogonal functions at `tau`.
#[derive(Clone, Debug)]
pub struct KreinOrthogonalPair {
    pub tau: f64,
    pub lambda: C64,
    pub p: CMat,
    pub p_star: CMat,
}

/// `P(tau, z) = e^{i z tau} (I + int_0^tau e^{-i z x} gamma_tau(x, 0) dx)`,
/// `P_*(tau, z) = I + int_0^tau e^{i z x} gamma_tau(tau - x, tau) dx`, with
/// `gamma_tau(tau - x, tau) = gamma_tau(tau, tau - x)*`.
pub fn krein_orthogonal(k: &Accelerant, tau_index: usize, lambda: C64) -> Result<KreinOrthogonalPair> {
    let grid = k.grid();
    let r = k.r();
    let res = resolvent_kernel(k, tau_index)?;
    let m = tau_index;
    let h = grid.h();
    let w = crate::numerics::trapezoid_weights(m);
    let tau = grid.node(m);
    let mut p = CMat::identity(r, r);
    let mut ps = CMat::identity(r, r);
    for x in 0..=m {
        let t = grid.node(x);
        p += res.at(x, 0) * ((-C64::i()) * lambda * t).exp() * re(h * w[x]);
        ps += res.at(m, m - x).adjoint() * (C64::i() * lambda * t).exp() * re(h * w[x]);
    }
    Ok(KreinOrthogonalPair { tau, lambda, p: p * (C64::i() * lambda * tau).exp(), p_star: ps })
}

impl KreinOrthogonalPair {
    /// Deviation of `theta2(tau, z) = e^{i tau z} P_*(tau, 2 conj z)* / sqrt 2` and
    /// `omega2(tau, z) = e^{i tau z} P(tau, 2 conj z)* / sqrt 2`, with `self`
    /// evaluated at `2 conj z`.
    pub fn relation_residual(&self, theta2: &CMat, omega2: &CMat) -> f64 {
        let z = self.lambda.conj() * 0.5;
        let phase = (C64::i() * self.tau * z).exp() * std::f64::consts::FRAC_1_SQRT_2;
        max_abs_diff(theta2, &(self.p_star.adjoint() * phase)).max(max_abs_diff(omega2, &(self.p.adjoint() * phase)))
    }
}

/// `max |u(0) - Q*|`, zero by construction.
pub fn initial_defect(u: &FundamentalSolutionSample) -> f64 {
    max_abs(&(u.at(0) - q_matrix(u.r()).adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::scalar;

    fn constant(n: usize, c: f64) -> Accelerant {
        Accelerant::constant(&Grid::new(1.0, n).unwrap(), &scalar(re(c))).unwrap()
    }

    #[test]
    fn ell_examples() {
        let k = constant(50, -2.0);
        let (l1, l2) = ell_functions(&k, re(0.0));
        for i in 0..=50 {
            let x = k.grid().node(i);
            assert!((l1.sample(i)[(0, 0)] - re(1.0 + 4.0 * x)).norm() < 1e-13);
            assert!((l2.sample(i)[(0, 0)] - re(1.0)).norm() < 1e-15);
        }
        let (l1, _) = ell_functions(&k, C64::new(0.3, 0.4));
        assert!((l1.sample(0)[(0, 0)] - re(1.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_accelerant_gives_exponentials() {
        let g = Grid::new(1.0, 20).unwrap();
        let k = Accelerant::zero(&g, 2);
        let z = C64::new(0.7, -0.3);
        let u = fundamental_solution(&k, z).unwrap();
        let j = j_matrix(2);
        for i in 0..=20 {
            let t = g.node(i);
            let mut e = CMat::zeros(4, 4);
            for d in 0..4 {
                e[(d, d)] = (C64::i() * z * t * j[(d, d)]).exp();
            }
            assert!(max_abs_diff(u.at(i), &(e * q_matrix(2).adjoint())) < 1e-13);
        }
    }

    #[test]
    fn constant_kernel_theta_omega() {
        let k = constant(100, -2.0);
        let to = theta_omega(&k, re(0.0)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut err: f64 = 0.0;
        for i in 0..=100 {
            let t = k.grid().node(i);
            err = err
                .max((to.theta1.sample(i)[(0, 0)] - re(s * (1.0 + 2.0 * t))).norm())
                .max((to.theta2.sample(i)[(0, 0)] - re(s / (1.0 + 2.0 * t))).norm())
                .max((to.omega1.sample(i)[(0, 0)] - re(-s * (1.0 + 2.0 * t))).norm())
                .max((to.omega2.sample(i)[(0, 0)] - re(s / (1.0 + 2.0 * t))).norm());
        }
        // theta is exact for this kernel; omega carries the trapezoid error of
        // integrating 1/(1+2t)^2-type products
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn krein_constant_kernel() {
        let c = -1.5;
        let k = constant(200, c);
        let m = 120;
        let tau = k.grid().node(m);
        let z = re(0.8);
        let pair = krein_orthogonal(&k, m, z).unwrap();
        let g = c / (1.0 - c * tau);
        let want = (C64::i() * z * tau).exp() * (re(1.0) + (re(1.0) - (-C64::i() * z * tau).exp()) / (C64::i() * z) * g);
        assert!((pair.p[(0, 0)] - want).norm() < 1e-4);
        let zero = krein_orthogonal(&k, m, re(0.0)).unwrap();
        assert!((zero.p[(0, 0)] - re(1.0 / (1.0 - c * tau))).norm() < 1e-12);
    }
}

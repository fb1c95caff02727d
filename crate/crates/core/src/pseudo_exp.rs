//! Pseudo-exponential accelerants and potentials generated by admissible
//! triples, with their closed-form fundamental solutions.

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::accelerant::{Accelerant, Potential};
use crate::error::{Error, Result};
use crate::numerics::{
    hstack, j_matrix, matrix_exp, max_abs, max_abs_diff, q_matrix, re, try_inverse, vstack, Grid,
};
use crate::{CMat, C64};

/// Matrices `(B, Phi1, Phi2)` with `B* - B = i Phi2 Phi2*`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleTriple {
    b: CMat,
    phi1: CMat,
    phi2: CMat,
}

pub fn validate_triple(b: CMat, phi1: CMat, phi2: CMat) -> Result<AdmissibleTriple> {
    let nn = b.nrows();
    if b.ncols() != nn || phi1.nrows() != nn || phi2.nrows() != nn || phi1.ncols() != phi2.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "B is {:?}, Phi1 is {:?}, Phi2 is {:?}",
            b.shape(),
            phi1.shape(),
            phi2.shape()
        )));
    }
    if nn == 0 || phi1.ncols() == 0 {
        return Err(Error::ShapeMismatch("empty triple".into()));
    }
    let defect = b.adjoint() - &b - &phi2 * phi2.adjoint() * C64::i();
    let residual = max_abs(&defect);
    let scale = 1.0 + max_abs(&b) + max_abs(&phi2).powi(2);
    if !(residual <= 1e-12 * scale) {
        return Err(Error::Inadmissible(residual));
    }
    Ok(AdmissibleTriple { b, phi1, phi2 })
}

impl AdmissibleTriple {
    pub fn nn(&self) -> usize {
        self.b.nrows()
    }

    pub fn r(&self) -> usize {
        self.phi1.ncols()
    }

    pub fn b(&self) -> &CMat {
        &self.b
    }

    pub fn phi1(&self) -> &CMat {
        &self.phi1
    }

    pub fn phi2(&self) -> &CMat {
        &self.phi2
    }

    /// `Phi = Phi1 + i Phi2`.
    pub fn phi(&self) -> CMat {
        &self.phi1 + &self.phi2 * C64::i()
    }

    /// `A = B - Phi1 Phi2*`.
    pub fn a(&self) -> CMat {
        &self.b - &self.phi1 * self.phi2.adjoint()
    }

    /// `A_M^x = -2 [[A, -Phi1 Phi1*], [0, A*]]`.
    pub fn a_times(&self) -> CMat {
        let nn = self.nn();
        let a = self.a();
        let top = hstack(&a, &(-(&self.phi1 * self.phi1.adjoint())));
        let bottom = hstack(&CMat::zeros(nn, nn), &a.adjoint());
        vstack(&top, &bottom) * re(-2.0)
    }

    /// `k(t) = -2 Phi1* e^{2 i t B*} Phi` for `t >= 0`.
    pub fn accelerant_at(&self, t: f64) -> Result<CMat> {
        let e = matrix_exp(&(self.b.adjoint() * C64::new(0.0, 2.0 * t)))?;
        Ok(self.phi1.adjoint() * e * self.phi() * re(-2.0))
    }

    /// `(U B U*, U Phi1, U Phi2)` for unitary `U`.
    pub fn transformed(&self, u: &CMat) -> Result<AdmissibleTriple> {
        validate_triple(u * &self.b * u.adjoint(), u * &self.phi1, u * &self.phi2)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, p: usize, q: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(p, q, |_, _| {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        C64::new(s * x, s * y)
    })
}

/// Random admissible triple: unit-variance complex gaussian `B0`, `Phi1`,
/// `Phi2`, and `B = H - (i/2) Phi2 Phi2*` with `H` the hermitian part of `B0`.
pub fn random_triple(nn: usize, r: usize, seed: u64) -> Result<AdmissibleTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b0 = gaussian(&mut rng, nn, nn);
    let phi1 = gaussian(&mut rng, nn, r);
    let phi2 = gaussian(&mut rng, nn, r);
    let h = (&b0 + b0.adjoint()) * re(0.5);
    let b = h - &phi2 * phi2.adjoint() * C64::new(0.0, 0.5);
    validate_triple(b, phi1, phi2)
}

pub fn pe_accelerant(triple: &AdmissibleTriple, grid: &Grid) -> Result<Accelerant> {
    let samples = grid.nodes().into_iter().map(|t| triple.accelerant_at(t)).collect::<Result<Vec<_>>>()?;
    Accelerant::new(grid.clone(), samples)
}

/// `Pi(t)` and `Sigma(t)` on a grid.
#[derive(Clone, Debug)]
pub struct PeState {
    grid: Grid,
    a: CMat,
    pi: Vec<CMat>,
    sigma: Vec<CMat>,
    sigma_inv: Vec<CMat>,
}

fn pi_at(triple: &AdmissibleTriple, a: &CMat, t: f64) -> Result<CMat> {
    let em = matrix_exp(&(a * C64::new(0.0, -t)))?;
    let ep = matrix_exp(&(a * C64::new(0.0, t)))?;
    Ok(hstack(&(em * triple.phi1()), &(-(ep * triple.phi()))))
}

/// `Pi` by matrix exponentials at each node; `Sigma' = Pi Pi*`, `Sigma(0) = I`
/// by classical Runge-Kutta with exact values of `Pi` at the stages.
pub fn pe_state(triple: &AdmissibleTriple, grid: &Grid) -> Result<PeState> {
    let a = triple.a();
    let nn = triple.nn();
    let h = grid.h();
    let mut pi = Vec::with_capacity(grid.len());
    let mut sigma = Vec::with_capacity(grid.len());
    let mut sigma_inv = Vec::with_capacity(grid.len());
    let mut s = CMat::identity(nn, nn);
    let mut prev = pi_at(triple, &a, 0.0)?;
    // Sigma' does not depend on Sigma, so each Runge-Kutta step is Simpson's
    // rule; substeps keep the displacement identity at round-off level
    const SUBSTEPS: usize = 8;
    let hs = h / SUBSTEPS as f64;
    for i in 0..grid.len() {
        if i > 0 {
            let t0 = grid.node(i - 1);
            for q in 0..SUBSTEPS {
                let ta = t0 + q as f64 * hs;
                let cur = if q + 1 == SUBSTEPS { pi_at(triple, &a, grid.node(i))? } else { pi_at(triple, &a, ta + hs)? };
                let mid = pi_at(triple, &a, ta + 0.5 * hs)?;
                let f0 = &prev * prev.adjoint();
                let fm = &mid * mid.adjoint();
                let f1 = &cur * cur.adjoint();
                s += (f0 + fm * re(4.0) + f1) * re(hs / 6.0);
                prev = cur;
            }
            s = (&s + s.adjoint()) * re(0.5);
        }
        let inv = try_inverse(&s).ok_or_else(|| Error::Singular(format!("Sigma at t = {}", grid.node(i))))?;
        pi.push(prev.clone());
        sigma.push(s.clone());
        sigma_inv.push(inv);
    }
    Ok(PeState { grid: grid.clone(), a, pi, sigma, sigma_inv })
}

impl PeState {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn pi(&self, i: usize) -> &CMat {
        &self.pi[i]
    }

    pub fn sigma(&self, i: usize) -> &CMat {
        &self.sigma[i]
    }

    /// Smallest eigenvalue of `Sigma(t_i)`.
    pub fn sigma_min_eigenvalue(&self, i: usize) -> f64 {
        SymmetricEigen::new(self.sigma[i].clone()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `max_i || A Sigma - Sigma A* - i Pi j Pi* ||`.
    pub fn displacement_residual(&self) -> f64 {
        let r = self.pi[0].ncols() / 2;
        let j = j_matrix(r);
        self.sigma
            .iter()
            .zip(&self.pi)
            .map(|(s, p)| {
                let lhs = &self.a * s - s * self.a.adjoint();
                let rhs = p * &j * p.adjoint() * C64::i();
                max_abs_diff(&lhs, &rhs)
            })
            .fold(0.0, f64::max)
    }

    /// `v(tau) = 2 i Phi1* e^{i tau A*} Sigma^{-1} e^{i tau A} Phi`.
    pub fn potential(&self, triple: &AdmissibleTriple) -> Result<Potential> {
        let phi = triple.phi();
        let samples = (0..self.grid.len())
            .map(|i| {
                let t = self.grid.node(i);
                let e = matrix_exp(&(&self.a * C64::new(0.0, t)))?;
                let es = matrix_exp(&(self.a.adjoint() * C64::new(0.0, t)))?;
                Ok(triple.phi1().adjoint() * es * &self.sigma_inv[i] * e * &phi * C64::new(0.0, 2.0))
            })
            .collect::<Result<Vec<_>>>()?;
        Potential::new(self.grid.clone(), samples)
    }

    fn resolvent(&self, lambda: C64) -> Result<CMat> {
        let nn = self.a.nrows();
        let m = CMat::identity(nn, nn) * lambda - &self.a;
        match try_inverse(&m) {
            Some(inv) if max_abs(&inv) < 1e10 => Ok(inv),
            _ => Err(Error::SpectralPoint(lambda)),
        }
    }

    /// `w(tau, z) = I + i j Pi* Sigma^{-1} (z - A)^{-1} Pi`.
    pub fn transfer_matrix(&self, tau_index: usize, lambda: C64) -> Result<CMat> {
        self.grid.check_index(tau_index)?;
        let p = &self.pi[tau_index];
        let r2 = p.ncols();
        let res = self.resolvent(lambda)?;
        Ok(CMat::identity(r2, r2)
            + j_matrix(r2 / 2) * p.adjoint() * &self.sigma_inv[tau_index] * res * p * C64::i())
    }

    /// `u(tau, z) = w(tau, z) e^{i tau z j} w(0, z)^{-1} Q*`, using
    /// `w(0, z)^{-1} = j w(0, conj z)* j`.
    pub fn fundamental(&self, tau_index: usize, lambda: C64) -> Result<CMat> {
        let w = self.transfer_matrix(tau_index, lambda)?;
        let w0 = self.transfer_matrix(0, lambda.conj())?;
        let r = w.nrows() / 2;
        let j = j_matrix(r);
        let tau = self.grid.node(tau_index);
        let mut phase = CMat::zeros(2 * r, 2 * r);
        for i in 0..2 * r {
            let sign = if i < r { 1.0 } else { -1.0 };
            phase[(i, i)] = (C64::i() * tau * lambda * sign).exp();
        }
        Ok(w * phase * &j * w0.adjoint() * &j * q_matrix(r).adjoint())
    }

    /// `s -> gamma_tau(0, s)` on the nodes of `[0, tau]`.
    pub fn resolvent_slice(&self, triple: &AdmissibleTriple, tau_index: usize) -> Result<Vec<CMat>> {
        self.grid.check_index(tau_index)?;
        let nn = triple.nn();
        let tau = self.grid.node(tau_index);
        let ax = triple.a_times();
        let left = triple.phi().adjoint()
            * matrix_exp(&(self.a.adjoint() * C64::new(0.0, -tau)))?
            * &self.sigma_inv[tau_index]
            * matrix_exp(&(&self.a * C64::new(0.0, -tau)))?
            * re(-2.0);
        let stacked = vstack(triple.phi1(), triple.phi2());
        (0..=tau_index)
            .map(|i| {
                let s = self.grid.node(i);
                let e = matrix_exp(&(&ax * C64::new(0.0, s - tau)))?;
                Ok(&left * e.rows(0, nn) * &stacked)
            })
            .collect()
    }
}

pub fn pe_potential(triple: &AdmissibleTriple, grid: &Grid) -> Result<Potential> {
    pe_state(triple, grid)?.potential(triple)
}

pub fn transfer_matrix(triple: &AdmissibleTriple, grid: &Grid, tau_index: usize, lambda: C64) -> Result<CMat> {
    pe_state(triple, grid)?.transfer_matrix(tau_index, lambda)
}

pub fn pe_fundamental(triple: &AdmissibleTriple, grid: &Grid, tau_index: usize, lambda: C64) -> Result<CMat> {
    pe_state(triple, grid)?.fundamental(tau_index, lambda)
}

pub fn pe_resolvent_slice(triple: &AdmissibleTriple, grid: &Grid, tau_index: usize) -> Result<Vec<CMat>> {
    pe_state(triple, grid)?.resolvent_slice(triple, tau_index)
}

/// `[I 0] e^{-i tau A_M^x} [I; iI]` against `e^{i tau A} Sigma e^{i tau A*}`.
pub fn sigma_corner_residual(triple: &AdmissibleTriple, state: &PeState, tau_index: usize) -> Result<f64> {
    let nn = triple.nn();
    let tau = state.grid.node(tau_index);
    let e = matrix_exp(&(triple.a_times() * C64::new(0.0, -tau)))?;
    let lhs = e.view((0, 0), (nn, nn)) + e.view((0, nn), (nn, nn)) * C64::i();
    let ea = matrix_exp(&(&state.a * C64::new(0.0, tau)))?;
    let eas = matrix_exp(&(state.a.adjoint() * C64::new(0.0, tau)))?;
    let rhs = &ea * &state.sigma[tau_index] * eas;
    Ok(max_abs_diff(&lhs, &rhs))
}

/// Block identities of `e^{-i tau A_M^x}`: `(1,1) = e^{2 i tau A}`,
/// `(2,2) = e^{2 i tau A*}`, `(2,1) = 0`,
/// `(1,2) = i (e^{2 i tau A} - e^{i tau A} Sigma e^{i tau A*})`.
pub fn block_residual(triple: &AdmissibleTriple, state: &PeState, tau_index: usize) -> Result<f64> {
    let nn = triple.nn();
    let tau = state.grid.node(tau_index);
    let e = matrix_exp(&(triple.a_times() * C64::new(0.0, -tau)))?;
    let e2a = matrix_exp(&(&state.a * C64::new(0.0, 2.0 * tau)))?;
    let e2as = matrix_exp(&(state.a.adjoint() * C64::new(0.0, 2.0 * tau)))?;
    let ea = matrix_exp(&(&state.a * C64::new(0.0, tau)))?;
    let eas = matrix_exp(&(state.a.adjoint() * C64::new(0.0, tau)))?;
    let b11 = e.view((0, 0), (nn, nn)).into_owned();
    let b12 = e.view((0, nn), (nn, nn)).into_owned();
    let b21 = e.view((nn, 0), (nn, nn)).into_owned();
    let b22 = e.view((nn, nn), (nn, nn)).into_owned();
    let want12 = (&e2a - &ea * &state.sigma[tau_index] * eas) * C64::i();
    Ok([
        max_abs_diff(&b11, &e2a),
        max_abs_diff(&b22, &e2as),
        max_abs(&b21),
        max_abs_diff(&b12, &want12),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::scalar;

    fn scalar_triple(b: C64, p1: f64, p2: f64) -> Result<AdmissibleTriple> {
        validate_triple(scalar(b), scalar(re(p1)), scalar(re(p2)))
    }

    #[test]
    fn admissibility_examples() {
        assert!(scalar_triple(re(0.0), 1.0, 0.0).is_ok());
        assert!(scalar_triple(C64::new(0.0, -1.0), 1.0, 2f64.sqrt()).is_ok());
        assert!(matches!(scalar_triple(re(0.0), 1.0, 1.0), Err(Error::Inadmissible(_))));
        for seed in 0..5 {
            assert!(random_triple(3, 2, seed).is_ok());
        }
    }

    #[test]
    fn scalar_triple_closed_forms() {
        let tr = scalar_triple(re(0.0), 1.0, 0.0).unwrap();
        let g = Grid::new(1.0, 20).unwrap();
        let k = pe_accelerant(&tr, &g).unwrap();
        assert!(k.samples().iter().all(|m| (m[(0, 0)] - re(-2.0)).norm() < 1e-14));
        let st = pe_state(&tr, &g).unwrap();
        let v = st.potential(&tr).unwrap();
        for i in 0..=20 {
            let t = g.node(i);
            assert!((st.sigma(i)[(0, 0)] - re(1.0 + 2.0 * t)).norm() < 1e-13);
            assert!((v.at(i)[(0, 0)] - C64::new(0.0, 2.0 / (1.0 + 2.0 * t))).norm() < 1e-13);
            let slice = st.resolvent_slice(&tr, i).unwrap();
            for s in slice {
                assert!((s[(0, 0)] - re(-2.0 / (1.0 + 2.0 * t))).norm() < 1e-12);
            }
        }
        let beta = 0.7;
        let tr = scalar_triple(re(beta), 1.0, 0.0).unwrap();
        let k = pe_accelerant(&tr, &g).unwrap();
        for i in 0..=20 {
            let want = C64::new(0.0, 2.0 * g.node(i) * beta).exp() * -2.0;
            assert!((k.samples()[i][(0, 0)] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn transfer_matrix_hand_value() {
        let tr = scalar_triple(re(0.0), 1.0, 0.0).unwrap();
        let g = Grid::new(1.0, 8).unwrap();
        let w = transfer_matrix(&tr, &g, 0, C64::i()).unwrap();
        let mut m = CMat::from_element(2, 2, re(1.0));
        m[(0, 1)] = re(-1.0);
        m[(1, 0)] = re(-1.0);
        // i j (i - 0)^{-1} = j
        let want = CMat::identity(2, 2) + j_matrix(1) * m;
        assert!(max_abs_diff(&w, &want) < 1e-14);
    }

    #[test]
    fn zero_triple_is_trivial() {
        let tr = validate_triple(CMat::from_element(2, 2, re(0.3)), CMat::zeros(2, 1), CMat::zeros(2, 1)).unwrap();
        let g = Grid::new(1.0, 10).unwrap();
        let st = pe_state(&tr, &g).unwrap();
        assert!(pe_accelerant(&tr, &g).unwrap().samples().iter().all(|m| max_abs(m) == 0.0));
        for i in 0..=10 {
            assert!(max_abs_diff(st.sigma(i), &CMat::identity(2, 2)) < 1e-15);
            let w = st.transfer_matrix(i, C64::new(0.4, 1.0)).unwrap();
            assert!(max_abs_diff(&w, &CMat::identity(2, 2)) < 1e-15);
        }
    }

    #[test]
    fn random_triple_identities() {
        let tr = random_triple(2, 1, 7).unwrap();
        let g = Grid::new(1.0, 50).unwrap();
        let st = pe_state(&tr, &g).unwrap();
        assert!(st.displacement_residual() < 1e-8);
        for i in (0..=50).step_by(5) {
            assert!(sigma_corner_residual(&tr, &st, i).unwrap() < 1e-8);
            assert!(block_residual(&tr, &st, i).unwrap() < 1e-8);
            assert!(st.sigma_min_eigenvalue(i) >= 1.0 - 1e-12);
            for z in [re(0.0), re(1.0), C64::new(1.0, 1.0)] {
                let w = st.transfer_matrix(i, z).unwrap();
                let wb = st.transfer_matrix(i, z.conj()).unwrap();
                let j = j_matrix(1);
                let d = max_abs_diff(&(wb.adjoint() * &j * &w), &j);
                assert!(d < 1e-10, "{i} {z} {d} {}", st.displacement_residual());
            }
        }
        let u0 = st.fundamental(0, C64::new(0.3, -0.2)).unwrap();
        assert!(max_abs_diff(&u0, &q_matrix(1).adjoint()) < 1e-13);
    }
}

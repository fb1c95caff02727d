//! Accelerants, truncated convolution operators, resolvent kernels and
//! potential extraction.

use nalgebra::{DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numerics::{
    cholesky_in_place, max_abs, max_abs_diff, re, try_inverse, Grid, LuNoPivot, MatrixFunction,
    VolterraOp,
};
use crate::{CMat, C64};

/// Hermitian-extended `r x r` kernel sampled on `[0, T]`; `samples[0]` is
/// the one-sided value `k(0+)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Accelerant {
    grid: Grid,
    r: usize,
    samples: Vec<CMat>,
}

/// Potential `v` of a canonical system, sampled on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    grid: Grid,
    r: usize,
    samples: Vec<CMat>,
}

fn check_samples(grid: &Grid, samples: &[CMat]) -> Result<usize> {
    if samples.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} samples for {} nodes",
            samples.len(),
            grid.len()
        )));
    }
    let r = samples[0].nrows();
    if r == 0 || samples.iter().any(|m| m.shape() != (r, r)) {
        return Err(Error::ShapeMismatch("samples must be square and share dimensions".into()));
    }
    Ok(r)
}

fn interpolate(grid: &Grid, samples: &[CMat], t: f64) -> CMat {
    let s = (t / grid.h()).clamp(0.0, grid.n() as f64);
    let i = (s.floor() as usize).min(grid.n() - 1);
    let f = s - i as f64;
    &samples[i] * re(1.0 - f) + &samples[i + 1] * re(f)
}

impl Accelerant {
    pub fn new(grid: Grid, samples: Vec<CMat>) -> Result<Self> {
        let r = check_samples(&grid, &samples)?;
        Ok(Accelerant { grid, r, samples })
    }

    /// Sample `f` at the nodes; `f(0.0)` must return `k(0+)`.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> CMat) -> Result<Self> {
        Self::new(grid.clone(), grid.nodes().into_iter().map(f).collect())
    }

    pub fn zero(grid: &Grid, r: usize) -> Self {
        Accelerant { grid: grid.clone(), r, samples: vec![CMat::zeros(r, r); grid.len()] }
    }

    pub fn constant(grid: &Grid, c: &CMat) -> Result<Self> {
        Self::new(grid.clone(), vec![c.clone(); grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    /// `k(t_i)` for `i >= 0`; `k(t_i)*` for negative `i`.
    pub fn at(&self, i: isize) -> CMat {
        if i >= 0 {
            self.samples[i as usize].clone()
        } else {
            self.samples[(-i) as usize].adjoint()
        }
    }

    /// Linear interpolation, extended by `k(-t) = k(t)*`.
    pub fn eval(&self, t: f64) -> CMat {
        if t >= 0.0 {
            interpolate(&self.grid, &self.samples, t)
        } else {
            interpolate(&self.grid, &self.samples, -t).adjoint()
        }
    }

    /// `k(0+) - k(0+)*`.
    pub fn jump(&self) -> CMat {
        &self.samples[0] - self.samples[0].adjoint()
    }

    pub fn to_function(&self) -> MatrixFunction {
        MatrixFunction::new(self.grid.clone(), self.samples.clone()).expect("consistent")
    }

    pub fn max_diff(&self, other: &Accelerant) -> f64 {
        self.samples.iter().zip(&other.samples).fold(0.0, |m, (a, b)| m.max(max_abs_diff(a, b)))
    }

    /// Kernel value `k(t_a - t_b)` with the diagonal replaced by `diag`.
    fn block(&self, a: usize, b: usize, diag: &CMat) -> CMat {
        if a == b {
            diag.clone()
        } else {
            self.at(a as isize - b as isize)
        }
    }
}

impl Potential {
    pub fn new(grid: Grid, samples: Vec<CMat>) -> Result<Self> {
        let r = check_samples(&grid, &samples)?;
        Ok(Potential { grid, r, samples })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> CMat) -> Result<Self> {
        Self::new(grid.clone(), grid.nodes().into_iter().map(f).collect())
    }

    pub fn zero(grid: &Grid, r: usize) -> Self {
        Potential { grid: grid.clone(), r, samples: vec![CMat::zeros(r, r); grid.len()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    pub fn at(&self, i: usize) -> &CMat {
        &self.samples[i]
    }

    /// Linear interpolation between nodes.
    pub fn eval(&self, t: f64) -> CMat {
        interpolate(&self.grid, &self.samples, t)
    }

    /// Krein-system potential `a = i v`.
    pub fn a(&self) -> Vec<CMat> {
        self.samples.iter().map(|v| v * C64::i()).collect()
    }

    pub fn to_function(&self) -> MatrixFunction {
        MatrixFunction::new(self.grid.clone(), self.samples.clone()).expect("consistent")
    }

    pub fn max_diff(&self, other: &Potential) -> f64 {
        self.samples.iter().zip(&other.samples).fold(0.0, |m, (a, b)| m.max(max_abs_diff(a, b)))
    }

    /// Largest change between neighbouring nodes.
    pub fn max_increment(&self) -> f64 {
        self.samples.windows(2).fold(0.0, |m, w| m.max(max_abs_diff(&w[0], &w[1])))
    }
}

/// `I - N` for the split Nystrom rule on `[0, t_m]`: each node carries
/// half weights on its left and right subintervals, and on the diagonal the
/// left half sees `k(0+)` and the right half `k(0+)*`. With `extended` the
/// right half weight at `t_m` is kept, which makes every leading block of
/// the matrix for `m = n` a rank-`r` modification of the matrix for `m`.
fn split_nystrom(k: &Accelerant, m: usize, extended: bool) -> CMat {
    let r = k.r;
    let h = k.grid.h();
    let k0 = &k.samples[0];
    let k0s = k0.adjoint();
    let size = (m + 1) * r;
    let mut a = CMat::identity(size, size);
    for b in 0..=m {
        let wl = if b > 0 { 0.5 } else { 0.0 };
        let wr = if extended || b < m { 0.5 } else { 0.0 };
        for row in 0..=m {
            let blk = if row == b {
                k0 * re(h * wl) + &k0s * re(h * wr)
            } else {
                k.at(row as isize - b as isize) * re(h * (wl + wr))
            };
            let mut v = a.view_mut((row * r, b * r), (r, r));
            v -= blk;
        }
    }
    a
}

/// `(T f)(x) = f(x) - int_0^T k(x - s) f(s) ds` with the split trapezoid rule.
pub fn apply_t(k: &Accelerant, f: &MatrixFunction) -> Result<MatrixFunction> {
    if f.grid() != &k.grid || f.dims().0 != k.r {
        return Err(Error::ShapeMismatch("operand of T".into()));
    }
    let r = k.r;
    let n = k.grid.n();
    let q = f.dims().1;
    let m = split_nystrom(k, n, false);
    let mut x = CMat::zeros((n + 1) * r, q);
    for (i, s) in f.samples().iter().enumerate() {
        x.view_mut((i * r, 0), (r, q)).copy_from(s);
    }
    let y = m * x;
    let out = (0..=n).map(|i| y.view((i * r, 0), (r, q)).into_owned()).collect();
    MatrixFunction::new(k.grid.clone(), out)
}

fn check_tau_index(k: &Accelerant, m: usize) -> Result<()> {
    if m == 0 || m > k.grid.n() {
        return Err(Error::IndexOutOfRange { index: m, max: k.grid.n() });
    }
    Ok(())
}

/// Hermitian Nystrom matrix of `T_tau` on `[0, t_m]`:
/// `delta_ab - h sqrt(w_a w_b) k(t_a - t_b)`, with the hermitian mean of
/// `k(0+)` on the diagonal.
pub fn assemble_t(k: &Accelerant, tau_index: usize) -> Result<CMat> {
    check_tau_index(k, tau_index)?;
    let m = tau_index;
    let w = crate::numerics::trapezoid_weights(m);
    Ok(symmetric_matrix(k, &w))
}

fn mean_at_zero(k: &Accelerant) -> CMat {
    (&k.samples[0] + k.samples[0].adjoint()) * re(0.5)
}

fn symmetric_matrix(k: &Accelerant, w: &[f64]) -> CMat {
    let r = k.r;
    let h = k.grid.h();
    let mean = mean_at_zero(k);
    let size = w.len() * r;
    let mut t = CMat::identity(size, size);
    for a in 0..w.len() {
        for b in 0..w.len() {
            let blk = k.block(a, b, &mean) * re(h * (w[a] * w[b]).sqrt());
            let mut v = t.view_mut((a * r, b * r), (r, r));
            v -= blk;
        }
    }
    t
}

/// Outcome of the positivity test on every `[0, t_i]`, `i = 1..=n`.
#[derive(Clone, Debug)]
pub struct PositivityReport {
    pub taus: Vec<f64>,
    /// Estimated smallest eigenvalue of the hermitian Nystrom matrix.
    pub min_eigenvalues: Vec<f64>,
}

impl PositivityReport {
    pub fn min_margin(&self) -> f64 {
        self.min_eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn dense_min_eigenvalue(t: &CMat) -> f64 {
    let herm = (t + t.adjoint()) * re(0.5);
    SymmetricEigen::new(herm).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Small hermitian block Cholesky, `None` when not positive definite.
fn small_cholesky(m: &CMat) -> Option<CMat> {
    let mut a = (m + m.adjoint()) * re(0.5);
    cholesky_in_place(&mut a).ok()?;
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            a[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Some(a)
}

/// Cholesky factor of the hermitian matrix on `[0, t_m]`, assembled from the
/// factor of the extended matrix: rows of block `m` are scaled by `1/sqrt 2`
/// and the last diagonal block is the factor of the Schur complement.
struct NestedSolve<'a> {
    l: &'a CMat,
    r: usize,
}

impl NestedSolve<'_> {
    fn solve(&self, m: usize, schur: &CMat, b: &mut [C64]) {
        let r = self.r;
        let n_all = self.l.nrows();
        let data = self.l.as_slice();
        let head = m * r;
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        // forward: L~ y = b
        for k in 0..head {
            let col = &data[k * n_all..k * n_all + n_all];
            b[k] /= col[k];
            let bk = b[k];
            for i in k + 1..head {
                b[i] -= col[i] * bk;
            }
            for i in head..head + r {
                b[i] -= col[i] * bk * inv_sqrt2;
            }
        }
        for i in 0..r {
            let mut s = b[head + i];
            for j in 0..i {
                s -= schur[(i, j)] * b[head + j];
            }
            b[head + i] = s / schur[(i, i)];
        }
        // backward: L~* x = y
        for i in (0..r).rev() {
            let mut s = b[head + i];
            for j in i + 1..r {
                s -= schur[(j, i)].conj() * b[head + j];
            }
            b[head + i] = s / schur[(i, i)].conj();
        }
        for k in (0..head).rev() {
            let col = &data[k * n_all..k * n_all + n_all];
            let mut s = b[k];
            for i in k + 1..head {
                s -= col[i].conj() * b[i];
            }
            for i in head..head + r {
                s -= col[i].conj() * inv_sqrt2 * b[i];
            }
            b[k] = s / col[k].conj();
        }
    }
}

/// Positivity of the truncated operators `T_tau` at every node. Fails with
/// the first `tau` where the discretized operator is not positive definite.
pub fn check_positive(k: &Accelerant) -> Result<PositivityReport> {
    let n = k.grid.n();
    let r = k.r;
    let mut w_ext = vec![1.0; n + 1];
    w_ext[0] = 0.5;
    let mut l = symmetric_matrix(k, &w_ext);
    let ok_until = match cholesky_in_place(&mut l) {
        Ok(()) => (n + 1) * r,
        Err(idx) => idx,
    };
    let mean = mean_at_zero(k);
    let t_last = CMat::identity(r, r) - &mean * re(0.5 * k.grid.h());
    let mut taus = Vec::with_capacity(n);
    let mut eigs = Vec::with_capacity(n);
    let mut x: Vec<C64> = Vec::new();
    let solver = NestedSolve { l: &l, r };
    for m in 1..=n {
        let tau = k.grid.node(m);
        let head = m * r;
        if head > ok_until {
            let t = assemble_t(k, m)?;
            let lambda = dense_min_eigenvalue(&t);
            if t.clone().cholesky().is_none() || lambda <= 0.0 {
                return Err(Error::NotPositive { tau, min_eigenvalue: lambda });
            }
            taus.push(tau);
            eigs.push(lambda);
            continue;
        }
        let row = l.view((head, 0), (r, head));
        let s_rows = row * row.adjoint();
        let schur = &t_last - s_rows * re(0.5);
        let Some(schur_l) = small_cholesky(&schur) else {
            let lambda = dense_min_eigenvalue(&assemble_t(k, m)?);
            return Err(Error::NotPositive { tau, min_eigenvalue: lambda });
        };
        // warm-started inverse iteration for the smallest eigenvalue
        x.resize(head + r, C64::new(1.0, 0.0));
        let mut rho: f64 = 0.0;
        for _ in 0..50 {
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            x.iter_mut().for_each(|z| *z /= norm);
            let y = x.clone();
            solver.solve(m, &schur_l, &mut x);
            let next = y.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
            let done = (next - rho).abs() <= 1e-8 * next.abs();
            rho = next;
            if done {
                break;
            }
        }
        taus.push(tau);
        eigs.push(1.0 / rho);
    }
    Ok(PositivityReport { taus, min_eigenvalues: eigs })
}

/// Resolvent kernel `gamma_tau(t, s)` of `T_tau` on `[0, tau]`.
#[derive(Clone, Debug)]
pub struct ResolventKernel {
    tau_index: usize,
    h: f64,
    r: usize,
    lower: Vec<CMat>,
    upper_diag: Vec<CMat>,
    /// Hermitian defect of the raw discrete solution before symmetrization.
    pub asymmetry: f64,
    /// Residual of the discrete resolvent equation, relative to `max |k|`.
    pub residual: f64,
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

impl ResolventKernel {
    pub fn tau_index(&self) -> usize {
        self.tau_index
    }

    pub fn tau(&self) -> f64 {
        self.tau_index as f64 * self.h
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// `gamma(t_i, t_j)`; on the diagonal the limit from `s < t`.
    pub fn at(&self, i: usize, j: usize) -> CMat {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.lower[tri(j, i)].adjoint(),
            _ => self.lower[tri(i, j)].clone(),
        }
    }

    /// `gamma(0, s_j)`, taking the limit `s -> 0+` at `j = 0`.
    pub fn first_row(&self, j: usize) -> CMat {
        if j == 0 {
            self.upper_diag[0].clone()
        } else {
            self.at(0, j)
        }
    }

    /// Diagonal limit from `s > t`.
    pub fn upper_diag(&self, i: usize) -> &CMat {
        &self.upper_diag[i]
    }

    /// Diagonal limit from `s < t`.
    pub fn lower_diag(&self, i: usize) -> &CMat {
        &self.lower[tri(i, i)]
    }
}

fn stack(blocks: impl Iterator<Item = CMat>, r: usize, q: usize, count: usize) -> CMat {
    let mut m = CMat::zeros(count * r, q);
    for (i, b) in blocks.enumerate() {
        m.view_mut((i * r, 0), (r, q)).copy_from(&b);
    }
    m
}

/// Resolvent kernel on `[0, t_m]` from dense solves of the split Nystrom
/// system. The first column and last row are solved with right-hand sides
/// that take the correct one-sided value of `k` at the corners.
pub fn resolvent_kernel(k: &Accelerant, tau_index: usize) -> Result<ResolventKernel> {
    check_tau_index(k, tau_index)?;
    let m = tau_index;
    let r = k.r;
    let h = k.grid.h();
    let a = split_nystrom(k, m, false);
    let size = (m + 1) * r;
    let identity = CMat::identity(size, size);
    let n_mat = &identity - &a;
    let w = crate::numerics::trapezoid_weights(m);
    let mut rhs = n_mat.clone();
    for c in 0..=m {
        let mut col = rhs.columns_mut(c * r, r);
        col /= re(h * w[c]);
    }
    let lu = a.clone().lu();
    let g = lu.solve(&rhs).ok_or_else(|| Error::Singular(format!("T on [0, {}]", k.grid.node(m))))?;
    let scale = k.samples.iter().map(max_abs).fold(0.0, f64::max).max(1.0);
    let residual = max_abs(&(&a * &g - &rhs)) / scale;

    let first = stack((0..=m).map(|i| k.samples[i].clone()), r, r, m + 1);
    let col0 = lu.solve(&first).ok_or_else(|| Error::Singular("first column".into()))?;
    let last = stack(
        (0..=m).map(|i| if i == m { k.samples[0].adjoint() } else { k.at(i as isize - m as isize) }),
        r,
        r,
        m + 1,
    );
    let colm = lu.solve(&last).ok_or_else(|| Error::Singular("last column".into()))?;

    let blk = |i: usize, j: usize| g.view((i * r, j * r), (r, r)).into_owned();
    let jump_half = k.jump() * re(0.5);
    let mut asymmetry: f64 = 0.0;
    let mut lower = Vec::with_capacity((m + 1) * (m + 2) / 2);
    for i in 0..=m {
        for j in 0..=i {
            let v = if j == 0 {
                col0.view((i * r, 0), (r, r)).into_owned()
            } else if i == m {
                colm.view((j * r, 0), (r, r)).adjoint()
            } else if i == j {
                let gi = blk(i, i);
                (&gi + gi.adjoint()) * re(0.5) + &jump_half
            } else {
                let (gij, gji) = (blk(i, j), blk(j, i));
                asymmetry = asymmetry.max(max_abs_diff(&gij, &gji.adjoint()));
                (gij + gji.adjoint()) * re(0.5)
            };
            lower.push(v);
        }
    }
    let upper_diag = (0..=m).map(|i| lower[tri(i, i)].adjoint()).collect();
    Ok(ResolventKernel { tau_index: m, h, r, lower, upper_diag, asymmetry, residual })
}

/// Factorization of the nested family of split Nystrom systems on
/// `[0, t_m]`, `m = 0..=n`, from one unpivoted LU of the extended matrix.
/// Gives `(Gamma^{-1} f)(t_m) = ((T_{t_m})^{-1} f)(t_m)` for all `m` in one
/// forward substitution.
#[derive(Clone, Debug)]
pub struct ResolventFactor {
    k: Accelerant,
    lu: LuNoPivot,
    /// `(I + y_m)^{-1} U_mm^{-1}` for each node.
    endpoint: Vec<CMat>,
}

impl ResolventFactor {
    pub fn new(k: &Accelerant) -> Result<Self> {
        let n = k.grid.n();
        let r = k.r;
        let h = k.grid.h();
        let b = split_nystrom(k, n, true);
        let lu = LuNoPivot::new(b).map_err(|idx| {
            Error::Singular(format!("nested factorization breaks down at t = {}", k.grid.node(idx / r)))
        })?;
        let mut endpoint = Vec::with_capacity(n + 1);
        let mut buf = vec![C64::new(0.0, 0.0); (n + 1) * r];
        for m in 0..=n {
            let len = (m + 1) * r;
            let u_mm = lu.u_block(m * r, r);
            let u_inv = try_inverse(&u_mm).ok_or_else(|| Error::Singular(format!("pivot block at node {m}")))?;
            let mut y = CMat::zeros(r, r);
            for c in 0..r {
                for a in 0..=m {
                    let kr = if a == m { k.samples[0].adjoint() } else { k.at(a as isize - m as isize) };
                    for i in 0..r {
                        buf[a * r + i] = kr[(i, c)] * (0.5 * h);
                    }
                }
                lu.forward_prefix(&mut buf[..len], len);
                for i in 0..r {
                    y[(i, c)] = buf[m * r + i];
                }
            }
            let y = &u_inv * y + CMat::identity(r, r);
            let y_inv = try_inverse(&y).ok_or_else(|| Error::Singular(format!("endpoint block at node {m}")))?;
            endpoint.push(y_inv * u_inv);
        }
        Ok(ResolventFactor { k: k.clone(), lu, endpoint })
    }

    pub fn accelerant(&self) -> &Accelerant {
        &self.k
    }

    /// `tau -> (Gamma^{-1} f)(tau)` for `f` with `r` rows.
    pub fn apply(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        let r = self.k.r;
        if f.grid() != &self.k.grid || f.dims().0 != r {
            return Err(Error::ShapeMismatch("operand of Gamma^{-1}".into()));
        }
        let q = f.dims().1;
        let len = self.k.grid.len();
        let mut out = vec![CMat::zeros(r, q); len];
        let mut buf = vec![C64::new(0.0, 0.0); len * r];
        for c in 0..q {
            for (i, s) in f.samples().iter().enumerate() {
                for p in 0..r {
                    buf[i * r + p] = s[(p, c)];
                }
            }
            self.lu.forward_prefix(&mut buf, len * r);
            for (m, o) in out.iter_mut().enumerate() {
                let x = DVector::from_column_slice(&buf[m * r..m * r + r]);
                o.set_column(c, &(&self.endpoint[m] * x));
            }
        }
        MatrixFunction::new(self.k.grid.clone(), out)
    }

    /// `v(tau) = -i gamma_tau(tau, 0)`.
    pub fn potential(&self) -> Result<Potential> {
        let g0 = self.apply(&self.k.to_function())?;
        Potential::new(self.k.grid.clone(), g0.samples().iter().map(|g| g * (-C64::i())).collect())
    }

    /// `Gamma^{-1}` as a Volterra operator whose row `m` is the last row of
    /// the discrete inverse on `[0, t_m]`.
    pub fn gamma_inverse(&self) -> VolterraOp {
        let r = self.k.r;
        let n = self.k.grid.n();
        let h = self.k.grid.h();
        let mut lead = Vec::with_capacity(n + 1);
        let mut kernel = Vec::with_capacity((n + 1) * (n + 2) / 2);
        for m in 0..=n {
            lead.push(CMat::identity(r, r));
            if m == 0 {
                kernel.push(self.k.samples[0].clone());
                continue;
            }
            let width = (m + 1) * r;
            let mut rows = CMat::zeros(r, width);
            for p in 0..r {
                let row = self.lu.l_inverse_row(m * r + p);
                for (c, z) in row.into_iter().enumerate() {
                    rows[(p, c)] = z;
                }
            }
            let full = &self.endpoint[m] * rows;
            for c in 0..=m {
                let mut b = full.view((0, c * r), (r, r)).into_owned();
                let w = if c == 0 || c == m { 0.5 } else { 1.0 };
                if c == m {
                    b -= CMat::identity(r, r);
                }
                kernel.push(b / re(h * w));
            }
        }
        VolterraOp::new(self.k.grid.clone(), r, lead, kernel).expect("consistent shapes")
    }
}

/// Potential `v(tau) = -i gamma_tau(tau, 0)`, with `v(0) = -i k(0+)`.
pub fn potential_from_accelerant(k: &Accelerant) -> Result<Potential> {
    check_positive(k)?;
    ResolventFactor::new(k)?.potential()
}

/// `T = Gamma Gamma*` with `Gamma` identity plus lower Volterra.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    pub gamma: VolterraOp,
    pub gamma_inv: VolterraOp,
    /// Largest deviation between the last row of `Gamma^{-1}` and
    /// `gamma_T(T, s)` at interior nodes `s`.
    pub slice_residual: f64,
}

pub fn lu_factorize(k: &Accelerant) -> Result<LuFactorization> {
    check_positive(k)?;
    let factor = ResolventFactor::new(k)?;
    let gamma_inv = factor.gamma_inverse();
    let gamma = gamma_inv.inverse()?;
    let n = k.grid.n();
    let res = resolvent_kernel(k, n)?;
    let slice_residual = (1..n)
        .map(|c| max_abs_diff(gamma_inv.kernel(n, c), &res.at(n, c)))
        .fold(0.0, f64::max);
    Ok(LuFactorization { gamma, gamma_inv, slice_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::scalar;

    fn constant(n: usize, c: f64) -> Accelerant {
        let g = Grid::new(1.0, n).unwrap();
        Accelerant::constant(&g, &scalar(re(c))).unwrap()
    }

    #[test]
    fn assemble_zero_is_identity() {
        let g = Grid::new(1.0, 10).unwrap();
        let k = Accelerant::zero(&g, 2);
        let t = assemble_t(&k, 10).unwrap();
        assert!(max_abs_diff(&t, &CMat::identity(22, 22)) < 1e-15);
    }

    #[test]
    fn assemble_constant_is_weighted_rank_one() {
        let k = constant(10, 0.8);
        let t = assemble_t(&k, 6).unwrap();
        let w = crate::numerics::trapezoid_weights(6);
        let h = 0.1;
        for a in 0..=6 {
            for b in 0..=6 {
                let want = if a == b { 1.0 } else { 0.0 } - 0.8 * h * (w[a] * w[b]).sqrt();
                assert!((t[(a, b)] - re(want)).norm() < 1e-15);
            }
        }
        assert!(max_abs_diff(&t, &t.adjoint()) < 1e-15);
    }

    #[test]
    fn positivity_verdicts() {
        assert!(check_positive(&constant(50, 0.0)).is_ok());
        assert!(check_positive(&constant(50, -2.0)).is_ok());
        match check_positive(&constant(100, 2.0)) {
            Err(Error::NotPositive { tau, min_eigenvalue }) => {
                assert!((tau - 0.5).abs() <= 0.02, "{tau}");
                assert!(min_eigenvalue < 1e-12);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn eigenvalue_estimates_match_dense() {
        let g = Grid::new(1.0, 30).unwrap();
        let k = Accelerant::from_fn(&g, |t| {
            let mut m = CMat::zeros(2, 2);
            m[(0, 0)] = C64::new(-1.0 + t, 0.3);
            m[(0, 1)] = C64::new(0.5 * t, -0.2);
            m[(1, 0)] = C64::new(0.1, t);
            m[(1, 1)] = C64::new(0.4 * t.cos(), 0.0);
            m
        })
        .unwrap();
        let rep = check_positive(&k).unwrap();
        for (i, &lam) in rep.min_eigenvalues.iter().enumerate().step_by(7) {
            let dense = dense_min_eigenvalue(&assemble_t(&k, i + 1).unwrap());
            assert!((lam - dense).abs() < 1e-3 * (1.0 + dense.abs()), "{i}: {lam} vs {dense}");
        }
    }

    #[test]
    fn constant_kernel_resolvent() {
        let k = constant(40, -2.0);
        let res = resolvent_kernel(&k, 20).unwrap();
        let want = -2.0 / (1.0 + 2.0 * 0.5);
        for i in 0..=20 {
            for j in 0..=20 {
                assert!((res.at(i, j)[(0, 0)] - re(want)).norm() < 1e-12);
            }
        }
        assert!(res.residual < 1e-10);
    }

    #[test]
    fn constant_kernel_potential() {
        let k = constant(100, -2.0);
        let v = potential_from_accelerant(&k).unwrap();
        for (i, s) in v.samples().iter().enumerate() {
            let t = k.grid().node(i);
            assert!((s[(0, 0)] - C64::new(0.0, 2.0 / (1.0 + 2.0 * t))).norm() < 1e-12);
        }
        assert!(potential_from_accelerant(&Accelerant::zero(k.grid(), 2)).unwrap().samples().iter().all(|m| max_abs(m) == 0.0));
    }

    #[test]
    fn gamma_inverse_slices() {
        let k = constant(50, -2.0);
        let lu = lu_factorize(&k).unwrap();
        let g = k.grid();
        for i in 1..=50 {
            for j in 0..=i {
                let want = -2.0 / (1.0 + 2.0 * g.node(i));
                assert!((lu.gamma_inv.kernel(i, j)[(0, 0)] - re(want)).norm() < 1e-10);
            }
        }
        let one = MatrixFunction::constant(g, &scalar(re(1.0)));
        let y = lu.gamma_inv.apply(&one).unwrap();
        for i in 0..=50 {
            assert!((y.sample(i)[(0, 0)] - re(1.0 / (1.0 + 2.0 * g.node(i)))).norm() < 1e-12);
        }
        assert!(lu.slice_residual < 1e-10);
        let id = VolterraOp::identity(g, 1);
        let zero = lu_factorize(&Accelerant::zero(g, 1)).unwrap();
        let f = MatrixFunction::from_fn(g, |t| scalar(C64::new(t, 1.0)));
        assert!(zero.gamma.apply(&f).unwrap().max_diff(&id.apply(&f).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn negative_arguments_are_adjoints() {
        let g = Grid::new(1.0, 8).unwrap();
        let k = Accelerant::from_fn(&g, |t| scalar(C64::new(t, 1.0 + t))).unwrap();
        for i in 1..=8isize {
            assert_eq!(k.at(-i), k.at(i).adjoint());
        }
    }
}

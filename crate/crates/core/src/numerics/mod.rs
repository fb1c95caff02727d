//! Grids, quadrature, differentiation, matrix exponentials and discretized
//! Volterra operators.

mod dense;
mod expm;
mod grid;
mod quadrature;
mod volterra;

pub use dense::{block_lower_inverse, cholesky_in_place, lu_nopivot_in_place, LuNoPivot};
pub use expm::matrix_exp;
pub use grid::{Grid, MatrixFunction};
pub use quadrature::{central_derivative, cumulative_trapezoid, trapezoid_integral, trapezoid_weights};
pub use volterra::VolterraOp;

use crate::{CMat, C64};

/// Largest absolute entry of a matrix.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest absolute entrywise difference.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Real number as a complex scalar.
#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(r: usize) -> CMat {
    CMat::identity(r, r)
}

pub fn zeros(p: usize, q: usize) -> CMat {
    CMat::zeros(p, q)
}

pub fn scalar(z: C64) -> CMat {
    CMat::from_element(1, 1, z)
}

/// `j = diag(I_r, -I_r)`.
pub fn j_matrix(r: usize) -> CMat {
    let mut j = CMat::identity(2 * r, 2 * r);
    for i in r..2 * r {
        j[(i, i)] = -C64::new(1.0, 0.0);
    }
    j
}

/// `J = [[0, I_r], [I_r, 0]]`.
pub fn big_j_matrix(r: usize) -> CMat {
    let mut m = CMat::zeros(2 * r, 2 * r);
    for i in 0..r {
        m[(i, r + i)] = C64::new(1.0, 0.0);
        m[(r + i, i)] = C64::new(1.0, 0.0);
    }
    m
}

/// `Q = (1/sqrt 2) [[I, -I], [I, I]]`, unitary with `Q j Q* = J`.
pub fn q_matrix(r: usize) -> CMat {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut m = CMat::zeros(2 * r, 2 * r);
    for i in 0..r {
        m[(i, i)] = s;
        m[(i, r + i)] = -s;
        m[(r + i, i)] = s;
        m[(r + i, r + i)] = s;
    }
    m
}

/// Stack `[a, b]` side by side.
pub fn hstack(a: &CMat, b: &CMat) -> CMat {
    let mut m = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

/// Stack `[a; b]` vertically.
pub fn vstack(a: &CMat, b: &CMat) -> CMat {
    let mut m = CMat::zeros(a.nrows() + b.nrows(), a.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    m
}

/// Inverse of a small square block, `None` if singular or badly conditioned.
pub fn try_inverse(m: &CMat) -> Option<CMat> {
    let inv = m.clone().lu().try_inverse()?;
    let cond = max_abs(m) * max_abs(&inv) * m.nrows() as f64;
    if cond.is_finite() && cond < 1e14 {
        Some(inv)
    } else {
        None
    }
}

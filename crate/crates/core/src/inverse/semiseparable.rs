use crate::canonical::ThetaOmegaPair;
use crate::error::{Error, Result};
use crate::numerics::{big_j_matrix, identity, max_abs_diff, re, Grid, MatrixFunction, VolterraOp};
use crate::CMat;

/// `(L f)(x) = F(x) int_0^x G(t) f(t) dt` with `F` of size `r x p` and `G`
/// of size `p x r`.
#[derive(Clone, Debug)]
pub struct SemiSepOperator {
    f: MatrixFunction,
    g: MatrixFunction,
}

impl SemiSepOperator {
    pub fn new(f: MatrixFunction, g: MatrixFunction) -> Result<Self> {
        let (r, p) = f.dims();
        if g.dims() != (p, r) || f.grid() != g.grid() {
            return Err(Error::ShapeMismatch(format!("F is {r}x{p} but G is {:?}", g.dims())));
        }
        Ok(SemiSepOperator { f, g })
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }

    pub fn r(&self) -> usize {
        self.f.dims().0
    }

    pub fn p(&self) -> usize {
        self.f.dims().1
    }

    pub fn f(&self) -> &MatrixFunction {
        &self.f
    }

    pub fn g(&self) -> &MatrixFunction {
        &self.g
    }

    pub fn kernel(&self, i: usize, j: usize) -> CMat {
        self.f.sample(i) * self.g.sample(j)
    }

    /// `max_x || F(x) G(x) - I ||`.
    pub fn fg_residual(&self) -> f64 {
        let id = identity(self.r());
        (0..self.grid().len()).map(|i| max_abs_diff(&self.kernel(i, i), &id)).fold(0.0, f64::max)
    }

    pub fn to_volterra(&self) -> VolterraOp {
        let grid = self.grid().clone();
        let r = self.r();
        let len = grid.len();
        let mut kernel = Vec::with_capacity(len * (len + 1) / 2);
        for i in 0..len {
            for j in 0..=i {
                kernel.push(self.kernel(i, j));
            }
        }
        VolterraOp::new(grid, r, vec![CMat::zeros(r, r); len], kernel).expect("shapes")
    }

    pub fn apply(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        if f.grid() != self.grid() || f.dims().0 != self.r() {
            return Err(Error::ShapeMismatch("operand of a semi-separable operator".into()));
        }
        let inner = MatrixFunction::new(
            self.grid().clone(),
            self.g.samples().iter().zip(f.samples()).map(|(g, x)| g * x).collect(),
        )?;
        let cum = crate::numerics::cumulative_trapezoid(&inner);
        Ok(cum.map(|i, c| self.f.sample(i) * c))
    }
}

/// `L` with `F = theta`, `G = J theta*`.
pub fn build_l(pair: &ThetaOmegaPair) -> Result<SemiSepOperator> {
    let big_j = big_j_matrix(pair.r());
    let g = pair.theta.map(|_, t| &big_j * t.adjoint());
    let l = SemiSepOperator::new(pair.theta.clone(), g)?;
    let residual = l.fg_residual();
    // theta J theta* = I holds to the accuracy of the RK4 sweep
    let h = pair.grid().h();
    let tolerance = (100.0 * h.powi(4)).max(1e-8);
    if residual > tolerance {
        return Err(Error::Validation { check: "F G = I".into(), residual, tolerance });
    }
    Ok(l)
}

/// `t -> t^j I_r` for `j = 0..=degree`.
pub fn monomials(grid: &Grid, r: usize, degree: usize) -> Vec<MatrixFunction> {
    (0..=degree).map(|j| MatrixFunction::from_fn(grid, |t| identity(r) * re(t.powi(j as i32)))).collect()
}

use crate::error::{Error, Result};
use crate::numerics::{block_lower_inverse, re, try_inverse, Grid, MatrixFunction};
use crate::CMat;

/// Discretized operator `(V f)(x) = d(x) f(x) + int_0^x kappa(x, t) f(t) dt`
/// with `r x r` blocks. The integral is the composite trapezoid on
/// `[0, x_i]`, so row 0 carries no kernel contribution.
#[derive(Clone, Debug)]
pub struct VolterraOp {
    grid: Grid,
    r: usize,
    lead: Vec<CMat>,
    kernel: Vec<CMat>,
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

/// Weight of node `j` in the trapezoid rule on `[0, t_i]`, in units of `h`.
#[inline]
fn weight(i: usize, j: usize) -> f64 {
    if i == 0 {
        0.0
    } else if j == 0 || j == i {
        0.5
    } else {
        1.0
    }
}

impl VolterraOp {
    /// `kernel[i * (i + 1) / 2 + j]` holds `kappa(x_i, x_j)` for `j <= i`.
    pub fn new(grid: Grid, r: usize, lead: Vec<CMat>, kernel: Vec<CMat>) -> Result<Self> {
        let len = grid.len();
        if lead.len() != len || kernel.len() != len * (len + 1) / 2 {
            return Err(Error::ShapeMismatch(format!(
                "expected {len} lead blocks and {} kernel blocks",
                len * (len + 1) / 2
            )));
        }
        if lead.iter().chain(kernel.iter()).any(|m| m.shape() != (r, r)) {
            return Err(Error::ShapeMismatch(format!("blocks must be {r}x{r}")));
        }
        Ok(VolterraOp { grid, r, lead, kernel })
    }

    pub fn from_fn(
        grid: &Grid,
        r: usize,
        lead: impl Fn(f64) -> CMat,
        kernel: impl Fn(f64, f64) -> CMat,
    ) -> Result<Self> {
        let nodes = grid.nodes();
        let lead: Vec<CMat> = nodes.iter().map(|&x| lead(x)).collect();
        let mut k = Vec::with_capacity(nodes.len() * (nodes.len() + 1) / 2);
        for (i, &x) in nodes.iter().enumerate() {
            for &t in &nodes[..=i] {
                k.push(kernel(x, t));
            }
        }
        Self::new(grid.clone(), r, lead, k)
    }

    pub fn identity(grid: &Grid, r: usize) -> Self {
        Self::from_fn(grid, r, |_| CMat::identity(r, r), |_, _| CMat::zeros(r, r)).expect("shapes")
    }

    /// The operator of integration `(A f)(x) = int_0^x f`.
    pub fn integration(grid: &Grid, r: usize) -> Self {
        Self::from_fn(grid, r, |_| CMat::zeros(r, r), |_, _| CMat::identity(r, r)).expect("shapes")
    }

    /// Constant lead with difference kernel `kappa(x, t) = e(x - t)`.
    pub fn convolution(lead: &CMat, e: &MatrixFunction) -> Result<Self> {
        let grid = e.grid().clone();
        let r = lead.nrows();
        if e.dims() != (r, r) {
            return Err(Error::ShapeMismatch("convolution kernel dims".into()));
        }
        let len = grid.len();
        let mut k = Vec::with_capacity(len * (len + 1) / 2);
        for i in 0..len {
            for j in 0..=i {
                k.push(e.sample(i - j).clone());
            }
        }
        Self::new(grid, r, vec![lead.clone(); len], k)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn lead(&self, i: usize) -> &CMat {
        &self.lead[i]
    }

    pub fn leads(&self) -> &[CMat] {
        &self.lead
    }

    pub fn kernel(&self, i: usize, j: usize) -> &CMat {
        assert!(j <= i, "kernel is stored on the lower triangle only");
        &self.kernel[tri(i, j)]
    }

    /// Row `i` of the kernel, `t_j -> kappa(x_i, t_j)` for `j <= i`.
    pub fn kernel_row(&self, i: usize) -> &[CMat] {
        &self.kernel[tri(i, 0)..=tri(i, i)]
    }

    pub fn apply(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.check_operand(f)?;
        let h = self.grid.h();
        let q = f.dims().1;
        let s = f.samples();
        let out = (0..self.grid.len())
            .map(|i| {
                let mut acc = CMat::zeros(self.r, q);
                for j in 0..=i {
                    let w = weight(i, j);
                    if w != 0.0 {
                        acc += &self.kernel[tri(i, j)] * &s[j] * re(w);
                    }
                }
                &self.lead[i] * &s[i] + acc * re(h)
            })
            .collect();
        MatrixFunction::new(self.grid.clone(), out)
    }

    /// The `L^2` adjoint: `(V* f)(x) = d(x)* f(x) + int_x^T kappa(t, x)* f(t) dt`.
    pub fn apply_adjoint(&self, f: &MatrixFunction) -> Result<MatrixFunction> {
        self.check_operand(f)?;
        let h = self.grid.h();
        let n = self.grid.n();
        let q = f.dims().1;
        let s = f.samples();
        let out = (0..=n)
            .map(|i| {
                let mut acc = CMat::zeros(self.r, q);
                if i < n {
                    for t in i..=n {
                        let w = if t == i || t == n { 0.5 } else { 1.0 };
                        acc += self.kernel[tri(t, i)].adjoint() * &s[t] * re(w);
                    }
                }
                self.lead[i].adjoint() * &s[i] + acc * re(h)
            })
            .collect();
        MatrixFunction::new(self.grid.clone(), out)
    }

    /// Dense block lower triangular matrix of the discretized operator.
    pub fn to_block_matrix(&self) -> CMat {
        let len = self.grid.len();
        let r = self.r;
        let h = self.grid.h();
        let mut m = CMat::zeros(len * r, len * r);
        for i in 0..len {
            for j in 0..=i {
                let mut b = &self.kernel[tri(i, j)] * re(h * weight(i, j));
                if i == j {
                    b += &self.lead[i];
                }
                m.view_mut((i * r, j * r), (r, r)).copy_from(&b);
            }
        }
        m
    }

    /// Recover kernel form from a block lower triangular matrix and a chosen
    /// lead. `kernel00` fills the only entry a matrix cannot determine.
    fn from_block_matrix(grid: &Grid, r: usize, m: &CMat, lead: Vec<CMat>, kernel00: CMat) -> Self {
        let len = grid.len();
        let h = grid.h();
        let mut k = Vec::with_capacity(len * (len + 1) / 2);
        for i in 0..len {
            for j in 0..=i {
                let b = m.view((i * r, j * r), (r, r)).into_owned();
                k.push(if i == 0 {
                    kernel00.clone()
                } else if i == j {
                    (b - &lead[i]) / re(h * 0.5)
                } else {
                    b / re(h * weight(i, j))
                });
            }
        }
        VolterraOp { grid: grid.clone(), r, lead, kernel: k }
    }

    /// Exact inverse of the discretized operator.
    pub fn inverse(&self) -> Result<VolterraOp> {
        let mut lead_inv = Vec::with_capacity(self.lead.len());
        for (i, d) in self.lead.iter().enumerate() {
            lead_inv.push(try_inverse(d).ok_or(Error::SingularLead { node: i })?);
        }
        let m = self.to_block_matrix();
        let inv = block_lower_inverse(&m, self.r).map_err(|node| Error::SingularLead { node })?;
        let k00 = -(&lead_inv[0] * &self.kernel[0] * &lead_inv[0]);
        Ok(Self::from_block_matrix(&self.grid, self.r, &inv, lead_inv, k00))
    }

    /// Discrete composition `self o other`.
    pub fn compose(&self, other: &VolterraOp) -> Result<VolterraOp> {
        if self.grid != other.grid || self.r != other.r {
            return Err(Error::ShapeMismatch("composition of incompatible operators".into()));
        }
        let m = self.to_block_matrix() * other.to_block_matrix();
        let lead: Vec<CMat> = self.lead.iter().zip(&other.lead).map(|(a, b)| a * b).collect();
        let k00 = &self.lead[0] * &other.kernel[0] + &self.kernel[0] * &other.lead[0];
        Ok(Self::from_block_matrix(&self.grid, self.r, &m, lead, k00))
    }

    pub fn scaled(&self, c: crate::C64) -> VolterraOp {
        VolterraOp {
            grid: self.grid.clone(),
            r: self.r,
            lead: self.lead.iter().map(|m| m * c).collect(),
            kernel: self.kernel.iter().map(|m| m * c).collect(),
        }
    }

    fn check_operand(&self, f: &MatrixFunction) -> Result<()> {
        if f.grid() != &self.grid || f.dims().0 != self.r {
            return Err(Error::ShapeMismatch(format!(
                "operator with {}x{} blocks applied to a {:?} function",
                self.r,
                self.r,
                f.dims()
            )));
        }
        Ok(())
    }
}

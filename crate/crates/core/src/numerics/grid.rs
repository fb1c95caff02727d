use crate::error::{Error, Result};
use crate::numerics::max_abs_diff;
use crate::CMat;

/// Uniform grid `t_i = i h`, `i = 0..=n`, on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    t_end: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub const MIN_INTERVALS: usize = 8;

    pub fn new(t_end: f64, n: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidGrid(format!("interval length {t_end} must be positive")));
        }
        if n < Self::MIN_INTERVALS {
            return Err(Error::InvalidGrid(format!(
                "need at least {} subintervals, got {n}",
                Self::MIN_INTERVALS
            )));
        }
        Ok(Grid { t_end, n, h: t_end / n as f64 })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Number of subintervals.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nodes, `n + 1`.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.t_end
        } else {
            i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }

    /// Grid with `factor` times as many subintervals.
    pub fn refined(&self, factor: usize) -> Grid {
        Grid { t_end: self.t_end, n: self.n * factor, h: self.t_end / (self.n * factor) as f64 }
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i > self.n {
            Err(Error::IndexOutOfRange { index: i, max: self.n })
        } else {
            Ok(())
        }
    }

    /// Index of the node closest to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: f64) -> usize {
        ((t / self.h).round().max(0.0) as usize).min(self.n)
    }
}

/// Matrix-valued function sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixFunction {
    grid: Grid,
    rows: usize,
    cols: usize,
    samples: Vec<CMat>,
}

impl MatrixFunction {
    pub fn new(grid: Grid, samples: Vec<CMat>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for a grid with {} nodes",
                samples.len(),
                grid.len()
            )));
        }
        let (rows, cols) = samples[0].shape();
        if samples.iter().any(|m| m.shape() != (rows, cols)) {
            return Err(Error::ShapeMismatch("samples do not share dimensions".into()));
        }
        Ok(MatrixFunction { grid, rows, cols, samples })
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64) -> CMat) -> Self {
        let samples: Vec<CMat> = grid.nodes().into_iter().map(&mut f).collect();
        let (rows, cols) = samples[0].shape();
        MatrixFunction { grid: grid.clone(), rows, cols, samples }
    }

    pub fn constant(grid: &Grid, m: &CMat) -> Self {
        MatrixFunction {
            grid: grid.clone(),
            rows: m.nrows(),
            cols: m.ncols(),
            samples: vec![m.clone(); grid.len()],
        }
    }

    pub fn zeros(grid: &Grid, rows: usize, cols: usize) -> Self {
        Self::constant(grid, &CMat::zeros(rows, cols))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<CMat> {
        self.samples
    }

    pub fn sample(&self, i: usize) -> &CMat {
        &self.samples[i]
    }

    /// Pointwise map keeping the grid.
    pub fn map(&self, mut f: impl FnMut(usize, &CMat) -> CMat) -> MatrixFunction {
        let samples: Vec<CMat> = self.samples.iter().enumerate().map(|(i, m)| f(i, m)).collect();
        let (rows, cols) = samples[0].shape();
        MatrixFunction { grid: self.grid.clone(), rows, cols, samples }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(
        &self,
        other: &MatrixFunction,
        mut f: impl FnMut(&CMat, &CMat) -> CMat,
    ) -> Result<MatrixFunction> {
        self.check_same_grid(other)?;
        Ok(self.map(|i, m| f(m, &other.samples[i])))
    }

    pub fn adjoint(&self) -> MatrixFunction {
        self.map(|_, m| m.adjoint())
    }

    pub fn left_mul(&self, a: &CMat) -> MatrixFunction {
        self.map(|_, m| a * m)
    }

    pub fn right_mul(&self, a: &CMat) -> MatrixFunction {
        self.map(|_, m| m * a)
    }

    pub fn columns(&self, start: usize, count: usize) -> MatrixFunction {
        self.map(|_, m| m.columns(start, count).into_owned())
    }

    pub fn rows_range(&self, start: usize, count: usize) -> MatrixFunction {
        self.map(|_, m| m.rows(start, count).into_owned())
    }

    /// Largest entrywise difference over all nodes.
    pub fn max_diff(&self, other: &MatrixFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .fold(0.0, |acc, (a, b)| acc.max(max_abs_diff(a, b))))
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |acc, m| acc.max(super::max_abs(m)))
    }

    fn check_same_grid(&self, other: &MatrixFunction) -> Result<()> {
        if self.grid != other.grid || self.dims() != other.dims() {
            return Err(Error::ShapeMismatch(format!(
                "functions differ in grid or dims: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }
}

impl std::ops::Add for &MatrixFunction {
    type Output = MatrixFunction;
    fn add(self, rhs: &MatrixFunction) -> MatrixFunction {
        self.zip_with(rhs, |a, b| a + b).expect("grid mismatch in addition")
    }
}

impl std::ops::Sub for &MatrixFunction {
    type Output = MatrixFunction;
    fn sub(self, rhs: &MatrixFunction) -> MatrixFunction {
        self.zip_with(rhs, |a, b| a - b).expect("grid mismatch in subtraction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_grids() {
        assert!(Grid::new(1.0, 7).is_err());
        assert!(Grid::new(0.0, 10).is_err());
        assert!(Grid::new(1.0, 8).is_ok());
    }

    #[test]
    fn last_node_is_t() {
        let g = Grid::new(0.7, 300).unwrap();
        assert_eq!(g.node(300), 0.7);
        assert!((g.h() * 300.0 - 0.7).abs() < 1e-15);
        let nodes = g.nodes();
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
    }
}

use crate::error::Result;
use crate::numerics::MatrixFunction;
use crate::numerics::re;
use crate::CMat;

/// Unit trapezoid weights on nodes `0..=m`: `1/2` at both ends, `1` inside.
/// For `m = 0` the single weight is `0`.
pub fn trapezoid_weights(m: usize) -> Vec<f64> {
    if m == 0 {
        return vec![0.0];
    }
    let mut w = vec![1.0; m + 1];
    w[0] = 0.5;
    w[m] = 0.5;
    w
}

/// Composite trapezoid value of `int_0^{t_upto} f`.
pub fn trapezoid_integral(f: &MatrixFunction, upto: usize) -> Result<CMat> {
    f.grid().check_index(upto)?;
    let (p, q) = f.dims();
    let mut acc = CMat::zeros(p, q);
    if upto == 0 {
        return Ok(acc);
    }
    let s = f.samples();
    for m in &s[1..upto] {
        acc += m;
    }
    acc += (&s[0] + &s[upto]) * re(0.5);
    Ok(acc * re(f.grid().h()))
}

/// Running trapezoid integral `x -> int_0^x f`.
pub fn cumulative_trapezoid(f: &MatrixFunction) -> MatrixFunction {
    let h = f.grid().h();
    let s = f.samples();
    let (p, q) = f.dims();
    let mut out = Vec::with_capacity(s.len());
    let mut acc = CMat::zeros(p, q);
    out.push(acc.clone());
    for i in 1..s.len() {
        acc += (&s[i - 1] + &s[i]) * re(0.5 * h);
        out.push(acc.clone());
    }
    MatrixFunction::new(f.grid().clone(), out).expect("same grid")
}

/// Second-order finite-difference derivative: central inside, one-sided
/// three-point stencils at the ends.
pub fn central_derivative(f: &MatrixFunction) -> Result<MatrixFunction> {
    let h = f.grid().h();
    let s = f.samples();
    let n = s.len() - 1;
    let mut out = Vec::with_capacity(n + 1);
    out.push((&s[1] * re(4.0) - &s[0] * re(3.0) - &s[2]) / re(2.0 * h));
    for i in 1..n {
        out.push((&s[i + 1] - &s[i - 1]) / re(2.0 * h));
    }
    out.push((&s[n] * re(3.0) - &s[n - 1] * re(4.0) + &s[n - 2]) / re(2.0 * h));
    MatrixFunction::new(f.grid().clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{scalar, Grid};
    use crate::C64;

    fn real_fn(g: &Grid, f: impl Fn(f64) -> f64) -> MatrixFunction {
        MatrixFunction::from_fn(g, |t| scalar(C64::new(f(t), 0.0)))
    }

    #[test]
    fn trapezoid_exact_for_affine() {
        let g = Grid::new(1.0, 8).unwrap();
        let f = real_fn(&g, |t| 3.0 * t - 1.0);
        let v = trapezoid_integral(&f, 8).unwrap()[(0, 0)];
        assert!((v.re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_error_for_square() {
        let g = Grid::new(1.0, 100).unwrap();
        let f = real_fn(&g, |t| t * t);
        let v = trapezoid_integral(&f, 100).unwrap()[(0, 0)].re;
        let h = g.h();
        assert!((v - (1.0 / 3.0 + h * h / 6.0)).abs() < 1e-14);
        assert!((v - 0.333350).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_index_checked() {
        let g = Grid::new(1.0, 8).unwrap();
        let f = real_fn(&g, |_| 1.0);
        assert!(trapezoid_integral(&f, 9).is_err());
        assert_eq!(trapezoid_integral(&f, 0).unwrap()[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn cumulative_matches_pointwise() {
        let g = Grid::new(2.0, 40).unwrap();
        let f = real_fn(&g, |t| t.sin());
        let c = cumulative_trapezoid(&f);
        for i in [0, 7, 40] {
            let d = c.sample(i) - trapezoid_integral(&f, i).unwrap();
            assert!(d[(0, 0)].norm() < 1e-14);
        }
    }

    #[test]
    fn derivative_of_square_is_exact() {
        let g = Grid::new(1.0, 10).unwrap();
        let f = real_fn(&g, |t| t * t);
        let d = central_derivative(&f).unwrap();
        for i in 0..=10 {
            assert!((d.sample(i)[(0, 0)].re - 2.0 * g.node(i)).abs() < 1e-12);
        }
        assert!((d.sample(5)[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_exponential_within_taylor_bound() {
        let g = Grid::new(1.0, 400).unwrap();
        let f = MatrixFunction::from_fn(&g, |t| scalar(C64::new(0.0, 2.0 * t).exp()));
        let d = central_derivative(&f).unwrap();
        let h = g.h();
        let bound = 8.0 * h * h / 6.0;
        for i in 1..400 {
            let exact = C64::new(0.0, 2.0) * C64::new(0.0, 2.0 * g.node(i)).exp();
            assert!((d.sample(i)[(0, 0)] - exact).norm() <= bound);
        }
        // one-sided stencils carry twice the central constant
        for i in [0, 400] {
            let exact = C64::new(0.0, 2.0) * C64::new(0.0, 2.0 * g.node(i)).exp();
            assert!((d.sample(i)[(0, 0)] - exact).norm() <= 2.0 * bound);
        }
    }
}

use crate::error::{Error, Result};
use crate::numerics::max_abs;
use crate::CMat;

/// Matrix exponential by scaling and squaring with a diagonal Pade approximant.
pub fn matrix_exp(m: &CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!("exp of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    let norm = m.iter().map(|z| z.norm()).sum::<f64>();
    if !norm.is_finite() {
        return Err(Error::ExpOverflow { norm });
    }
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let e = m.exp();
    if e.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::ExpOverflow { norm: max_abs(m) });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_abs_diff;
    use crate::C64;

    #[test]
    fn zero_gives_identity() {
        let z = CMat::zeros(3, 3);
        assert!(max_abs_diff(&matrix_exp(&z).unwrap(), &CMat::identity(3, 3)) < 1e-15);
    }

    #[test]
    fn euler_identity() {
        let m = CMat::from_diagonal_element(2, 2, C64::new(0.0, std::f64::consts::PI));
        let e = matrix_exp(&m).unwrap();
        assert!(max_abs_diff(&e, &(-CMat::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn nilpotent_series_terminates() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        let mut want = CMat::identity(2, 2);
        want[(0, 1)] = C64::new(1.0, 0.0);
        assert!(max_abs_diff(&matrix_exp(&m).unwrap(), &want) < 1e-15);
    }

    #[test]
    fn overflow_is_reported() {
        let m = CMat::from_diagonal_element(2, 2, C64::new(1e4, 0.0));
        assert!(matches!(matrix_exp(&m), Err(Error::ExpOverflow { .. })));
        let mut bad = CMat::zeros(1, 1);
        bad[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(matrix_exp(&bad).is_err());
    }
}

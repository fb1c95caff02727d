//! Scalar kernels for dense factorizations that need access to the factors
//! themselves (breakdown index, prefixes, diagonal blocks).

use crate::numerics::try_inverse;
use crate::{CMat, C64};

/// Unpivoted LU factorization `A = L U`, `L` unit lower triangular, stored
/// compactly in one matrix.
#[derive(Clone, Debug)]
pub struct LuNoPivot {
    lu: CMat,
}

/// Factor `a` in place without pivoting. Returns the first scalar index whose
/// pivot is negligible.
pub fn lu_nopivot_in_place(a: &mut CMat) -> Result<(), usize> {
    let n = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1.0);
    let data = a.as_mut_slice();
    for k in 0..n {
        let p = data[k + k * n];
        if !(p.norm() > 1e-13 * scale) {
            return Err(k);
        }
        let pinv = p.inv();
        for i in k + 1..n {
            data[i + k * n] *= pinv;
        }
        for j in k + 1..n {
            let akj = data[k + j * n];
            if akj == C64::new(0.0, 0.0) {
                continue;
            }
            let (left, right) = data.split_at_mut(j * n);
            let col_k = &left[k * n..k * n + n];
            let col_j = &mut right[..n];
            for i in k + 1..n {
                col_j[i] -= col_k[i] * akj;
            }
        }
    }
    Ok(())
}

impl LuNoPivot {
    pub fn new(mut a: CMat) -> Result<Self, usize> {
        lu_nopivot_in_place(&mut a)?;
        Ok(LuNoPivot { lu: a })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Overwrite the first `len` entries of `z` with `L^{-1} z` restricted to
    /// that prefix (exact, since `L` is lower triangular).
    pub fn forward_prefix(&self, z: &mut [C64], len: usize) {
        let n = self.lu.nrows();
        let data = self.lu.as_slice();
        for k in 0..len {
            let zk = z[k];
            if zk == C64::new(0.0, 0.0) {
                continue;
            }
            let col = &data[k * n..k * n + n];
            for i in k + 1..len {
                z[i] -= col[i] * zk;
            }
        }
    }

    /// Diagonal block of `U` covering scalar indices `start..start+size`.
    pub fn u_block(&self, start: usize, size: usize) -> CMat {
        let mut b = CMat::zeros(size, size);
        for j in 0..size {
            for i in 0..=j {
                b[(i, j)] = self.lu[(start + i, start + j)];
            }
        }
        b
    }

    /// Row `row` of `L^{-1}` on columns `0..=row`.
    pub fn l_inverse_row(&self, row: usize) -> Vec<C64> {
        // x^T L = e_row^T solved right to left
        let mut x = vec![C64::new(0.0, 0.0); row + 1];
        x[row] = C64::new(1.0, 0.0);
        let n = self.lu.nrows();
        let data = self.lu.as_slice();
        for j in (0..row).rev() {
            let col = &data[j * n..j * n + n];
            let mut s = C64::new(0.0, 0.0);
            for i in j + 1..=row {
                s += x[i] * col[i];
            }
            x[j] = -s;
        }
        x
    }
}

/// Lower Cholesky factor in place (`a = L L*`, upper part left untouched).
/// Returns the first scalar index with a non-positive pivot.
pub fn cholesky_in_place(a: &mut CMat) -> Result<(), usize> {
    let n = a.nrows();
    let data = a.as_mut_slice();
    for k in 0..n {
        let d = data[k + k * n].re;
        if !(d > 0.0) {
            return Err(k);
        }
        let l = d.sqrt();
        data[k + k * n] = C64::new(l, 0.0);
        for i in k + 1..n {
            data[i + k * n] /= l;
        }
        for j in k + 1..n {
            let ljk = data[j + k * n].conj();
            let (left, right) = data.split_at_mut(j * n);
            let col_k = &left[k * n..k * n + n];
            let col_j = &mut right[..n];
            for i in j..n {
                col_j[i] -= col_k[i] * ljk;
            }
        }
    }
    Ok(())
}

/// Inverse of a block lower triangular matrix with `r x r` blocks. Returns
/// the index of the first singular diagonal block.
pub fn block_lower_inverse(m: &CMat, r: usize) -> Result<CMat, usize> {
    let n = m.nrows();
    let nb = n / r;
    let mut dinv = Vec::with_capacity(nb);
    for b in 0..nb {
        let blk = m.view((b * r, b * r), (r, r)).into_owned();
        dinv.push(try_inverse(&blk).ok_or(b)?);
    }
    let mut x = CMat::zeros(n, n);
    let mdata = m.as_slice();
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    let mut s = vec![C64::new(0.0, 0.0); r];
    for bj in 0..nb {
        for c in 0..r {
            let col = bj * r + c;
            rhs.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            rhs[col] = C64::new(1.0, 0.0);
            for bl in bj..nb {
                // solve block bl, then eliminate it from the blocks below
                let base = bl * r;
                let d = &dinv[bl];
                for i in 0..r {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..r {
                        acc += d[(i, k)] * rhs[base + k];
                    }
                    s[i] = acc;
                }
                for k in 0..r {
                    x[(base + k, col)] = s[k];
                    let sk = s[k];
                    if sk == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let mcol = &mdata[(base + k) * n..(base + k) * n + n];
                    for i in base + r..n {
                        rhs[i] -= mcol[i] * sk;
                    }
                }
            }
        }
    }
    Ok(x)
}

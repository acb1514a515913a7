use num_complex::Complex64;

use super::Matrix;
use crate::{Error, Result};

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct Lu {
    factors: Matrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 {
                return Err(Error::SingularMatrix { pivot: k });
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            let (upper, lower) = lu.as_mut_slice().split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n + k..];
            for row in lower.chunks_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (r, &u) in row[k + 1..].iter_mut().zip(&pivot_row[1..]) {
                    *r -= l * u;
                }
            }
        }
        Ok(Lu {
            factors: lu,
            perm,
            swaps,
        })
    }

    pub fn dim(&self) -> usize {
        self.factors.rows()
    }

    pub fn det(&self) -> Complex64 {
        let prod: Complex64 = (0..self.dim()).map(|i| self.factors[(i, i)]).product();
        if self.swaps % 2 == 1 {
            -prod
        } else {
            prod
        }
    }

    /// `min |u_ii| / max |u_ii|`, a cheap singularity indicator.
    pub fn pivot_ratio(&self) -> f64 {
        let mags: Vec<f64> = (0..self.dim()).map(|i| self.factors[(i, i)].norm()).collect();
        let max = mags.iter().cloned().fold(0.0, f64::max);
        let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
        if max == 0.0 {
            0.0
        } else {
            min / max
        }
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.dim();
        if b.rows() != n {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let m = b.cols();
        let mut x = Matrix::zeros(n, m);
        for i in 0..n {
            x.row_mut(i).copy_from_slice(b.row(self.perm[i]));
        }
        // forward substitution with the unit lower triangle
        for i in 0..n {
            let (done, rest) = x.as_mut_slice().split_at_mut(i * m);
            let xi = &mut rest[..m];
            for k in 0..i {
                let l = self.factors[(i, k)];
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (a, &b) in xi.iter_mut().zip(&done[k * m..(k + 1) * m]) {
                    *a -= l * b;
                }
            }
        }
        for i in (0..n).rev() {
            let (head, solved) = x.as_mut_slice().split_at_mut((i + 1) * m);
            let xi = &mut head[i * m..];
            for k in i + 1..n {
                let f = self.factors[(i, k)];
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let off = (k - i - 1) * m;
                for (a, &b) in xi.iter_mut().zip(&solved[off..off + m]) {
                    *a -= f * b;
                }
            }
            let u = self.factors[(i, i)];
            for a in xi.iter_mut() {
                *a /= u;
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.dim()))
    }

    /// Solves `Aᴴ·x = b` for a single vector.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension(format!(
                "right-hand side has {} entries, system has {n}",
                b.len()
            )));
        }
        // Aᴴ = Uᴴ Lᴴ P: solve Uᴴ w = b, then Lᴴ v = w, then x = Pᵀ v.
        let mut w = b.to_vec();
        for i in 0..n {
            let mut s = w[i];
            for k in 0..i {
                s -= self.factors[(k, i)].conj() * w[k];
            }
            w[i] = s / self.factors[(i, i)].conj();
        }
        for i in (0..n).rev() {
            let mut s = w[i];
            for k in i + 1..n {
                s -= self.factors[(k, i)].conj() * w[k];
            }
            w[i] = s;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        Ok(x)
    }

    /// Lower estimate of `‖A⁻¹‖₁` by Hager's method (a few solves, no inverse).
    pub fn inverse_norm1_estimate(&self) -> Result<f64> {
        let n = self.dim();
        if n == 0 {
            return Ok(0.0);
        }
        let column = |v: &[Complex64]| Matrix::column(v);
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&column(&x))?;
            let y: Vec<Complex64> = y.as_slice().to_vec();
            let norm: f64 = y.iter().map(|v| v.norm()).sum();
            if !norm.is_finite() {
                return Ok(f64::INFINITY);
            }
            if norm <= estimate {
                break;
            }
            estimate = norm;
            let xi: Vec<Complex64> = y
                .iter()
                .map(|v| if v.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { v / v.norm() })
                .collect();
            let z = self.solve_adjoint(&xi)?;
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![Complex64::new(0.0, 0.0); n];
            x[j] = Complex64::new(1.0, 0.0);
        }
        Ok(estimate)
    }
}

/// Solves `A·X = B` and returns `X` with `det A`.
pub fn lu_solve(a: &Matrix, b: &Matrix) -> Result<(Matrix, Complex64)> {
    let lu = Lu::factor(a)?;
    let x = lu.solve(b)?;
    Ok((x, lu.det()))
}

/// 1-norm condition number `‖A‖₁·‖A⁻¹‖₁`; infinite for singular `A`.
pub fn condition_number(a: &Matrix) -> f64 {
    match Lu::factor(a).and_then(|lu| lu.inverse()) {
        Ok(inv) if inv.is_finite() => a.norm_one() * inv.norm_one(),
        _ => f64::INFINITY,
    }
}

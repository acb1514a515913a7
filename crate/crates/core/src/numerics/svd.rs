use num_complex::Complex64;

use super::Matrix;
use crate::{Error, Result};

/// Thin singular value decomposition `A = U·diag(σ)·Vᴴ` with `σ` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: Matrix,
    pub v: Matrix,
}

impl Svd {
    /// Right singular vector belonging to the smallest singular value.
    pub fn smallest_right_vector(&self) -> Vec<Complex64> {
        let k = self.v.cols() - 1;
        (0..self.v.rows()).map(|i| self.v[(i, k)]).collect()
    }

    /// Number of singular values above `rel_tol · σ_max`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let max = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|&&s| s > rel_tol * max).count()
    }
}

/// One-sided Jacobi SVD; accurate for small singular values, fine for the
/// small matrices it is used on (S-matrices, residue samples).
pub fn svd(a: &Matrix) -> Result<Svd> {
    if a.rows() < a.cols() {
        let t = svd(&a.adjoint())?;
        return Ok(Svd {
            singular_values: t.singular_values,
            u: t.v,
            v: t.u,
        });
    }
    let m = a.rows();
    let n = a.cols();
    let mut u = a.clone();
    let mut v = Matrix::identity(n);
    let tol = f64::EPSILON * (m as f64).sqrt();
    // columns below rounding level of the whole matrix are left alone
    let negligible = (f64::EPSILON * a.norm_fro()).powi(2);
    let mut converged = false;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    alpha += up.norm_sqr();
                    beta += uq.norm_sqr();
                    gamma += up.conj() * uq;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)] * phase.conj();
                    u[(i, p)] = up * c - uq * s;
                    u[(i, q)] = up * s + uq * c;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)] * phase.conj();
                    v[(i, p)] = vp * c - vq * s;
                    v[(i, q)] = vp * s + vq * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: 80 });
    }
    let mut sv: Vec<(f64, usize)> = (0..n)
        .map(|j| ((0..m).map(|i| u[(i, j)].norm_sqr()).sum::<f64>().sqrt(), j))
        .collect();
    sv.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut uu = Matrix::zeros(m, n);
    let mut vv = Matrix::zeros(n, n);
    for (k, &(s, j)) in sv.iter().enumerate() {
        for i in 0..m {
            uu[(i, k)] = if s > 0.0 { u[(i, j)] / s } else { Complex64::new(0.0, 0.0) };
        }
        for i in 0..n {
            vv[(i, k)] = v[(i, j)];
        }
    }
    Ok(Svd {
        singular_values: sv.into_iter().map(|(s, _)| s).collect(),
        u: uu,
        v: vv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (m, n) in [(5, 5), (7, 3), (3, 6)] {
            let a = Matrix::from_fn(m, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let d = svd(&a).unwrap();
            let k = d.singular_values.len();
            let sigma = Matrix::from_diag(
                &d.singular_values.iter().map(|&s| c(s, 0.0)).collect::<Vec<_>>(),
            );
            let rec = &(&d.u * &sigma) * &d.v.adjoint();
            assert_eq!(k, m.min(n));
            assert!((&rec - &a).max_abs() < 1e-13, "{m}x{n}");
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_one_with_rounding_noise() {
        let x: Vec<Complex64> = (0..4).map(|i| c(0.3 + i as f64, -0.7 * i as f64)).collect();
        let a = Matrix::from_fn(4, 4, |i, j| x[i] * x[j] * c(1.0 / 3.0, 0.1) + c(1e-17 * (i * j) as f64, 0.0));
        let d = svd(&a).unwrap();
        assert_eq!(d.numerical_rank(1e-6), 1);
    }

    #[test]
    fn rank_one_outer_product() {
        let x = [c(1.0, 0.5), c(-0.3, 0.0), c(0.2, -1.0)];
        let y = [c(0.7, 0.0), c(0.1, 0.1), c(-2.0, 0.3)];
        let a = Matrix::from_fn(3, 3, |i, j| x[i] * y[j].conj());
        let d = svd(&a).unwrap();
        assert_eq!(d.numerical_rank(1e-6), 1);
        assert!(d.singular_values[1] < 1e-15 * d.singular_values[0] * 10.0);
        let null = d.smallest_right_vector();
        let r = a.matvec(&null).unwrap();
        assert!(r.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-14);
    }
}

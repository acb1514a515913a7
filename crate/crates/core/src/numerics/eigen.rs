use num_complex::Complex64;

use super::Matrix;
use crate::{Error, Result};

const ITERATIONS_PER_EIGENVALUE: usize = 30;

/// Eigenvalues of a square complex matrix, sorted by `(Re, Im)`.
///
/// Householder reduction to upper Hessenberg form followed by single-shift
/// implicit QR sweeps with Wilkinson shifts and deflation on negligible
/// subdiagonals.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    let mut eig = hessenberg_qr(&mut h)?;
    eig.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(eig)
}

/// In-place reduction to upper Hessenberg form by Householder reflections.
pub fn hessenberg(h: &mut Matrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        let alpha_norm: f64 = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * alpha_norm;
        for i in k + 1..n {
            v[i] = h[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for vi in &mut v[k + 1..n] {
            *vi /= vnorm;
        }
        // H <- (I - 2vv^H) H
        for j in k..n {
            let s: Complex64 = (k + 1..n).map(|i| v[i].conj() * h[(i, j)]).sum();
            let s2 = s * 2.0;
            for i in k + 1..n {
                let vi = v[i];
                h[(i, j)] -= vi * s2;
            }
        }
        // H <- H (I - 2vv^H)
        for i in 0..n {
            let s: Complex64 = (k + 1..n).map(|j| h[(i, j)] * v[j]).sum();
            let s2 = s * 2.0;
            for j in k + 1..n {
                let vj = v[j].conj();
                h[(i, j)] -= s2 * vj;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

fn hessenberg_qr(h: &mut Matrix) -> Result<Vec<Complex64>> {
    let n = h.rows();
    let eps = f64::EPSILON;
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let max_iter = ITERATIONS_PER_EIGENVALUE * n.max(1);
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // locate the top of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo, lo)].l1_norm() + h[(lo - 1, lo - 1)].l1_norm();
            let s = if s == 0.0 { scale } else { s };
            if h[(lo, lo - 1)].l1_norm() <= eps * s {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > max_iter {
            return Err(Error::NoConvergence { iterations: total });
        }
        let shift = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + Complex64::new(h[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        qr_sweep(h, lo, hi, shift);
    }
    Ok(eig)
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let l1 = mean + disc;
    let l2 = mean - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One implicit single-shift QR step on the block `lo..=hi` by bulge chasing.
fn qr_sweep(h: &mut Matrix, lo: usize, hi: usize, shift: Complex64) {
    let mut x = h[(lo, lo)] - shift;
    let mut y = h[(lo + 1, lo)];
    for k in lo..hi {
        if k > lo {
            x = h[(k, k - 1)];
            y = h[(k + 1, k - 1)];
        }
        let (c, s) = givens(x, y);
        // rows k, k+1 from the left by G
        let col_start = if k > lo { k - 1 } else { lo };
        for j in col_start..=hi {
            let a = h[(k, j)];
            let b = h[(k + 1, j)];
            h[(k, j)] = a * c + s * b;
            h[(k + 1, j)] = -s.conj() * a + b * c;
        }
        // columns k, k+1 from the right by G^H
        let row_end = (k + 2).min(hi);
        for i in lo..=row_end {
            let a = h[(i, k)];
            let b = h[(i, k + 1)];
            h[(i, k)] = a * c + b * s.conj();
            h[(i, k + 1)] = -a * s + b * c;
        }
        if k > lo {
            h[(k + 1, k - 1)] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Unitary `[[c, s], [-s̄, c]]` with real `c` mapping `(x, y)` to `(r, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    let c = ax / r;
    let s = (x / ax) * y.conj() / r;
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn diagonal_matrix() {
        let a = Matrix::from_diag(&[c(1.0, 0.0), c(2.0, 1.0), c(-3.0, 0.0)]);
        let e = eigenvalues(&a).unwrap();
        assert!(close(&e, &[c(-3.0, 0.0), c(1.0, 0.0), c(2.0, 1.0)], 1e-14));
    }

    #[test]
    fn nilpotent_block() {
        let a = Matrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]])
            .unwrap();
        let e = eigenvalues(&a).unwrap();
        assert!(close(&e, &[c(0.0, 0.0), c(0.0, 0.0)], 1e-14));
    }

    #[test]
    fn companion_of_z_squared_plus_one() {
        let a = Matrix::from_rows(&[vec![c(0.0, 0.0), c(-1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]])
            .unwrap();
        let e = eigenvalues(&a).unwrap();
        assert!(close(&e, &[c(0.0, -1.0), c(0.0, 1.0)], 1e-14), "{e:?}");
    }

    #[test]
    fn trace_and_determinant_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = Matrix::from_fn(20, 20, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let e = eigenvalues(&a).unwrap();
            let tr: Complex64 = e.iter().sum();
            let prod: Complex64 = e.iter().product();
            let det = crate::numerics::Lu::factor(&a).unwrap().det();
            assert!((tr - a.trace()).norm() <= 1e-8 * a.trace().norm().max(1.0));
            assert!((prod - det).norm() <= 1e-8 * det.norm(), "{prod} vs {det}");
        }
    }

    #[test]
    fn ordering_is_lexicographic() {
        let a = Matrix::from_diag(&[c(1.0, 2.0), c(1.0, -2.0), c(0.0, 5.0)]);
        let e = eigenvalues(&a).unwrap();
        assert_eq!(e, vec![c(0.0, 5.0), c(1.0, -2.0), c(1.0, 2.0)]);
    }

    #[test]
    fn non_normal_upper_triangular_plus_noise() {
        // Jordan-like structure with distinct diagonal survives the sweep.
        let n = 12;
        let a = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                c(i as f64, 0.5)
            } else if j == i + 1 {
                c(3.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let e = eigenvalues(&a).unwrap();
        for (k, z) in e.iter().enumerate() {
            assert!((z - c(k as f64, 0.5)).norm() < 1e-9);
        }
    }
}

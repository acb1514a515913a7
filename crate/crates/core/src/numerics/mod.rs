//! Dense complex linear algebra, Gauss-Legendre quadrature and scalar root tools.
//!
//! Everything here is a pure function of its inputs.

mod eigen;
mod lu;
mod matrix;
mod quadrature;
mod roots;
mod svd;

pub use eigen::{eigenvalues, hessenberg};
pub use lu::{condition_number, lu_solve, Lu};
pub use matrix::Matrix;
pub use quadrature::{gauss_legendre, legendre_rule, Arc, LineArc, Quadrature};
pub use roots::{central_derivative, newton_refine, winding_number, NewtonOptions, NewtonResult, Rect};
pub use svd::{svd, Svd};

#[cfg(test)]
mod lu_tests {
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::Error;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(rng: &mut ChaCha8Rng, r: usize, k: usize) -> Matrix {
        Matrix::from_fn(r, k, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn identity_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random(&mut rng, 3, 2);
        let (x, det) = lu_solve(&Matrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
        assert_eq!(det, c(1.0, 0.0));
    }

    #[test]
    fn adjoint_solve_and_norm_estimate() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [1, 4, 30] {
            let a = random(&mut rng, n, n);
            let lu = Lu::factor(&a).unwrap();
            let b: Vec<Complex64> = (0..n).map(|i| c(i as f64, 1.0)).collect();
            let x = lu.solve_adjoint(&b).unwrap();
            let r = a.adjoint().matvec(&x).unwrap();
            assert!(r.iter().zip(&b).all(|(p, q)| (p - q).norm() < 1e-10));
            let exact = lu.inverse().unwrap().norm_one();
            let est = lu.inverse_norm1_estimate().unwrap();
            assert!(est <= exact * (1.0 + 1e-12) && est >= 0.1 * exact, "{est} vs {exact}");
        }
    }

    #[test]
    fn diagonal_determinant_and_pivot_sign() {
        let a = Matrix::from_diag(&[c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(Lu::factor(&a).unwrap().det(), c(6.0, 0.0));
        let swap = Matrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]])
            .unwrap();
        assert_eq!(Lu::factor(&swap).unwrap().det(), c(-1.0, 0.0));
    }

    #[test]
    fn recovers_constructed_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(&mut rng, 50, 50);
        let x_true = random(&mut rng, 50, 3);
        let b = &a * &x_true;
        let (x, _) = lu_solve(&a, &b).unwrap();
        let rel = (&x - &x_true).norm_fro() / x_true.norm_fro();
        assert!(rel < 1e-10, "relative error {rel:e}");
    }

    #[test]
    fn residual_bound_on_well_conditioned_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 100 {
            let n = rng.gen_range(2..30);
            let mut a = random(&mut rng, n, n);
            for i in 0..n {
                a[(i, i)] += c(n as f64 * 0.5, 0.0);
            }
            if condition_number(&a) > 1e4 {
                continue;
            }
            let b = random(&mut rng, n, 2);
            let (x, _) = lu_solve(&a, &b).unwrap();
            let r = (&(&a * &x) - &b).norm_fro() / b.norm_fro();
            assert!(r <= 1e-10, "residual {r:e}");
            checked += 1;
        }
    }

    #[test]
    fn exactly_singular_pivot_is_reported() {
        let a = Matrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(2.0, 0.0), c(4.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(
            lu_solve(&a, &Matrix::identity(2)).unwrap_err(),
            Error::SingularMatrix { pivot: 1 }
        );
        assert_eq!(condition_number(&a), f64::INFINITY);
    }
}

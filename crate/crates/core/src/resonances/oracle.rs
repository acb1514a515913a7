//! Closed-form Fredholm denominator for finite-rank kernels.
//!
//! For `V = Σ_k g_k v_k(λ) v_k(μ) C_k` the transition kernel is
//! `T(λ, μ) = Σ_{jm} v_j(λ) X_jm v_m(μ)` with
//! `M(z) X = diag(g_j C_j)` and `M_jk(z) = δ_jk I + g_j C_j J_jk(z)`, where
//! `J_jk(z) = ∫_a^b v_j v_k / (ν − z) dν`. Polynomial form factors reduce
//! `J` to a polynomial plus `p(z)·log((b − z)/(a − z))`. Continuing through
//! the cut into `C^ℓ` replaces `J_jk` by `J_jk − 2πiℓ v_j(z) v_k(z)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::kernels::{horner, poly_mul, KernelFamily, KernelSpec};
use crate::numerics::{Lu, Matrix};
use crate::{Error, Result, Sheet, Side};

/// Closed-form `det M(z)` on either sheet for a polynomial finite-rank kernel.
#[derive(Debug, Clone)]
pub struct SeparableDenominator {
    a: f64,
    b: f64,
    dim: usize,
    couplings: Vec<f64>,
    channels: Vec<Matrix>,
    /// Expanded form factors, ascending coefficients.
    forms: Vec<Vec<f64>>,
    /// `v_j v_k`, row-major over `(j, k)`.
    products: Vec<Vec<f64>>,
}

impl SeparableDenominator {
    pub fn new(kernel: &KernelSpec) -> Result<Self> {
        let (a, b) = kernel.interval();
        let terms = match kernel.family() {
            KernelFamily::FiniteRank(terms) => terms,
            KernelFamily::AnalyticProduct(_) => {
                return Err(Error::OracleUnavailable(
                    "closed form needs a finite-rank kernel".into(),
                ))
            }
        };
        let mut forms = Vec::with_capacity(terms.len());
        for t in terms {
            forms.push(t.form.expanded(a, b).ok_or_else(|| {
                Error::OracleUnavailable("closed form needs polynomial form factors".into())
            })?);
        }
        let mut products = Vec::with_capacity(forms.len() * forms.len());
        for fj in &forms {
            for fk in &forms {
                products.push(poly_mul(fj, fk));
            }
        }
        Ok(SeparableDenominator {
            a,
            b,
            dim: kernel.dim(),
            couplings: terms.iter().map(|t| t.coupling).collect(),
            channels: terms.iter().map(|t| t.channel.clone()).collect(),
            forms,
            products,
        })
    }

    pub fn rank(&self) -> usize {
        self.forms.len()
    }

    /// `∫_a^b p(ν)/(ν − z) dν` on the physical sheet (principal logarithm).
    pub fn cauchy_integral(&self, p: &[f64], z: Complex64) -> Complex64 {
        // p(ν) = q(ν)(ν − z) + p(z), by synthetic division
        let deg = p.len() - 1;
        let mut q = vec![Complex64::new(0.0, 0.0); deg.max(1)];
        let mut carry = Complex64::new(0.0, 0.0);
        for k in (1..=deg).rev() {
            carry = carry * z + p[k];
            q[k - 1] = carry;
        }
        let remainder = carry * z + p[0];
        let (a, b) = (self.a, self.b);
        let poly_part: Complex64 = q
            .iter()
            .enumerate()
            .map(|(k, &c)| c * ((b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k as f64 + 1.0)))
            .sum();
        let log = ((Complex64::new(b, 0.0) - z) / (Complex64::new(a, 0.0) - z)).ln();
        poly_part + remainder * log
    }

    /// `M(z)` on the given sheet; `Π_ℓ` requires `z ∈ C^ℓ`.
    pub fn matrix(&self, z: Complex64, sheet: Sheet) -> Result<Matrix> {
        let shift = match sheet {
            Sheet::Physical => None,
            Sheet::Unphysical(side) => {
                if !side.holds(z) {
                    return Err(Error::InvalidArgument(format!(
                        "sheet {} is reached only for z in its half-plane, got {z}",
                        sheet.label()
                    )));
                }
                Some(side)
            }
        };
        let r = self.rank();
        let n = self.dim;
        let values: Vec<Complex64> = self.forms.iter().map(|f| horner(f, z)).collect();
        let mut m = Matrix::identity(r * n);
        for j in 0..r {
            for k in 0..r {
                let mut jjk = self.cauchy_integral(&self.products[j * r + k], z);
                if let Some(side) = shift {
                    jjk -= Complex64::new(0.0, 2.0 * PI * side.ell()) * values[j] * values[k];
                }
                let s = jjk * self.couplings[j];
                let c = &self.channels[j];
                for p in 0..n {
                    for q in 0..n {
                        m[(j * n + p, k * n + q)] += s * c[(p, q)];
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn det(&self, z: Complex64, sheet: Sheet) -> Result<Complex64> {
        let m = self.matrix(z, sheet)?;
        match Lu::factor(&m) {
            Ok(lu) => Ok(lu.det()),
            Err(Error::SingularMatrix { .. }) => Ok(Complex64::new(0.0, 0.0)),
            Err(e) => Err(e),
        }
    }

    /// `det S_ℓ(z) = det M^ℓ(z) / det M(z)` for `z ∈ C^ℓ`.
    pub fn smatrix_det(&self, z: Complex64, side: Side) -> Result<Complex64> {
        Ok(self.det(z, Sheet::Unphysical(side))? / self.det(z, Sheet::Physical)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reference_denominator_at_i() {
        let d = SeparableDenominator::new(&KernelSpec::reference(1.0)).unwrap();
        let j = d.cauchy_integral(&d.products[0], c(0.0, 1.0));
        assert!((j - c(0.0, 2.0 * PI - 16.0 / 3.0)).norm() <= 1e-14);
        let det = d.det(c(0.0, 1.0), Sheet::Physical).unwrap();
        assert!((det - c(1.0, 2.0 * PI - 16.0 / 3.0)).norm() <= 1e-14);
    }

    #[test]
    fn boundary_value_at_zero_energy() {
        // D(0 + i0) = 1 + iπ: the principal value vanishes by symmetry.
        let d = SeparableDenominator::new(&KernelSpec::reference(1.0)).unwrap();
        let det = d.det(c(0.0, 1e-12), Sheet::Physical).unwrap();
        assert!((det - c(1.0, PI)).norm() <= 1e-9);
    }

    #[test]
    fn sheets_glue_across_the_cut() {
        // Continuing from above through (a, b) onto Π₋₁ is continuous.
        let d = SeparableDenominator::new(&KernelSpec::reference(0.7)).unwrap();
        let x = 0.37;
        let above = d.det(c(x, 1e-10), Sheet::Physical).unwrap();
        let below = d.det(c(x, -1e-10), Sheet::Unphysical(Side::Lower)).unwrap();
        assert!((above - below).norm() <= 1e-8);
    }

    #[test]
    fn non_polynomial_kernel_has_no_oracle() {
        use crate::kernels::{FormFactor, HolomorphyRegion, ProductTerm};
        let k = KernelSpec::new(
            (-1.0, 1.0),
            1,
            KernelFamily::AnalyticProduct(ProductTerm {
                coupling: 1.0,
                form: FormFactor::bump(vec![1.0]),
                exponent: 0.5,
                channel: Matrix::identity(1),
            }),
            HolomorphyRegion::around(-1.0, 1.0, 0.5, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(SeparableDenominator::new(&k), Err(Error::OracleUnavailable(_))));
    }
}

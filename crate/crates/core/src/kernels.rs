//! Analytic, Hermitian-symmetric potential kernels `V(λ, μ)`.
//!
//! Two closed-form families are supported:
//!
//! * finite rank: `V(λ, μ) = Σ_k g_k v_k(λ) v_k(μ) C_k`,
//! * analytic product: `V(λ, μ) = g u(λ) u(μ) exp(c λ μ) C`,
//!
//! where every form factor is `(x − a)^p (b − x)^q P(x) exp(E(x))` with real
//! polynomials `P`, `E` and `p, q ≥ 1`, so the kernel vanishes at both
//! endpoints. Kernels are holomorphic on a mirror-symmetric rectangle `Ω`
//! containing `(a, b)`; evaluation outside `Ω` is refused.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::Matrix;
use crate::{Error, Result};

/// Rectangle `[re_min, re_max] × [−h, h]`, symmetric about the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolomorphyRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_halfwidth: f64,
}

impl HolomorphyRegion {
    pub fn new(re_min: f64, re_max: f64, im_halfwidth: f64) -> Result<Self> {
        let finite = re_min.is_finite() && re_max.is_finite() && im_halfwidth.is_finite();
        if !finite || re_min >= re_max || im_halfwidth <= 0.0 {
            return Err(Error::InvalidKernel(format!(
                "holomorphy region [{re_min}, {re_max}] x ±{im_halfwidth} is degenerate"
            )));
        }
        Ok(HolomorphyRegion {
            re_min,
            re_max,
            im_halfwidth,
        })
    }

    /// `[a − δ, b + δ] × [−h, h]`.
    pub fn around(a: f64, b: f64, delta: f64, im_halfwidth: f64) -> Result<Self> {
        HolomorphyRegion::new(a - delta, b + delta, im_halfwidth)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im.abs() <= self.im_halfwidth
    }

    /// Distance from `z` (assumed inside) to the region boundary.
    pub fn depth_of(&self, z: Complex64) -> f64 {
        (z.re - self.re_min)
            .min(self.re_max - z.re)
            .min(self.im_halfwidth - z.im.abs())
    }
}

/// Form factor `(x − a)^p (b − x)^q P(x) exp(E(x))`; coefficients ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFactor {
    pub p: u32,
    pub q: u32,
    pub poly: Vec<f64>,
    pub exp_poly: Vec<f64>,
}

impl FormFactor {
    /// `(x − a)(b − x)` times the polynomial `poly`.
    pub fn bump(poly: Vec<f64>) -> Self {
        FormFactor {
            p: 1,
            q: 1,
            poly,
            exp_poly: Vec::new(),
        }
    }

    pub fn eval(&self, a: f64, b: f64, x: Complex64) -> Complex64 {
        let left = (x - a).powu(self.p);
        let right = (Complex64::new(b, 0.0) - x).powu(self.q);
        let mut value = left * right * horner(&self.poly, x);
        if self.exp_poly.iter().any(|&c| c != 0.0) {
            value *= horner(&self.exp_poly, x).exp();
        }
        value
    }

    pub fn is_polynomial(&self) -> bool {
        self.exp_poly.iter().all(|&c| c == 0.0)
    }

    /// Ascending coefficients of the whole factor when it is a polynomial.
    pub fn expanded(&self, a: f64, b: f64) -> Option<Vec<f64>> {
        if !self.is_polynomial() {
            return None;
        }
        let mut out = if self.poly.is_empty() {
            vec![0.0]
        } else {
            self.poly.clone()
        };
        for _ in 0..self.p {
            out = poly_mul(&out, &[-a, 1.0]);
        }
        for _ in 0..self.q {
            out = poly_mul(&out, &[b, -1.0]);
        }
        Some(out)
    }

    fn validate(&self) -> Result<()> {
        if self.p == 0 || self.q == 0 {
            return Err(Error::InvalidKernel(
                "form factors must vanish at both endpoints (p, q >= 1)".into(),
            ));
        }
        if self.poly.is_empty() {
            return Err(Error::InvalidKernel("form factor polynomial is empty".into()));
        }
        if !self.poly.iter().chain(&self.exp_poly).all(|c| c.is_finite()) {
            return Err(Error::InvalidKernel("non-finite form factor coefficient".into()));
        }
        Ok(())
    }
}

pub(crate) fn horner(coeffs: &[f64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

pub(crate) fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// One separable term `g · v(λ) v(μ) · C`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTerm {
    pub coupling: f64,
    pub form: FormFactor,
    pub channel: Matrix,
}

/// `g · u(λ) u(μ) exp(c λ μ) · C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub coupling: f64,
    pub form: FormFactor,
    pub exponent: f64,
    pub channel: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    FiniteRank(Vec<RankTerm>),
    AnalyticProduct(ProductTerm),
}

/// An analytic kernel on `Δ = (a, b)` with values in `n × n` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    a: f64,
    b: f64,
    dim: usize,
    family: KernelFamily,
    region: HolomorphyRegion,
}

impl KernelSpec {
    pub fn new(interval: (f64, f64), dim: usize, family: KernelFamily, region: HolomorphyRegion) -> Result<Self> {
        let (a, b) = interval;
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidKernel(format!(
                "interval ({a}, {b}) must be finite with a < b"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidKernel("internal dimension must be >= 1".into()));
        }
        if region.re_min > a || region.re_max < b {
            return Err(Error::InvalidKernel(format!(
                "holomorphy region [{}, {}] does not contain ({a}, {b})",
                region.re_min, region.re_max
            )));
        }
        let check_channel = |c: &Matrix| -> Result<()> {
            if c.rows() != dim || c.cols() != dim {
                return Err(Error::InvalidKernel(format!(
                    "channel matrix is {}x{}, expected {dim}x{dim}",
                    c.rows(),
                    c.cols()
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidKernel("non-finite channel matrix".into()));
            }
            Ok(())
        };
        match &family {
            KernelFamily::FiniteRank(terms) => {
                if terms.is_empty() {
                    return Err(Error::InvalidKernel("finite-rank kernel without terms".into()));
                }
                for t in terms {
                    if !t.coupling.is_finite() {
                        return Err(Error::InvalidKernel("non-finite coupling".into()));
                    }
                    t.form.validate()?;
                    check_channel(&t.channel)?;
                }
            }
            KernelFamily::AnalyticProduct(t) => {
                if !(t.coupling.is_finite() && t.exponent.is_finite()) {
                    return Err(Error::InvalidKernel("non-finite product parameters".into()));
                }
                t.form.validate()?;
                check_channel(&t.channel)?;
            }
        }
        Ok(KernelSpec {
            a,
            b,
            dim,
            family,
            region,
        })
    }

    /// Scalar rank-one kernel `g (1 − λ²)(1 − μ²)` on `(−1, 1)`, holomorphic
    /// (in fact entire) on `[−1.5, 1.5] × [−1, 1]`.
    pub fn reference(coupling: f64) -> Self {
        let region = HolomorphyRegion::around(-1.0, 1.0, 0.5, 1.0).expect("static region");
        KernelSpec::new(
            (-1.0, 1.0),
            1,
            KernelFamily::FiniteRank(vec![RankTerm {
                coupling,
                form: FormFactor::bump(vec![1.0]),
                channel: Matrix::identity(1),
            }]),
            region,
        )
        .expect("reference kernel is valid")
    }

    /// Two-channel rank-three kernel on `(−1, 1)` with form factors
    /// `(1 − λ²)·{1, λ, 1 + λ²}`, couplings `(0.6, 0.9, −0.4)` and Hermitian
    /// channel matrices, one of them complex.
    pub fn coupled_channels() -> Self {
        let region = HolomorphyRegion::around(-1.0, 1.0, 0.5, 1.0).expect("static region");
        let r = |re: f64| Complex64::new(re, 0.0);
        let i = |im: f64| Complex64::new(0.0, im);
        let channel = |rows: [[Complex64; 2]; 2]| {
            Matrix::from_rows(&rows.map(|row| row.to_vec())).expect("2x2 rows")
        };
        let terms = vec![
            RankTerm {
                coupling: 0.6,
                form: FormFactor::bump(vec![1.0]),
                channel: channel([[r(1.0), r(0.3)], [r(0.3), r(0.5)]]),
            },
            RankTerm {
                coupling: 0.9,
                form: FormFactor::bump(vec![0.0, 1.0]),
                channel: channel([[r(0.2), i(0.4)], [i(-0.4), r(1.0)]]),
            },
            RankTerm {
                coupling: -0.4,
                form: FormFactor::bump(vec![1.0, 0.0, 1.0]),
                channel: channel([[r(1.0), r(0.0)], [r(0.0), r(-0.5)]]),
            },
        ];
        KernelSpec::new((-1.0, 1.0), 2, KernelFamily::FiniteRank(terms), region).expect("coupled kernel is valid")
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn region(&self) -> &HolomorphyRegion {
        &self.region
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            KernelFamily::FiniteRank(terms) => terms.iter().all(|t| t.coupling == 0.0),
            KernelFamily::AnalyticProduct(t) => t.coupling == 0.0,
        }
    }

    pub fn check_domain(&self, argument: &'static str, z: Complex64) -> Result<()> {
        if self.region.contains(z) && z.re.is_finite() && z.im.is_finite() {
            Ok(())
        } else {
            Err(Error::OutOfDomain { argument, value: z })
        }
    }

    /// `V(λ, μ)` as an `n × n` matrix.
    pub fn eval(&self, lambda: Complex64, mu: Complex64) -> Result<Matrix> {
        self.eval_block(&[lambda], &[mu])
    }

    /// Block matrix `[V(λ_i, μ_j)]` of size `(L·n) × (M·n)`.
    pub fn eval_block(&self, lambdas: &[Complex64], mus: &[Complex64]) -> Result<Matrix> {
        for &l in lambdas {
            self.check_domain("lambda", l)?;
        }
        for &m in mus {
            self.check_domain("mu", m)?;
        }
        let n = self.dim;
        let mut out = Matrix::zeros(lambdas.len() * n, mus.len() * n);
        match &self.family {
            KernelFamily::FiniteRank(terms) => {
                for t in terms {
                    let fl: Vec<Complex64> = lambdas.iter().map(|&x| t.form.eval(self.a, self.b, x)).collect();
                    let fm: Vec<Complex64> = mus.iter().map(|&x| t.form.eval(self.a, self.b, x)).collect();
                    for (i, &vl) in fl.iter().enumerate() {
                        let gl = vl * t.coupling;
                        for (j, &vm) in fm.iter().enumerate() {
                            let s = gl * vm;
                            add_scaled_block(&mut out, i, j, &t.channel, s);
                        }
                    }
                }
            }
            KernelFamily::AnalyticProduct(t) => {
                let fl: Vec<Complex64> = lambdas.iter().map(|&x| t.form.eval(self.a, self.b, x)).collect();
                let fm: Vec<Complex64> = mus.iter().map(|&x| t.form.eval(self.a, self.b, x)).collect();
                for (i, (&vl, &l)) in fl.iter().zip(lambdas).enumerate() {
                    let gl = vl * t.coupling;
                    for (j, (&vm, &m)) in fm.iter().zip(mus).enumerate() {
                        let s = gl * vm * (l * m * t.exponent).exp();
                        add_scaled_block(&mut out, i, j, &t.channel, s);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn add_scaled_block(out: &mut Matrix, bi: usize, bj: usize, channel: &Matrix, s: Complex64) {
    let n = channel.rows();
    for r in 0..n {
        for c in 0..n {
            out[(bi * n + r, bj * n + c)] += s * channel[(r, c)];
        }
    }
}

/// Structural checks of a kernel on sampled points.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub samples: usize,
    /// `max ‖V(λ, μ) − V(μ, λ)ᴴ‖` over real pairs in `(a, b)`.
    pub hermiticity_residual: f64,
    /// Largest `‖V‖` with one argument at an endpoint.
    pub endpoint_max: f64,
    /// `max ‖V(λ, μ) − V(μ̄, λ̄)ᴴ‖` over complex pairs in `Ω`.
    pub schwarz_residual: f64,
    /// `max |(1/2πi)∮ V(ζ, μ)/(ζ − λ) dζ − V(λ, μ)|` over small circles in `Ω`.
    pub analyticity_residual: f64,
    /// Largest kernel entry seen, for scaling the residuals.
    pub scale: f64,
}

impl ValidationReport {
    pub fn hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual <= tol * self.scale.max(1.0)
    }

    pub fn passed(&self, tol: f64) -> bool {
        let s = self.scale.max(1.0);
        self.hermitian(tol)
            && self.endpoint_max <= tol * s
            && self.schwarz_residual <= tol * s
            && self.analyticity_residual <= 1e-10 * s
    }
}

fn max_entry_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).max_abs()
}

/// Samples hermiticity, endpoint vanishing, Schwarz reflection and analyticity.
pub fn validate_kernel(kernel: &KernelSpec, sample_count: usize, seed: u64) -> Result<ValidationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = kernel.interval();
    let region = *kernel.region();
    let mut report = ValidationReport {
        samples: sample_count,
        hermiticity_residual: 0.0,
        endpoint_max: 0.0,
        schwarz_residual: 0.0,
        analyticity_residual: 0.0,
        scale: 0.0,
    };
    let real = |rng: &mut ChaCha8Rng| Complex64::new(rng.gen_range(a..b), 0.0);
    let complex = |rng: &mut ChaCha8Rng| {
        Complex64::new(
            rng.gen_range(region.re_min..region.re_max),
            rng.gen_range(-region.im_halfwidth..region.im_halfwidth),
        )
    };
    for _ in 0..sample_count {
        let (l, m) = (real(&mut rng), real(&mut rng));
        let v = kernel.eval(l, m)?;
        let vt = kernel.eval(m, l)?.adjoint();
        report.scale = report.scale.max(v.max_abs());
        report.hermiticity_residual = report.hermiticity_residual.max(max_entry_diff(&v, &vt));

        for (x, y) in [
            (Complex64::new(a, 0.0), m),
            (Complex64::new(b, 0.0), m),
            (l, Complex64::new(a, 0.0)),
            (l, Complex64::new(b, 0.0)),
        ] {
            report.endpoint_max = report.endpoint_max.max(kernel.eval(x, y)?.max_abs());
        }

        let (l, m) = (complex(&mut rng), complex(&mut rng));
        let v = kernel.eval(l, m)?;
        let reflected = kernel.eval(m.conj(), l.conj())?.adjoint();
        report.scale = report.scale.max(v.max_abs());
        report.schwarz_residual = report.schwarz_residual.max(max_entry_diff(&v, &reflected));
    }
    // Cauchy reproduction on a handful of circles.
    let probes = sample_count.clamp(1, 8);
    for _ in 0..probes {
        let center = complex(&mut rng) * 0.5 + Complex64::new(0.25 * (region.re_min + region.re_max), 0.0);
        let mu = complex(&mut rng);
        let radius = (0.5 * region.depth_of(center)).min(0.1);
        if radius <= 1e-6 {
            continue;
        }
        let exact = kernel.eval(center, mu)?;
        let points = 64;
        let mut acc = Matrix::zeros(kernel.dim(), kernel.dim());
        for k in 0..points {
            let theta = 2.0 * PI * k as f64 / points as f64;
            let zeta = center + Complex64::from_polar(radius, theta);
            acc = &acc + &kernel.eval(zeta, mu)?;
        }
        let mean = acc.scale(Complex64::new(1.0 / points as f64, 0.0));
        report.analyticity_residual = report.analyticity_residual.max(max_entry_diff(&mean, &exact));
    }
    Ok(report)
}

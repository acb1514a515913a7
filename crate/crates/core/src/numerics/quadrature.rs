use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// A smooth arc `γ: [0, 1] → ℂ` with its derivative.
pub trait Arc {
    fn point(&self, t: f64) -> Complex64;
    fn tangent(&self, t: f64) -> Complex64;
}

/// Nodes and complex weights of a rule along a path; `segment[k]` is the
/// index of the smooth piece node `k` belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
    pub segment: Vec<usize>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> Complex64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Concatenates rules of consecutive pieces, renumbering segments.
    pub fn concat(parts: Vec<Quadrature>) -> Quadrature {
        let mut out = Quadrature {
            nodes: Vec::new(),
            weights: Vec::new(),
            segment: Vec::new(),
        };
        for (s, part) in parts.into_iter().enumerate() {
            out.segment.extend(std::iter::repeat(s).take(part.nodes.len()));
            out.nodes.extend(part.nodes);
            out.weights.extend(part.weights);
        }
        out
    }
}

/// Gauss-Legendre abscissae and weights on `[-1, 1]`, ascending.
pub fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// `n`-point Gauss-Legendre rule mapped onto `arc`: nodes `γ(t_k)`, weights `γ'(t_k)·w_k`.
pub fn gauss_legendre(n: usize, arc: &dyn Arc) -> Result<Quadrature> {
    if n == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    let (x, w) = legendre_rule(n);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (&xk, &wk) in x.iter().zip(&w) {
        let t = 0.5 * (xk + 1.0);
        let p = arc.point(t);
        let d = arc.tangent(t);
        if !(p.re.is_finite() && p.im.is_finite() && d.re.is_finite() && d.im.is_finite()) {
            return Err(Error::DegenerateArc { t });
        }
        nodes.push(p);
        weights.push(d * (0.5 * wk));
    }
    Ok(Quadrature {
        nodes,
        weights,
        segment: vec![0; n],
    })
}

/// Straight segment from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineArc {
    pub from: Complex64,
    pub to: Complex64,
}

impl Arc for LineArc {
    fn point(&self, t: f64) -> Complex64 {
        self.from + (self.to - self.from) * t
    }

    fn tangent(&self, _t: f64) -> Complex64 {
        self.to - self.from
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit() -> LineArc {
        LineArc {
            from: c(-1.0, 0.0),
            to: c(1.0, 0.0),
        }
    }

    // ∫_{-1}^{1} (1-ν²)²/(ν-i) dν = i(2π - 16/3): partial fractions give
    // (1-ν²)² = -(ν+i)(3-ν²)(ν-i) + 4, the log term contributes 4·(iπ/2)
    // and the odd polynomial part vanishes.
    fn anchor() -> Complex64 {
        c(0.0, 2.0 * PI - 16.0 / 3.0)
    }

    fn anchor_integrand(nu: Complex64) -> Complex64 {
        let v = Complex64::new(1.0, 0.0) - nu * nu;
        v * v / (nu - c(0.0, 1.0))
    }

    #[test]
    fn midpoint_rule() {
        let q = gauss_legendre(1, &unit()).unwrap();
        assert_eq!(q.nodes, vec![c(0.0, 0.0)]);
        assert!((q.weights[0] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_points_integrate_quadratic() {
        let q = gauss_legendre(2, &unit()).unwrap();
        let val = q.integrate(|x| x * x);
        assert!((val - c(2.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn analytic_anchor_at_twenty_nodes() {
        let q = gauss_legendre(20, &unit()).unwrap();
        let val = q.integrate(anchor_integrand);
        assert!((val - anchor()).norm() <= 1e-12, "err {}", (val - anchor()).norm());
        assert!((anchor().im - 0.949_851_973_846_253).abs() < 1e-14);
    }

    #[test]
    fn spectral_convergence_on_doubling() {
        let err = |n| {
            let q = gauss_legendre(n, &unit()).unwrap();
            (q.integrate(anchor_integrand) - anchor()).norm()
        };
        for n in [8, 16] {
            let (e1, e2) = (err(n), err(2 * n));
            assert!(e2 * 10.0 <= e1 || e2 < 1e-15, "n={n}: {e1:e} -> {e2:e}");
        }
        // 32 -> 64 sits at the rounding floor.
        assert!(err(32) < 1e-13);
    }

    #[test]
    fn weights_sum_to_endpoint_difference() {
        let arc = LineArc {
            from: c(-1.0, 0.0),
            to: c(0.5, -0.3),
        };
        for n in [1, 7, 64, 301] {
            let q = gauss_legendre(n, &arc).unwrap();
            let s = q.weight_sum();
            assert!((s - (arc.to - arc.from)).norm() <= 1e-13 * 2.0);
            assert_eq!(q.nodes.len(), q.weights.len());
        }
    }

    #[test]
    fn legendre_rule_exactness() {
        let (x, w) = legendre_rule(12);
        for deg in 0..24 {
            let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((num - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    struct Broken;
    impl Arc for Broken {
        fn point(&self, t: f64) -> Complex64 {
            c(1.0 / (t - 0.5).abs().min(0.0), 0.0)
        }
        fn tangent(&self, _t: f64) -> Complex64 {
            c(1.0, 0.0)
        }
    }

    #[test]
    fn degenerate_arc_is_rejected() {
        assert!(matches!(gauss_legendre(4, &Broken), Err(Error::DegenerateArc { .. })));
        assert!(gauss_legendre(0, &unit()).is_err());
    }
}

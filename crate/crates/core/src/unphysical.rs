//! Continuation of `T` and `S` onto the unphysical sheets `Π_ℓ`.
//!
//! For `z ∈ Ω ∩ C^ℓ` the continued kernel is assembled from physical-sheet
//! quantities only:
//!
//! `T′(λ, μ, z) = T(λ, μ, z) + 2πiℓ · T(λ, z, z) · S_ℓ(z)⁻¹ · T(z, μ, z)`,
//!
//! and `S_{−ℓ}` continued to `Π_ℓ` is `S_ℓ(z)⁻¹`. The direct route solves the
//! Lippmann-Schwinger equation on a contour that dips past `z`, which gives
//! the same `T′` without any inversion of `S`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::contours::{build_contour, ContourSpec};
use crate::kernels::KernelSpec;
use crate::numerics::{svd, Lu, Matrix};
use crate::physical::{
    converge, converged_nodes, physical_system, smatrix_from, smatrix_value, GridSystem, SolveMode, SolverOptions,
};
use crate::{Error, Result, SheetPoint, Side};

/// Inversion condition of `S_ℓ(z)` above which continuation is refused.
pub const CONDITION_LIMIT: f64 = 1e12;

/// `max(1, ‖S‖₁)·‖S⁻¹‖₁`: the ordinary condition number, except that a
/// uniformly small `S` (a scalar near a zero) also counts as ill-conditioned.
pub fn inversion_condition(s: &Matrix) -> f64 {
    match Lu::factor(s).and_then(|lu| lu.inverse()) {
        Ok(inv) if inv.is_finite() => s.norm_one().max(1.0) * inv.norm_one(),
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Formula,
    DirectContour,
}

/// A value on `Π_ℓ` with the diagnostics of how it was obtained.
#[derive(Debug, Clone)]
pub struct ContinuedValue {
    pub point: SheetPoint,
    pub value: Matrix,
    pub route: Route,
    /// [`inversion_condition`] of `S_ℓ(z)`; `NaN` on the direct route.
    pub condition: f64,
    /// `max |S_ℓ(z)·value − I|` for continued scattering matrices.
    pub product_residual: Option<f64>,
    pub nodes: usize,
}

fn check_point(kernel: &KernelSpec, z: Complex64, side: Side) -> Result<SheetPoint> {
    kernel.check_domain("z", z)?;
    SheetPoint::unphysical(z, side)
}

fn two_pi_i_ell(side: Side) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * side.ell())
}

/// `T′` blocks `[T′(λ_k, μ_m, z)]` from one physical-sheet system, with the
/// condition number of `S_ℓ(z)`.
fn formula_block(
    system: &GridSystem,
    side: Side,
    lambdas: &[Complex64],
    mus: &[Complex64],
) -> Result<(Matrix, f64)> {
    let z = system.z();
    let n = system.kernel().dim();
    let mut ls = lambdas.to_vec();
    ls.push(z);
    let mut ms = mus.to_vec();
    ms.push(z);
    let all = system.extend_block(&ls, &ms)?;
    let (l, m) = (lambdas.len() * n, mus.len() * n);
    let t_lm = all.submatrix(0, 0, l, m);
    let t_lz = all.submatrix(0, m, l, n);
    let t_zm = all.submatrix(l, 0, n, m);
    let t_zz = all.submatrix(l, m, n, n);
    let s = &Matrix::identity(n) - &t_zz.scale(two_pi_i_ell(side));
    let condition = inversion_condition(&s);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::AtResonance { z, condition });
    }
    let s_inv_t = Lu::factor(&s)?.solve(&t_zm)?;
    let correction = t_lz.matmul(&s_inv_t)?.scale(two_pi_i_ell(side));
    Ok((&t_lm + &correction, condition))
}

/// Continued transition kernel `T′(λ, μ, z)` on `Π_ℓ` by the formula route.
pub fn continue_t(
    kernel: &KernelSpec,
    z: Complex64,
    side: Side,
    lambda: Complex64,
    mu: Complex64,
    opts: &SolverOptions,
) -> Result<ContinuedValue> {
    continue_t_block(kernel, z, side, &[lambda], &[mu], opts)
}

/// Block version of [`continue_t`] over argument lists.
pub fn continue_t_block(
    kernel: &KernelSpec,
    z: Complex64,
    side: Side,
    lambdas: &[Complex64],
    mus: &[Complex64],
    opts: &SolverOptions,
) -> Result<ContinuedValue> {
    let point = check_point(kernel, z, side)?;
    let n = kernel.dim();
    if kernel.is_zero() {
        return Ok(ContinuedValue {
            point,
            value: Matrix::zeros(lambdas.len() * n, mus.len() * n),
            route: Route::Formula,
            condition: 1.0,
            product_residual: None,
            nodes: 0,
        });
    }
    let mut condition = f64::NAN;
    let (value, nodes, _) = converge(opts, |nodes| {
        let system = physical_system(kernel, z, side, opts, nodes)?;
        let (v, c) = formula_block(&system, side, lambdas, mus)?;
        condition = c;
        Ok(v)
    })?;
    Ok(ContinuedValue {
        point,
        value,
        route: Route::Formula,
        condition,
        product_residual: None,
        nodes,
    })
}

/// Depth of an elliptic dip that strictly contains `z` with room to spare.
pub fn direct_dip_depth(kernel: &KernelSpec, z: Complex64, opts: &SolverOptions) -> Result<f64> {
    let (a, b) = kernel.interval();
    let center = 0.5 * (a + b);
    let radius = 0.5 * (b - a);
    let x = (z.re - center) / radius;
    if x.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "no dip from a to b passes below {z}: its real part is outside the interval"
        )));
    }
    let needed = z.im.abs() / (1.0 - x * x).sqrt();
    let standoff = crate::contours::STANDOFF * (b - a);
    let depth = opts
        .dip_depth_for(kernel)
        .max(1.25 * needed + 4.0 * standoff);
    let limit = 0.95 * kernel.region().im_halfwidth;
    if depth >= limit {
        return Err(Error::OutOfDomain {
            argument: "depth",
            value: Complex64::new(0.0, depth),
        });
    }
    Ok(depth)
}

/// `T′(λ, μ, z)` by solving directly on a contour that dips past `z`.
pub fn continue_t_direct(
    kernel: &KernelSpec,
    z: Complex64,
    side: Side,
    lambda: Complex64,
    mu: Complex64,
    opts: &SolverOptions,
) -> Result<ContinuedValue> {
    let point = check_point(kernel, z, side)?;
    let (a, b) = kernel.interval();
    let depth = direct_dip_depth(kernel, z, opts)?;
    let (value, nodes, _) = converge(opts, |nodes| {
        let contour = build_contour(&ContourSpec::elliptic_dip(depth, side, nodes), a, b, kernel.region())?;
        let system = GridSystem::new(kernel, &contour, z, SolveMode::DirectUnphysical)?;
        system.extend_block(&[lambda], &[mu])
    })?;
    Ok(ContinuedValue {
        point,
        value,
        route: Route::DirectContour,
        condition: f64::NAN,
        product_residual: None,
        nodes,
    })
}

/// `S_{−ℓ}` continued to `Π_ℓ`, i.e. `S_ℓ(z)⁻¹`.
pub fn continue_s(kernel: &KernelSpec, z: Complex64, side: Side, opts: &SolverOptions) -> Result<ContinuedValue> {
    let point = check_point(kernel, z, side)?;
    let sv = smatrix_value(kernel, z, side, opts)?;
    let (value, condition, residual) = invert_smatrix(&sv.s, z)?;
    Ok(ContinuedValue {
        point,
        value,
        route: Route::Formula,
        condition,
        product_residual: Some(residual),
        nodes: sv.nodes,
    })
}

/// `(S⁻¹, condition, max |S·S⁻¹ − I|)`, refusing above [`CONDITION_LIMIT`].
pub fn invert_smatrix(s: &Matrix, z: Complex64) -> Result<(Matrix, f64, f64)> {
    let condition = inversion_condition(s);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::AtResonance { z, condition });
    }
    let inv = Lu::factor(s)?.inverse()?;
    let residual = (&s.matmul(&inv)? - &Matrix::identity(s.rows())).max_abs();
    Ok((inv, condition, residual))
}

/// `‖S_ℓ(z)·T′(z, μ, z) − T(z, μ, z)‖`, all from one physical-sheet system.
pub fn half_on_shell_check(kernel: &KernelSpec, z: Complex64, side: Side, mu: Complex64, opts: &SolverOptions) -> Result<f64> {
    check_point(kernel, z, side)?;
    if kernel.is_zero() {
        return Ok(0.0);
    }
    let nodes = converged_nodes(kernel, z, side, opts, opts.tol)?;
    let system = physical_system(kernel, z, side, opts, nodes)?;
    let s = smatrix_from(&system, side)?;
    let (t_prime, _) = formula_block(&system, side, &[z], &[mu])?;
    let t = system.extend_block(&[z], &[mu])?;
    Ok((&s.matmul(&t_prime)? - &t).max_abs())
}

/// Residue of `T′` at an isolated pole, sampled on probe grids.
#[derive(Debug, Clone)]
pub struct ResidueEstimate {
    pub matrix: Matrix,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// `σ_rank / σ_{rank+1}`; infinite when the next value is exactly zero.
    pub gap: f64,
    /// Change of the residue between 64 and 128 circle points.
    pub quadrature_error: f64,
    /// Change of the residue when the radius is halved.
    pub radius_discrepancy: f64,
}

/// Relative tolerance separating nonzero singular values of the residue.
pub const RESIDUE_RANK_TOL: f64 = 1e-6;
/// Relative radius-halving change beyond which the circle is contaminated.
const CONTAMINATION_TOL: f64 = 1e-6;

fn default_probes(kernel: &KernelSpec) -> Vec<Complex64> {
    let (a, b) = kernel.interval();
    [0.2, 0.4, 0.6, 0.8]
        .iter()
        .map(|t| Complex64::new(a + (b - a) * t, 0.0))
        .collect()
}

fn circle_residue(
    kernel: &KernelSpec,
    z0: Complex64,
    side: Side,
    radius: f64,
    points: usize,
    probes: &[Complex64],
    nodes: usize,
    opts: &SolverOptions,
) -> Result<Matrix> {
    let mut acc: Option<Matrix> = None;
    for k in 0..points {
        let theta = 2.0 * PI * (k as f64 + 0.5) / points as f64;
        let offset = Complex64::from_polar(radius, theta);
        let system = physical_system(kernel, z0 + offset, side, opts, nodes)?;
        let (t, _) = formula_block(&system, side, probes, probes)?;
        let term = t.scale(offset);
        acc = Some(match acc {
            None => term,
            Some(a) => &a + &term,
        });
    }
    let total = acc.ok_or_else(|| Error::InvalidArgument("residue needs circle points".into()))?;
    Ok(total.scale(Complex64::new(1.0 / points as f64, 0.0)))
}

/// Rank of the residue of `T′` at `z0` from a trapezoid rule on a circle.
pub fn residue_rank(
    kernel: &KernelSpec,
    z0: Complex64,
    side: Side,
    radius: f64,
    opts: &SolverOptions,
) -> Result<ResidueEstimate> {
    residue_rank_with(kernel, z0, side, radius, &default_probes(kernel), opts)
}

pub fn residue_rank_with(
    kernel: &KernelSpec,
    z0: Complex64,
    side: Side,
    radius: f64,
    probes: &[Complex64],
    opts: &SolverOptions,
) -> Result<ResidueEstimate> {
    check_point(kernel, z0, side)?;
    if !(radius > 0.0) || z0.im.abs() <= radius * 1.05 {
        return Err(Error::InvalidArgument(format!(
            "circle of radius {radius} around {z0} must stay inside its half-plane"
        )));
    }
    for k in 0..8 {
        let p = z0 + Complex64::from_polar(radius, PI * k as f64 / 4.0);
        kernel.check_domain("circle", p)?;
    }
    let probe_nodes = [radius, -radius]
        .iter()
        .map(|&r| converged_nodes(kernel, z0 + r, side, opts, 1e-12))
        .collect::<Result<Vec<_>>>()?;
    let nodes = probe_nodes.into_iter().max().unwrap_or(opts.nodes);
    let r64 = circle_residue(kernel, z0, side, radius, 64, probes, nodes, opts)?;
    let r128 = circle_residue(kernel, z0, side, radius, 128, probes, nodes, opts)?;
    let half = circle_residue(kernel, z0, side, 0.5 * radius, 64, probes, nodes, opts)?;
    let scale = r128.max_abs().max(f64::MIN_POSITIVE);
    let quadrature_error = (&r128 - &r64).max_abs();
    let radius_discrepancy = (&half - &r128).max_abs();
    if radius_discrepancy > CONTAMINATION_TOL * scale.max(quadrature_error) {
        return Err(Error::ContourContaminated {
            radius,
            discrepancy: radius_discrepancy / scale,
        });
    }
    let d = svd(&r128)?;
    let rank = d.numerical_rank(RESIDUE_RANK_TOL);
    let gap = match (rank, d.singular_values.get(rank)) {
        (0, _) => 0.0,
        (_, None) => f64::INFINITY,
        (r, Some(&next)) => {
            if next == 0.0 {
                f64::INFINITY
            } else {
                d.singular_values[r - 1] / next
            }
        }
    };
    Ok(ResidueEstimate {
        matrix: r128,
        singular_values: d.singular_values,
        rank,
        gap,
        quadrature_error,
        radius_discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn v(x: Complex64) -> Complex64 {
        c(1.0, 0.0) - x * x
    }

    /// `D(z) = 1 + g ∫ v²/(ν − z)`, closed form with the principal log.
    fn d_phys(g: f64, z: Complex64) -> Complex64 {
        let p = z * (2.0 / 3.0) + (z * z * z - z * 2.0) * 2.0;
        let j = p + v(z) * v(z) * ((z - 1.0) / (z + 1.0)).ln();
        c(1.0, 0.0) + j * g
    }

    fn d_second(g: f64, z: Complex64) -> Complex64 {
        d_phys(g, z) + c(0.0, 2.0 * PI) * g * v(z) * v(z)
    }

    #[test]
    fn zero_kernel_continues_trivially() {
        let k = KernelSpec::reference(0.0);
        let opts = SolverOptions::default();
        let t = continue_t(&k, c(0.1, -0.2), Side::Lower, c(0.0, 0.0), c(0.3, 0.0), &opts).unwrap();
        assert_eq!(t.value.max_abs(), 0.0);
        let s = continue_s(&k, c(0.1, -0.2), Side::Lower, &opts).unwrap();
        assert_eq!(s.value, Matrix::identity(1));
        assert_eq!(half_on_shell_check(&k, c(0.1, -0.2), Side::Lower, c(0.3, 0.0), &opts).unwrap(), 0.0);
    }

    #[test]
    fn second_sheet_closed_form() {
        let k = KernelSpec::reference(1.0);
        let z = c(-0.1, -0.2);
        let opts = SolverOptions::default();
        let t = continue_t(&k, z, Side::Lower, c(0.0, 0.0), c(0.0, 0.0), &opts).unwrap();
        let exact = c(1.0, 0.0) / d_second(1.0, z);
        assert!((t.value[(0, 0)] - exact).norm() <= 1e-10 * exact.norm(), "{} vs {exact}", t.value[(0, 0)]);
        let s = continue_s(&k, z, Side::Lower, &opts).unwrap();
        let exact_s = d_phys(1.0, z) / d_second(1.0, z);
        assert!((s.value[(0, 0)] - exact_s).norm() <= 1e-10 * exact_s.norm());
        assert!(s.product_residual.unwrap() <= 1e-10);
    }

    #[test]
    fn routes_agree() {
        let k = KernelSpec::reference(1.0);
        let opts = SolverOptions::default();
        for z in [c(-0.1, -0.2), c(0.5, -0.05), c(-0.7, -0.3)] {
            let f = continue_t(&k, z, Side::Lower, c(0.2, 0.1), c(-0.3, 0.0), &opts).unwrap();
            let d = continue_t_direct(&k, z, Side::Lower, c(0.2, 0.1), c(-0.3, 0.0), &opts).unwrap();
            let rel = (&f.value - &d.value).max_abs() / f.value.max_abs();
            assert!(rel <= 1e-7, "{z}: {rel:e}");
            assert_eq!(d.route, Route::DirectContour);
        }
    }

    #[test]
    fn half_on_shell_identity() {
        let k = KernelSpec::reference(1.0);
        let r = half_on_shell_check(&k, c(-0.1, -0.2), Side::Lower, c(0.3, 0.0), &SolverOptions::default()).unwrap();
        assert!(r <= 1e-10, "{r:e}");
    }

    #[test]
    fn wrong_half_plane_is_rejected() {
        let k = KernelSpec::reference(1.0);
        let r = continue_t(&k, c(0.1, 0.2), Side::Lower, c(0.0, 0.0), c(0.0, 0.0), &SolverOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn refuses_at_a_resonance() {
        // weaker coupling has a resonance at 0.854934 - 0.066804i
        let k = KernelSpec::reference(0.5);
        let z0 = crate::numerics::newton_refine(
            |z| Ok(d_second(0.5, z)),
            c(0.855, -0.0668),
            crate::numerics::NewtonOptions::new(1e-14, 50),
        )
        .unwrap()
        .z;
        let r = continue_s(&k, z0, Side::Lower, &SolverOptions::default());
        assert!(matches!(r, Err(Error::AtResonance { .. })), "{r:?}");
    }

    #[test]
    fn scalar_residue_has_rank_one() {
        let g = 0.5;
        let k = KernelSpec::reference(g);
        let z0 = crate::numerics::newton_refine(
            |z| Ok(d_second(g, z)),
            c(0.855, -0.0668),
            crate::numerics::NewtonOptions::new(1e-14, 50),
        )
        .unwrap()
        .z;
        let opts = SolverOptions::default();
        let est = residue_rank(&k, z0, Side::Lower, 0.03, &opts).unwrap();
        assert_eq!(est.rank, 1);
        assert!(est.gap >= 1e4);
        // closed form g v(λ) v(μ) / D_II'(z0)
        let h = 1e-6;
        let dprime = (d_second(g, z0 + h) - d_second(g, z0 - h)) / (2.0 * h);
        let probes = [0.2, 0.4, 0.6, 0.8].map(|t| c(-1.0 + 2.0 * t, 0.0));
        for (i, &l) in probes.iter().enumerate() {
            for (j, &m) in probes.iter().enumerate() {
                let exact = v(l) * v(m) * g / dprime;
                assert!((est.matrix[(i, j)] - exact).norm() <= 1e-6, "{i},{j}");
            }
        }
    }
}

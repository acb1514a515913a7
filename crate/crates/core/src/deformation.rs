//! The contour-deformed Hamiltonian `H_γ = H_{0,γ} + V_γ`.
//!
//! On a contour quadrature `(ν_j, w_j)` the operator
//! `(H_γ f)(λ) = λ f(λ) + ∫_γ V(λ, μ) f(μ) dμ` becomes the dense, generally
//! non-Hermitian matrix `diag(ν) ⊗ I + [V(ν_i, ν_j) w_j]`. Its spectrum has
//! a string of eigenvalues hugging `γ` (the discretized continuous
//! spectrum), real isolated eigenvalues (bound states) and isolated
//! eigenvalues inside `Ω_γ` (resonances uncovered by the deformation).

use num_complex::Complex64;

use crate::contours::{Contour, RegionSide};
use crate::kernels::KernelSpec;
use crate::numerics::{eigenvalues, Lu, Matrix};
use crate::resonances::{match_points, MatchReport};
use crate::{Error, Result};

/// Eigenvalues with `|Im| ≤` this and outside `Ω_γ` count as real.
pub const REAL_AXIS_TOL: f64 = 1e-6;

/// `τ = TAU_FACTOR · (arc length) / (node count)`.
pub const TAU_FACTOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpectralClass {
    /// Within `τ` of `γ`: part of the discretized continuous spectrum.
    NearContour,
    /// Isolated, strictly inside `Ω_γ`: a deformation resonance.
    IsolatedInRegion,
    /// Isolated, outside `Ω_γ` and on the real axis: a bound state.
    IsolatedReal,
    /// Isolated but neither of the above.
    Stray,
}

impl SpectralClass {
    pub fn label(self) -> &'static str {
        match self {
            SpectralClass::NearContour => "near_contour",
            SpectralClass::IsolatedInRegion => "isolated_in_region",
            SpectralClass::IsolatedReal => "isolated_real",
            SpectralClass::Stray => "stray",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifiedEigenvalue {
    pub value: Complex64,
    pub class: SpectralClass,
    pub contour_distance: f64,
}

/// Classified spectrum of `H_γ` on one contour.
#[derive(Debug, Clone)]
pub struct DeformedSpectrum {
    contour: Contour,
    eigenvalues: Vec<ClassifiedEigenvalue>,
    tau: f64,
}

impl DeformedSpectrum {
    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn eigenvalues(&self) -> &[ClassifiedEigenvalue] {
        &self.eigenvalues
    }

    pub fn node_count(&self) -> usize {
        self.contour.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn of_class(&self, class: SpectralClass) -> Vec<Complex64> {
        self.eigenvalues.iter().filter(|e| e.class == class).map(|e| e.value).collect()
    }

    /// Deformation resonances.
    pub fn resonances(&self) -> Vec<Complex64> {
        self.of_class(SpectralClass::IsolatedInRegion)
    }

    /// Real parts of the isolated real eigenvalues.
    pub fn bound_states(&self) -> Vec<f64> {
        self.of_class(SpectralClass::IsolatedReal).iter().map(|z| z.re).collect()
    }
}

/// `diag(ν) ⊗ I_n + [V(ν_i, ν_j) w_j]`, of size `N·n`.
pub fn build_h_gamma(kernel: &KernelSpec, contour: &Contour) -> Result<Matrix> {
    if contour.endpoints() != kernel.interval() {
        return Err(Error::InvalidContour(format!(
            "contour runs between {:?}, kernel interval is {:?}",
            contour.endpoints(),
            kernel.interval()
        )));
    }
    let n = kernel.dim();
    let nodes = contour.nodes();
    let weights = contour.weights();
    let mut h = kernel.eval_block(nodes, nodes)?;
    let size = h.rows();
    for r in 0..size {
        let row = h.row_mut(r);
        for (c, v) in row.iter_mut().enumerate() {
            *v *= weights[c / n];
        }
        row[r] += nodes[r / n];
    }
    Ok(h)
}

/// The classification threshold `τ` for a contour.
pub fn classification_tau(contour: &Contour) -> f64 {
    TAU_FACTOR * contour.arc_length() / contour.len() as f64
}

fn classify(contour: &Contour, z: Complex64, tau: f64) -> Result<ClassifiedEigenvalue> {
    let d = contour.distance_to(z);
    let class = if d <= tau {
        SpectralClass::NearContour
    } else {
        match contour.region_side(z)? {
            RegionSide::Inside => SpectralClass::IsolatedInRegion,
            _ if z.im.abs() <= REAL_AXIS_TOL => SpectralClass::IsolatedReal,
            _ => SpectralClass::Stray,
        }
    };
    Ok(ClassifiedEigenvalue {
        value: z,
        class,
        contour_distance: d,
    })
}

/// Eigenvalues of `H_γ`, classified against `γ` and `Ω_γ`.
///
/// The contour must dip off the real axis; otherwise `Ω_γ` is empty and the
/// classification is meaningless.
pub fn deformed_spectrum(kernel: &KernelSpec, contour: &Contour) -> Result<DeformedSpectrum> {
    if contour.halfplane().is_none() {
        return Err(Error::InvalidContour(
            "the deformed spectrum needs a contour that leaves the real axis".into(),
        ));
    }
    let h = build_h_gamma(kernel, contour)?;
    let tau = classification_tau(contour);
    let eigenvalues = eigenvalues(&h)?
        .into_iter()
        .map(|z| classify(contour, z, tau))
        .collect::<Result<Vec<_>>>()?;
    Ok(DeformedSpectrum {
        contour: contour.clone(),
        eigenvalues,
        tau,
    })
}

/// Comparison of two deformed spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    /// Resonances lying inside both `Ω_γ` regions.
    pub shared: MatchReport,
    pub real: MatchReport,
    /// Resonances of the first contour outside the second region.
    pub only_first: Vec<Complex64>,
    /// Resonances of the second contour outside the first region.
    pub only_second: Vec<Complex64>,
}

impl IndependenceReport {
    pub fn max_distance(&self) -> f64 {
        self.shared.max_distance.max(self.real.max_distance)
    }

    pub fn complete(&self) -> bool {
        self.shared.complete() && self.real.complete()
    }
}

fn split_by_region(points: &[Complex64], other: &Contour) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for &z in points {
        match other.region_side(z)? {
            RegionSide::Outside => outside.push(z),
            // a point on the other boundary is shared in the limit
            _ => inside.push(z),
        }
    }
    Ok((inside, outside))
}

/// Pairs the isolated eigenvalues of `H_γ1` and `H_γ2`: resonances common
/// to both regions and real eigenvalues; the rest are listed apart.
pub fn gamma_independence_check(kernel: &KernelSpec, first: &Contour, second: &Contour, threshold: f64) -> Result<IndependenceReport> {
    if first.halfplane() != second.halfplane() {
        return Err(Error::InvalidContour(
            "contours must dip into the same half-plane".into(),
        ));
    }
    let s1 = deformed_spectrum(kernel, first)?;
    let s2 = deformed_spectrum(kernel, second)?;
    compare_spectra(&s1, &s2, threshold)
}

/// As [`gamma_independence_check`] for spectra already computed.
pub fn compare_spectra(s1: &DeformedSpectrum, s2: &DeformedSpectrum, threshold: f64) -> Result<IndependenceReport> {
    let (first, second) = (s1.contour(), s2.contour());
    if first.halfplane() != second.halfplane() {
        return Err(Error::InvalidContour(
            "contours must dip into the same half-plane".into(),
        ));
    }
    let (shared1, only_first) = split_by_region(&s1.resonances(), second)?;
    let (shared2, only_second) = split_by_region(&s2.resonances(), first)?;
    let real = |s: &DeformedSpectrum| s.of_class(SpectralClass::IsolatedReal);
    Ok(IndependenceReport {
        shared: match_points("first", &shared1, "second", &shared2, threshold),
        real: match_points("first", &real(s1), "second", &real(s2), threshold),
        only_first,
        only_second,
    })
}

/// `T_γ(λ, μ, z) = V − V (H_γ − z)⁻¹ V` by a dense solve, as an
/// `(L·n) × (M·n)` block matrix.
pub fn transition_from_hamiltonian(
    kernel: &KernelSpec,
    contour: &Contour,
    z: Complex64,
    lambdas: &[Complex64],
    mus: &[Complex64],
) -> Result<Matrix> {
    if contour.distance_to(z) < contour.standoff() {
        return Err(Error::BoundaryAmbiguous {
            z,
            standoff: contour.standoff(),
        });
    }
    let n = kernel.dim();
    let nodes = contour.nodes();
    let weights = contour.weights();
    let mut shifted = build_h_gamma(kernel, contour)?;
    for r in 0..shifted.rows() {
        shifted[(r, r)] -= z;
    }
    let v_right = kernel.eval_block(nodes, mus)?;
    let x = Lu::factor(&shifted)?.solve(&v_right)?;
    let mut v_left = kernel.eval_block(lambdas, nodes)?;
    for r in 0..v_left.rows() {
        for (c, v) in v_left.row_mut(r).iter_mut().enumerate() {
            *v *= weights[c / n];
        }
    }
    let correction = v_left.matmul(&x)?;
    Ok(&kernel.eval_block(lambdas, mus)? - &correction)
}

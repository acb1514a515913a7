//! Resonances on `Π_ℓ`: physical-sheet points `z ∈ C^ℓ` where `S_ℓ(z)` has
//! a zero eigenvalue.
//!
//! [`find_resonances`] boxes the zeros of `det S_ℓ(z)` by the argument
//! principle and refines them by Newton's method. [`separable_oracle`] does
//! the same on the closed-form finite-rank denominator, with no quadrature.
//! [`match_points`] pairs the findings of different detectors.

mod oracle;
mod search;

use num_complex::Complex64;

pub use oracle::SeparableDenominator;
pub use search::{find_zeros, FoundZero, SearchConfig, SearchOutcome};

use crate::kernels::KernelSpec;
use crate::numerics::{svd, Lu, Matrix, Rect};
use crate::physical::{converged_nodes, physical_system, safeguarded_newton, smatrix_from, SolverOptions};
use crate::{Error, Result, Sheet, Side};

/// Radius of the disks around `a` and `b` excluded from every sheet scan,
/// relative to `b − a`.
pub const ENDPOINT_EXCLUSION: f64 = 0.02;

/// Node-count tolerance used to fix the discretization of a search.
const SEARCH_NODE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Detector {
    SmatrixZero,
    Oracle,
    Deformation,
}

impl Detector {
    pub fn label(self) -> &'static str {
        match self {
            Detector::SmatrixZero => "smatrix_zero",
            Detector::Oracle => "oracle",
            Detector::Deformation => "deformation",
        }
    }
}

/// A located resonance with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Resonance {
    pub z: Complex64,
    pub side: Side,
    pub detector: Detector,
    pub abs_det_s: f64,
    pub newton_iters: usize,
    pub residue_rank: Option<usize>,
    pub multiplicity: u32,
    pub box_history: Vec<Rect>,
}

/// Search rectangle in `Ω ∩ C^ℓ` with its initial subdivision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRegion {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
}

impl SearchRegion {
    pub fn new(rect: Rect) -> Self {
        SearchRegion { rect, nx: 4, ny: 2 }
    }

    pub fn with_grid(mut self, nx: usize, ny: usize) -> Self {
        self.nx = nx.max(1);
        self.ny = ny.max(1);
        self
    }

    /// Radius of the endpoint disks for this kernel.
    pub fn exclusion_radius(kernel: &KernelSpec) -> f64 {
        let (a, b) = kernel.interval();
        ENDPOINT_EXCLUSION * (b - a)
    }

    pub fn validate(&self, kernel: &KernelSpec, side: Side) -> Result<()> {
        let r = &self.rect;
        match side {
            Side::Lower if r.im_max >= 0.0 => {
                return Err(Error::InvalidArgument(format!(
                    "region.im_max = {} must be negative on sheet pi-1",
                    r.im_max
                )))
            }
            Side::Upper if r.im_min <= 0.0 => {
                return Err(Error::InvalidArgument(format!(
                    "region.im_min = {} must be positive on sheet pi+1",
                    r.im_min
                )))
            }
            _ => {}
        }
        let omega = kernel.region();
        if r.re_min < omega.re_min || r.re_max > omega.re_max || r.im_min.abs().max(r.im_max.abs()) >= omega.im_halfwidth {
            return Err(Error::InvalidArgument(format!(
                "region [{}, {}] x [{}, {}] leaves the holomorphy region",
                r.re_min, r.re_max, r.im_min, r.im_max
            )));
        }
        let (a, b) = kernel.interval();
        let radius = Self::exclusion_radius(kernel);
        for e in [a, b] {
            if r.distance(Complex64::new(e, 0.0)) <= radius {
                return Err(Error::InvalidArgument(format!(
                    "region touches the excluded disk of radius {radius} around the endpoint {e}"
                )));
            }
        }
        Ok(())
    }
}

/// Output of one detector run over a region.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSearch {
    pub detector: Detector,
    pub side: Side,
    pub resonances: Vec<Resonance>,
    /// Winding number of the search function over the region boundary.
    pub total_winding: i64,
    /// Rectangle actually searched (edges may have been nudged).
    pub region: Rect,
    /// Quadrature nodes per contour; zero for the oracle.
    pub nodes: usize,
    pub exclusion_radius: f64,
    pub boxes_examined: usize,
}

fn det_small(m: &Matrix) -> Result<Complex64> {
    match Lu::factor(m) {
        Ok(lu) => Ok(lu.det()),
        Err(Error::SingularMatrix { .. }) => Ok(Complex64::new(0.0, 0.0)),
        Err(e) => Err(e),
    }
}

/// `det S_ℓ(z)` at a fixed node count.
pub fn smatrix_det(kernel: &KernelSpec, z: Complex64, side: Side, opts: &SolverOptions, nodes: usize) -> Result<Complex64> {
    let system = physical_system(kernel, z, side, opts, nodes)?;
    det_small(&smatrix_from(&system, side)?)
}

/// Node count at which `S_ℓ` has converged over the whole region.
pub fn search_nodes(kernel: &KernelSpec, side: Side, rect: &Rect, opts: &SolverOptions) -> Result<usize> {
    let mut probes = rect.corners().to_vec();
    probes.push(rect.center());
    let mut nodes = opts.nodes;
    for z in probes {
        nodes = nodes.max(converged_nodes(kernel, z, side, opts, SEARCH_NODE_TOL)?);
    }
    Ok(nodes)
}

fn empty_search(detector: Detector, side: Side, kernel: &KernelSpec, region: &SearchRegion) -> ResonanceSearch {
    ResonanceSearch {
        detector,
        side,
        resonances: Vec::new(),
        total_winding: 0,
        region: region.rect,
        nodes: 0,
        exclusion_radius: SearchRegion::exclusion_radius(kernel),
        boxes_examined: 0,
    }
}

fn config_for(region: &SearchRegion, newton_tol: f64) -> SearchConfig {
    SearchConfig {
        nx: region.nx,
        ny: region.ny,
        newton_tol,
        ..SearchConfig::default()
    }
}

/// All zeros of `det S_ℓ` in the region, refined to `|det S| ≤ 1e−10`.
pub fn find_resonances(kernel: &KernelSpec, side: Side, region: &SearchRegion, opts: &SolverOptions) -> Result<ResonanceSearch> {
    region.validate(kernel, side)?;
    if kernel.is_zero() {
        return Ok(empty_search(Detector::SmatrixZero, side, kernel, region));
    }
    let nodes = search_nodes(kernel, side, &region.rect, opts)?;
    let f = |z: Complex64| smatrix_det(kernel, z, side, opts, nodes);
    let out = find_zeros(f, &region.rect, &config_for(region, 1e-10))?;
    let resonances = out
        .zeros
        .iter()
        .map(|zero| {
            Ok(Resonance {
                z: zero.z,
                side,
                detector: Detector::SmatrixZero,
                abs_det_s: smatrix_det(kernel, zero.z, side, opts, nodes)?.norm(),
                newton_iters: zero.iterations,
                residue_rank: None,
                multiplicity: zero.multiplicity,
                box_history: zero.box_history.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResonanceSearch {
        detector: Detector::SmatrixZero,
        side,
        resonances,
        total_winding: out.total_winding,
        region: out.region,
        nodes,
        exclusion_radius: SearchRegion::exclusion_radius(kernel),
        boxes_examined: out.boxes_examined,
    })
}

/// Zeros of the closed-form continued denominator `det M^ℓ(z)` in the region.
pub fn separable_oracle(kernel: &KernelSpec, side: Side, region: &SearchRegion) -> Result<ResonanceSearch> {
    let den = SeparableDenominator::new(kernel)?;
    region.validate(kernel, side)?;
    if kernel.is_zero() {
        return Ok(empty_search(Detector::Oracle, side, kernel, region));
    }
    let f = |z: Complex64| den.det(z, Sheet::Unphysical(side));
    let out = find_zeros(f, &region.rect, &config_for(region, 1e-13))?;
    let resonances = out
        .zeros
        .iter()
        .map(|zero| {
            Ok(Resonance {
                z: zero.z,
                side,
                detector: Detector::Oracle,
                abs_det_s: den.smatrix_det(zero.z, side)?.norm(),
                newton_iters: zero.iterations,
                residue_rank: None,
                multiplicity: zero.multiplicity,
                box_history: zero.box_history.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResonanceSearch {
        detector: Detector::Oracle,
        side,
        resonances,
        total_winding: out.total_winding,
        region: out.region,
        nodes: 0,
        exclusion_radius: SearchRegion::exclusion_radius(kernel),
        boxes_examined: out.boxes_examined,
    })
}

/// Real zeros of the closed-form physical denominator in the brackets.
pub fn separable_bound_states(kernel: &KernelSpec, brackets: &[(f64, f64)]) -> Result<Vec<f64>> {
    let den = SeparableDenominator::new(kernel)?;
    let (a, b) = kernel.interval();
    let det = |x: f64| -> Result<f64> { Ok(den.det(Complex64::new(x, 0.0), Sheet::Physical)?.re) };
    let mut roots = Vec::new();
    for &(lo, hi) in brackets {
        if !(lo < hi) || (hi > a && lo < b) {
            return Err(Error::InvalidArgument(format!(
                "bracket ({lo}, {hi}) must lie outside [{a}, {b}]"
            )));
        }
        let steps = 400;
        let mut x0 = lo;
        let mut f0 = det(x0)?;
        for k in 1..=steps {
            let x1 = lo + (hi - lo) * k as f64 / steps as f64;
            let f1 = det(x1)?;
            if f0 != 0.0 && f1 != 0.0 && f0.signum() != f1.signum() {
                roots.push(safeguarded_newton(&det, x0, x1, f0)?);
            } else if f0 == 0.0 {
                roots.push(x0);
            }
            x0 = x1;
            f0 = f1;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    Ok(roots)
}

/// Direct check that `S_ℓ(z)` annihilates a vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullCheck {
    pub sigma_min: f64,
    /// `‖S_ℓ(z)·A‖ / ‖A‖` for the smallest right singular vector `A`.
    pub residual: f64,
}

pub fn null_vector_check(kernel: &KernelSpec, z: Complex64, side: Side, opts: &SolverOptions, nodes: usize) -> Result<NullCheck> {
    let system = physical_system(kernel, z, side, opts, nodes)?;
    let s = smatrix_from(&system, side)?;
    let d = svd(&s)?;
    let a = d.smallest_right_vector();
    let sa = s.matvec(&a)?;
    let norm = |v: &[Complex64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    Ok(NullCheck {
        sigma_min: *d.singular_values.last().unwrap_or(&0.0),
        residual: norm(&sa) / norm(&a),
    })
}

/// A pair of matched points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
}

/// Greedy nearest-neighbour pairing between two detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub left: String,
    pub right: String,
    pub pairs: Vec<MatchedPair>,
    pub unmatched_left: Vec<usize>,
    pub unmatched_right: Vec<usize>,
    /// Largest paired distance; zero when nothing was paired.
    pub max_distance: f64,
    pub threshold: f64,
}

impl MatchReport {
    /// Every point on both sides found a partner.
    pub fn complete(&self) -> bool {
        self.unmatched_left.is_empty() && self.unmatched_right.is_empty()
    }
}

/// Pairing threshold `1e−3 · diameter` for a region.
pub fn pairing_threshold(rect: &Rect) -> f64 {
    1e-3 * rect.diameter()
}

/// Greedily pairs the closest remaining points while within `threshold`.
pub fn match_points(left_label: &str, left: &[Complex64], right_label: &str, right: &[Complex64], threshold: f64) -> MatchReport {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(left.len() * right.len());
    for (i, l) in left.iter().enumerate() {
        for (j, r) in right.iter().enumerate() {
            candidates.push(((l - r).norm(), i, j));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_l = vec![false; left.len()];
    let mut used_r = vec![false; right.len()];
    let mut pairs = Vec::new();
    for (d, i, j) in candidates {
        if d > threshold {
            break;
        }
        if !used_l[i] && !used_r[j] {
            used_l[i] = true;
            used_r[j] = true;
            pairs.push(MatchedPair {
                left: i,
                right: j,
                distance: d,
            });
        }
    }
    pairs.sort_by_key(|p| p.left);
    let max_distance = pairs.iter().map(|p| p.distance).fold(0.0, f64::max);
    MatchReport {
        left: left_label.to_string(),
        right: right_label.to_string(),
        pairs,
        unmatched_left: (0..left.len()).filter(|&i| !used_l[i]).collect(),
        unmatched_right: (0..right.len()).filter(|&j| !used_r[j]).collect(),
        max_distance,
        threshold,
    }
}

/// Pairwise reports between every two detector lists, in input order.
pub fn resonance_report(lists: &[(Detector, Vec<Complex64>)], threshold: f64) -> Vec<MatchReport> {
    let mut out = Vec::new();
    for i in 0..lists.len() {
        for j in i + 1..lists.len() {
            out.push(match_points(
                lists[i].0.label(),
                &lists[i].1,
                lists[j].0.label(),
                &lists[j].1,
                threshold,
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec_region() -> SearchRegion {
        SearchRegion::new(Rect::new(-0.9, 0.9, -0.45, -0.02).unwrap())
    }

    #[test]
    fn identical_lists_match_at_zero_distance() {
        let pts = [c(0.1, -0.2), c(0.5, -0.3)];
        let rep = match_points("x", &pts, "y", &pts, 1e-3);
        assert!(rep.complete());
        assert_eq!(rep.max_distance, 0.0);
    }

    #[test]
    fn far_points_stay_unmatched() {
        let rep = match_points("x", &[c(0.0, 0.0)], "y", &[c(0.5, 0.0)], 1e-3);
        assert_eq!(rep.unmatched_left, vec![0]);
        assert_eq!(rep.unmatched_right, vec![0]);
        assert!(rep.pairs.is_empty());
    }

    #[test]
    fn region_validation() {
        let k = KernelSpec::reference(1.0);
        assert!(spec_region().validate(&k, Side::Lower).is_ok());
        assert!(spec_region().validate(&k, Side::Upper).is_err());
        let touching = SearchRegion::new(Rect::new(0.5, 0.99, -0.2, -0.01).unwrap());
        assert!(touching.validate(&k, Side::Lower).is_err());
        let bad = SearchRegion::new(Rect::new(-0.5, 0.5, -0.2, 0.1).unwrap());
        let msg = bad.validate(&k, Side::Lower).unwrap_err().to_string();
        assert!(msg.contains("im_max"), "{msg}");
    }

    #[test]
    fn zero_kernel_has_no_resonances() {
        let k = KernelSpec::reference(0.0);
        let out = find_resonances(&k, Side::Lower, &spec_region(), &SolverOptions::default()).unwrap();
        assert!(out.resonances.is_empty());
        let oracle = separable_oracle(&k, Side::Lower, &spec_region()).unwrap();
        assert!(oracle.resonances.is_empty());
    }

    #[test]
    fn oracle_bound_state() {
        let roots = separable_bound_states(&KernelSpec::reference(-1.0), &[(-3.0, -1.01)]).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] + 1.207_408_857_542_286_5).abs() <= 1e-12);
    }

    #[test]
    fn weak_coupling_resonance_matches_oracle() {
        let k = KernelSpec::reference(0.5);
        let region = SearchRegion::new(Rect::new(-0.9, 0.95, -0.45, -0.02).unwrap());
        let oracle = separable_oracle(&k, Side::Lower, &region).unwrap();
        assert_eq!(oracle.resonances.len(), 1);
        assert!((oracle.resonances[0].z - c(0.854934, -0.066804)).norm() < 1e-6);
        let found = find_resonances(&k, Side::Lower, &region, &SolverOptions::default()).unwrap();
        assert_eq!(found.resonances.len() as i64, found.total_winding);
        let rep = match_points(
            "oracle",
            &[oracle.resonances[0].z],
            "smatrix",
            &found.resonances.iter().map(|r| r.z).collect::<Vec<_>>(),
            pairing_threshold(&region.rect),
        );
        assert!(rep.complete());
        assert!(rep.max_distance <= 1e-8, "{:e}", rep.max_distance);
        let z = found.resonances[0].z;
        let check = null_vector_check(&k, z, Side::Lower, &SolverOptions::default(), found.nodes).unwrap();
        assert!(check.sigma_min <= 1e-9 && check.residual <= 1e-8);
    }
}

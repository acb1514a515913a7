//! Jordan contours `γ ⊂ Ω` from `a` to `b` and the region `Ω_γ` they cut off.
//!
//! A contour is the real segment, a half-ellipse dipping into one half-plane,
//! or a polyline through anchors on one side of the axis. Each smooth piece
//! carries its own Gauss-Legendre rule, so corners do not spoil spectral
//! accuracy.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::kernels::HolomorphyRegion;
use crate::numerics::{gauss_legendre, Arc, LineArc, Quadrature};
use crate::{Error, Result, Side};

/// Relative boundary standoff: points closer than `STANDOFF · (b − a)` to the
/// contour or the segment are rejected downstream.
pub const STANDOFF: f64 = 1e-3;

/// Samples per smooth piece in the polygonal model used for distances and
/// winding numbers.
const POLYGON_SAMPLES: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub enum ContourKind {
    RealSegment,
    /// Half-ellipse `ν(t) = c − r cos πt + i·s·d sin πt`.
    EllipticDip { depth: f64, sign: Side },
    /// Straight pieces through `anchors`, which start at `a` and end at `b`.
    Polyline { anchors: Vec<Complex64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourSpec {
    pub kind: ContourKind,
    pub nodes_per_segment: usize,
}

impl ContourSpec {
    pub fn real_segment(nodes: usize) -> Self {
        ContourSpec {
            kind: ContourKind::RealSegment,
            nodes_per_segment: nodes,
        }
    }

    pub fn elliptic_dip(depth: f64, sign: Side, nodes: usize) -> Self {
        ContourSpec {
            kind: ContourKind::EllipticDip { depth, sign },
            nodes_per_segment: nodes,
        }
    }

    pub fn polyline(anchors: Vec<Complex64>, nodes_per_segment: usize) -> Self {
        ContourSpec {
            kind: ContourKind::Polyline { anchors },
            nodes_per_segment,
        }
    }

    /// Same shape with a different node count.
    pub fn with_nodes(&self, nodes_per_segment: usize) -> Self {
        ContourSpec {
            kind: self.kind.clone(),
            nodes_per_segment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HalfEllipse {
    center: f64,
    radius: f64,
    signed_depth: f64,
}

impl Arc for HalfEllipse {
    fn point(&self, t: f64) -> Complex64 {
        let th = PI * t;
        Complex64::new(self.center - self.radius * th.cos(), self.signed_depth * th.sin())
    }

    fn tangent(&self, t: f64) -> Complex64 {
        let th = PI * t;
        Complex64::new(self.radius * PI * th.sin(), self.signed_depth * PI * th.cos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    Line(LineArc),
    Ellipse(HalfEllipse),
}

impl Piece {
    fn arc(&self) -> &dyn Arc {
        match self {
            Piece::Line(l) => l,
            Piece::Ellipse(e) => e,
        }
    }
}

/// Where a point sits relative to `Ω_γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionSide {
    Inside,
    Outside,
    /// Within the standoff of `γ` or `[a, b]`.
    Boundary,
}

/// A discretized contour.
#[derive(Debug, Clone)]
pub struct Contour {
    spec: ContourSpec,
    a: f64,
    b: f64,
    region: HolomorphyRegion,
    quadrature: Quadrature,
    halfplane: Option<Side>,
    pieces: Vec<Piece>,
    /// Dense samples of `γ` from `a` to `b`.
    polygon: Vec<Complex64>,
}

/// Builds the contour described by `spec` between `a` and `b` inside `region`.
pub fn build_contour(spec: &ContourSpec, a: f64, b: f64, region: &HolomorphyRegion) -> Result<Contour> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::InvalidContour(format!("endpoints ({a}, {b}) need a < b")));
    }
    if spec.nodes_per_segment == 0 {
        return Err(Error::InvalidContour("nodes_per_segment must be >= 1".into()));
    }
    let (pieces, halfplane) = match &spec.kind {
        ContourKind::RealSegment => (
            vec![Piece::Line(LineArc {
                from: Complex64::new(a, 0.0),
                to: Complex64::new(b, 0.0),
            })],
            None,
        ),
        ContourKind::EllipticDip { depth, sign } => {
            if !(depth.is_finite() && *depth > 0.0) {
                return Err(Error::InvalidContour(format!("dip depth {depth} must be positive")));
            }
            if *depth >= region.im_halfwidth {
                return Err(Error::OutOfDomain {
                    argument: "depth",
                    value: Complex64::new(0.0, depth * sign.ell()),
                });
            }
            (
                vec![Piece::Ellipse(HalfEllipse {
                    center: 0.5 * (a + b),
                    radius: 0.5 * (b - a),
                    signed_depth: depth * sign.ell(),
                })],
                Some(*sign),
            )
        }
        ContourKind::Polyline { anchors } => polyline_pieces(anchors, a, b, region)?,
    };
    let mut parts = Vec::with_capacity(pieces.len());
    for p in &pieces {
        parts.push(gauss_legendre(spec.nodes_per_segment, p.arc())?);
    }
    let quadrature = Quadrature::concat(parts);
    for &node in &quadrature.nodes {
        let inside = node.re > region.re_min
            && node.re < region.re_max
            && node.im.abs() < region.im_halfwidth;
        if !inside {
            return Err(Error::OutOfDomain {
                argument: "node",
                value: node,
            });
        }
    }
    let mut polygon = vec![Complex64::new(a, 0.0)];
    for p in &pieces {
        let samples = match p {
            Piece::Line(_) => 1,
            Piece::Ellipse(_) => POLYGON_SAMPLES,
        };
        for k in 1..=samples {
            polygon.push(p.arc().point(k as f64 / samples as f64));
        }
    }
    let last = polygon.len() - 1;
    polygon[last] = Complex64::new(b, 0.0);
    Ok(Contour {
        spec: spec.clone(),
        a,
        b,
        region: *region,
        quadrature,
        halfplane,
        pieces,
        polygon,
    })
}

fn polyline_pieces(
    anchors: &[Complex64],
    a: f64,
    b: f64,
    region: &HolomorphyRegion,
) -> Result<(Vec<Piece>, Option<Side>)> {
    if anchors.len() < 3 {
        return Err(Error::InvalidContour(
            "polyline needs at least one anchor between a and b".into(),
        ));
    }
    let tol = 1e-12 * (b - a);
    let first = anchors[0];
    let last = anchors[anchors.len() - 1];
    if (first - a).norm() > tol || (last - b).norm() > tol {
        return Err(Error::InvalidContour(format!(
            "polyline must run from {a} to {b}, got {first} .. {last}"
        )));
    }
    let interior = &anchors[1..anchors.len() - 1];
    for &p in interior {
        if !region.contains(p) || p.im.abs() >= region.im_halfwidth {
            return Err(Error::OutOfDomain {
                argument: "anchor",
                value: p,
            });
        }
    }
    let side = if interior.iter().all(|p| p.im < 0.0) {
        Side::Lower
    } else if interior.iter().all(|p| p.im > 0.0) {
        Side::Upper
    } else {
        return Err(Error::InvalidContour(
            "interior polyline anchors must lie strictly in one half-plane".into(),
        ));
    };
    let mut pts: Vec<Complex64> = Vec::with_capacity(anchors.len());
    pts.push(Complex64::new(a, 0.0));
    pts.extend_from_slice(interior);
    pts.push(Complex64::new(b, 0.0));
    let segs: Vec<(Complex64, Complex64)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
    for (i, s) in segs.iter().enumerate() {
        if (s.1 - s.0).norm() <= tol {
            return Err(Error::InvalidContour(format!("polyline segment {i} has zero length")));
        }
    }
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            let crossing = if j == i + 1 {
                // adjacent pieces share one vertex; reject folding back
                let d1 = segs[i].1 - segs[i].0;
                let d2 = segs[j].1 - segs[j].0;
                let cross = d1.re * d2.im - d1.im * d2.re;
                let dot = d1.re * d2.re + d1.im * d2.im;
                cross.abs() <= 1e-14 * d1.norm() * d2.norm() && dot < 0.0
            } else {
                segments_intersect(segs[i], segs[j])
            };
            if crossing {
                return Err(Error::InvalidContour(format!(
                    "polyline segments {i} and {j} intersect"
                )));
            }
        }
    }
    let pieces = segs
        .into_iter()
        .map(|(from, to)| Piece::Line(LineArc { from, to }))
        .collect();
    Ok((pieces, Some(side)))
}

fn orient(p: Complex64, q: Complex64, r: Complex64) -> f64 {
    (q.re - p.re) * (r.im - p.im) - (q.im - p.im) * (r.re - p.re)
}

fn on_segment(p: Complex64, q: Complex64, r: Complex64) -> bool {
    r.re >= p.re.min(q.re) && r.re <= p.re.max(q.re) && r.im >= p.im.min(q.im) && r.im <= p.im.max(q.im)
}

fn segments_intersect(s: (Complex64, Complex64), t: (Complex64, Complex64)) -> bool {
    let (p1, p2) = s;
    let (q1, q2) = t;
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn segment_distance(z: Complex64, p: Complex64, q: Complex64) -> f64 {
    let d = q - p;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - p).norm();
    }
    let t = (((z - p) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (p + d * t)).norm()
}

impl Contour {
    pub fn spec(&self) -> &ContourSpec {
        &self.spec
    }

    pub fn endpoints(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.quadrature.nodes
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.quadrature.weights
    }

    pub fn len(&self) -> usize {
        self.quadrature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quadrature.is_empty()
    }

    /// Half-plane of the interior arcs; `None` for the real segment.
    pub fn halfplane(&self) -> Option<Side> {
        self.halfplane
    }

    pub fn segment_count(&self) -> usize {
        self.pieces.len()
    }

    /// Absolute standoff `STANDOFF · (b − a)`.
    pub fn standoff(&self) -> f64 {
        STANDOFF * (self.b - self.a)
    }

    /// Same contour with a different node count per piece.
    pub fn refined(&self, nodes_per_segment: usize) -> Result<Contour> {
        build_contour(&self.spec.with_nodes(nodes_per_segment), self.a, self.b, &self.region)
    }

    pub fn arc_length(&self) -> f64 {
        self.polygon.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Distance from `z` to `γ`.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.polygon
            .windows(2)
            .map(|w| segment_distance(z, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `z` to `γ ∪ [a, b]`.
    pub fn distance_to_boundary(&self, z: Complex64) -> f64 {
        let seg = segment_distance(z, Complex64::new(self.a, 0.0), Complex64::new(self.b, 0.0));
        self.distance_to(z).min(seg)
    }

    /// Position of `z` relative to the closed region between `[a, b]` and `γ`.
    pub fn region_side(&self, z: Complex64) -> Result<RegionSide> {
        if self.halfplane.is_none() {
            return Err(Error::InvalidContour(
                "the real segment bounds no region".into(),
            ));
        }
        if self.distance_to_boundary(z) < self.standoff() {
            return Ok(RegionSide::Boundary);
        }
        Ok(if self.loop_winding(z) != 0 {
            RegionSide::Inside
        } else {
            RegionSide::Outside
        })
    }

    /// Whether `z` lies in `Ω_γ`; points within the standoff are ambiguous.
    pub fn omega_gamma_contains(&self, z: Complex64) -> Result<bool> {
        match self.region_side(z)? {
            RegionSide::Inside => Ok(true),
            RegionSide::Outside => Ok(false),
            RegionSide::Boundary => Err(Error::BoundaryAmbiguous {
                z,
                standoff: self.standoff(),
            }),
        }
    }

    /// Winding of the loop `[a, b]` followed by `γ` reversed around `z`.
    fn loop_winding(&self, z: Complex64) -> i64 {
        // polygon runs a -> b along γ; reversing it and closing with [a, b]
        // is the same loop as [b -> a along the axis] + γ, up to orientation.
        let mut total = 0.0;
        let mut prev = self.polygon[0] - z;
        for &p in self.polygon.iter().skip(1) {
            let cur = p - z;
            total += (cur / prev).arg();
            prev = cur;
        }
        let start = self.polygon[0] - z;
        total += (start / prev).arg();
        (total / (2.0 * PI)).round() as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn region() -> HolomorphyRegion {
        HolomorphyRegion::around(-1.0, 1.0, 0.5, 1.0).unwrap()
    }

    fn dip(d: f64, side: Side, n: usize) -> Contour {
        build_contour(&ContourSpec::elliptic_dip(d, side, n), -1.0, 1.0, &region()).unwrap()
    }

    #[test]
    fn real_segment_nodes() {
        let g = build_contour(&ContourSpec::real_segment(16), -1.0, 1.0, &region()).unwrap();
        assert_eq!(g.len(), 16);
        assert!(g.nodes().iter().all(|z| z.im == 0.0 && z.re > -1.0 && z.re < 1.0));
        assert!((g.quadrature().weight_sum() - c(2.0, 0.0)).norm() <= 2e-13);
        assert!(g.halfplane().is_none());
        assert!(g.omega_gamma_contains(c(0.0, -0.2)).is_err());
    }

    #[test]
    fn elliptic_dip_geometry() {
        let g = dip(0.4, Side::Lower, 64);
        assert!(g.nodes().iter().all(|z| z.im < 0.0));
        let min_im = g.nodes().iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
        assert!((min_im + 0.4).abs() < 1e-3);
        assert!((g.quadrature().weight_sum() - c(2.0, 0.0)).norm() <= 2e-13);
        assert_eq!(g.halfplane(), Some(Side::Lower));
    }

    #[test]
    fn polyline_three_segments() {
        let anchors = vec![c(-1.0, 0.0), c(-0.5, -0.3), c(0.5, -0.3), c(1.0, 0.0)];
        let g = build_contour(&ContourSpec::polyline(anchors, 12), -1.0, 1.0, &region()).unwrap();
        assert_eq!(g.segment_count(), 3);
        assert_eq!(g.len(), 36);
        assert!((g.quadrature().weight_sum() - c(2.0, 0.0)).norm() <= 2e-13);
        assert_eq!(g.quadrature().segment.iter().max(), Some(&2));
    }

    #[test]
    fn membership_in_omega_gamma() {
        let g = dip(0.4, Side::Lower, 64);
        assert!(g.omega_gamma_contains(c(0.0, -0.2)).unwrap());
        assert!(!g.omega_gamma_contains(c(0.0, 0.2)).unwrap());
        assert!(g.omega_gamma_contains(c(0.0, -0.39)).unwrap());
        assert!(!g.omega_gamma_contains(c(0.0, -0.41)).unwrap());
        assert!(matches!(
            g.omega_gamma_contains(c(0.0, -0.4005)),
            Err(Error::BoundaryAmbiguous { .. })
        ));
        assert!(matches!(
            g.omega_gamma_contains(c(0.3, 0.0)),
            Err(Error::BoundaryAmbiguous { .. })
        ));
    }

    #[test]
    fn membership_mirrors_under_sign_flip() {
        let lower = dip(0.35, Side::Lower, 32);
        let upper = dip(0.35, Side::Upper, 32);
        for k in 0..40 {
            let z = c(-1.1 + 0.055 * k as f64, -0.02 - 0.011 * k as f64);
            match (lower.omega_gamma_contains(z), upper.omega_gamma_contains(z.conj())) {
                (Ok(x), Ok(y)) => assert_eq!(x, y, "{z}"),
                (Err(_), Err(_)) => {}
                other => panic!("asymmetric at {z}: {other:?}"),
            }
        }
    }

    #[test]
    fn cauchy_independence_of_contour() {
        let f = |cc: f64| {
            move |nu: Complex64| {
                let v = c(1.0, 0.0) - nu * nu;
                v * v * (nu * cc).exp()
            }
        };
        let contours = [
            build_contour(&ContourSpec::real_segment(32), -1.0, 1.0, &region()).unwrap(),
            dip(0.3, Side::Lower, 32),
            dip(0.6, Side::Upper, 32),
            build_contour(
                &ContourSpec::polyline(vec![c(-1.0, 0.0), c(-0.4, -0.5), c(0.7, -0.2), c(1.0, 0.0)], 24),
                -1.0,
                1.0,
                &region(),
            )
            .unwrap(),
        ];
        for cc in [0.0, 1.0] {
            let reference = contours[0].quadrature().integrate(f(cc));
            for g in &contours[1..] {
                let v = g.quadrature().integrate(f(cc));
                assert!((v - reference).norm() <= 1e-10, "c={cc}: {v} vs {reference}");
            }
        }
    }

    #[test]
    fn rejects_invalid_contours() {
        let r = region();
        assert!(matches!(
            build_contour(&ContourSpec::elliptic_dip(1.2, Side::Lower, 8), -1.0, 1.0, &r),
            Err(Error::OutOfDomain { argument: "depth", .. })
        ));
        let outside = vec![c(-1.0, 0.0), c(0.0, -1.5), c(1.0, 0.0)];
        assert!(matches!(
            build_contour(&ContourSpec::polyline(outside, 8), -1.0, 1.0, &r),
            Err(Error::OutOfDomain { argument: "anchor", .. })
        ));
        let crossing = vec![c(-1.0, 0.0), c(0.5, -0.5), c(0.5, -0.1), c(-0.5, -0.5), c(1.0, 0.0)];
        assert!(build_contour(&ContourSpec::polyline(crossing, 8), -1.0, 1.0, &r).is_err());
        let mixed = vec![c(-1.0, 0.0), c(-0.3, -0.3), c(0.3, 0.3), c(1.0, 0.0)];
        assert!(build_contour(&ContourSpec::polyline(mixed, 8), -1.0, 1.0, &r).is_err());
        let wrong_end = vec![c(-1.0, 0.0), c(0.0, -0.3), c(0.9, 0.0)];
        assert!(build_contour(&ContourSpec::polyline(wrong_end, 8), -1.0, 1.0, &r).is_err());
        assert!(build_contour(&ContourSpec::real_segment(0), -1.0, 1.0, &r).is_err());
    }

    #[test]
    fn arc_length_and_distance() {
        let seg = build_contour(&ContourSpec::real_segment(8), -1.0, 1.0, &region()).unwrap();
        assert!((seg.arc_length() - 2.0).abs() < 1e-15);
        assert!((seg.distance_to(c(0.2, 0.5)) - 0.5).abs() < 1e-15);
        let g = dip(0.4, Side::Lower, 8);
        // perimeter of half an ellipse with semi-axes 1 and 0.4
        assert!((g.arc_length() - 2.3017).abs() < 1e-3);
        assert!((g.distance_to(c(0.0, -0.2)) - 0.2).abs() < 1e-6);
    }
}

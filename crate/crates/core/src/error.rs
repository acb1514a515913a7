use thiserror::Error;

use crate::numerics::Rect;
use crate::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate arc: non-finite parametrization at t = {t}")]
    DegenerateArc { t: f64 },

    #[error("singular matrix: zero pivot in column {pivot}")]
    SingularMatrix { pivot: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("|f| = {min_modulus:e} at {at} on the box boundary is below {threshold:e}; reposition the box")]
    RepositionBox {
        min_modulus: f64,
        threshold: f64,
        at: C64,
    },

    #[error("newton stagnated at {z}: |f'| = {derivative:e}")]
    Stagnation { z: C64, derivative: f64 },

    #[error("newton iterate {z} escaped the search region")]
    Escaped { z: C64 },

    #[error("newton did not reach |f| <= {tol:e} within {iterations} iterations (|f| = {residual:e})")]
    NewtonLimit {
        tol: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("argument {argument} = {value} lies outside the holomorphy region")]
    OutOfDomain { argument: &'static str, value: C64 },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid contour: {0}")]
    InvalidContour(String),

    #[error("point {z} is within the standoff distance {standoff:e} of the region boundary")]
    BoundaryAmbiguous { z: C64, standoff: f64 },

    #[error("spectral point: Lippmann-Schwinger system at z = {z} is singular (reciprocal condition {rcond:e})")]
    SpectralPoint { z: C64, rcond: f64 },

    #[error("z = {z} is at a resonance: S(z) has condition number {condition:e}")]
    AtResonance { z: C64, condition: f64 },

    #[error("residue circle of radius {radius:e} is contaminated (radius-halving discrepancy {discrepancy:e})")]
    ContourContaminated { radius: f64, discrepancy: f64 },

    #[error("incomplete search in box {region:?}: winding number {expected}, refined {found}")]
    IncompleteSearch {
        region: Rect,
        expected: i64,
        found: i64,
    },

    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

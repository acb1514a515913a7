//! Friedrichs-Faddeev scattering model with analytic kernels.
//!
//! The crate solves the Lippmann-Schwinger equation for the transition
//! kernel `T(λ, μ, z)` by Nyström discretization on the real interval or on
//! deformed contours, continues `T` and the scattering matrix onto the
//! unphysical sheets `Π₊₁`/`Π₋₁` using physical-sheet quantities only, and
//! locates resonances two ways: zeros of `det S_ℓ(z)` on the physical sheet
//! and isolated eigenvalues of the contour-deformed Hamiltonian `H_γ`.
//!
//! Module map:
//!
//! * [`numerics`]: dense complex linear algebra, Gauss-Legendre rules, root tools.
//! * [`kernels`]: closed-form analytic kernel families and their validation.
//! * [`contours`]: Jordan contours from `a` to `b`, quadrature and `Ω_γ` membership.
//! * [`physical`]: physical-sheet `T`, `S_ℓ`, resolvent and Fredholm determinant.
//! * [`unphysical`]: continuation of `T` and `S` to `Π_ℓ`.
//! * [`resonances`]: argument-principle search, closed-form oracle, match reports.
//! * [`deformation`]: the deformed Hamiltonian `H_γ` and its spectrum.

pub mod contours;
pub mod deformation;
pub mod error;
pub mod kernels;
pub mod numerics;
pub mod physical;
pub mod resonances;
pub mod unphysical;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Half-plane label `ℓ = ±1`: `Upper` is `ℓ = +1` (`z ∈ C⁺`), `Lower` is `ℓ = −1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn from_sign(sign: i32) -> Option<Side> {
        match sign {
            1 => Some(Side::Upper),
            -1 => Some(Side::Lower),
            _ => None,
        }
    }

    /// The numeric label `ℓ`.
    pub fn ell(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Side::Upper => 1,
            Side::Lower => -1,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Upper => Side::Lower,
            Side::Lower => Side::Upper,
        }
    }

    /// Whether `z` lies strictly in this open half-plane.
    pub fn holds(self, z: C64) -> bool {
        z.im * self.ell() > 0.0
    }
}

/// Riemann-sheet label of a complex energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sheet {
    Physical,
    /// `Π_ℓ`, reached by continuing through the cut from `C^{−ℓ}`.
    Unphysical(Side),
}

impl Sheet {
    pub fn label(self) -> &'static str {
        match self {
            Sheet::Physical => "physical",
            Sheet::Unphysical(Side::Upper) => "pi+1",
            Sheet::Unphysical(Side::Lower) => "pi-1",
        }
    }
}

/// A complex energy tagged with its sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetPoint {
    pub z: C64,
    pub sheet: Sheet,
}

impl SheetPoint {
    pub fn physical(z: C64) -> Self {
        SheetPoint {
            z,
            sheet: Sheet::Physical,
        }
    }

    /// A point of `Π_ℓ ∩ Ω_ℓ`; `z` must lie in the open half-plane of `side`.
    pub fn unphysical(z: C64, side: Side) -> Result<Self> {
        if !side.holds(z) {
            return Err(Error::InvalidArgument(format!(
                "point {z} is not in the half-plane of sheet {}",
                Sheet::Unphysical(side).label()
            )));
        }
        Ok(SheetPoint {
            z,
            sheet: Sheet::Unphysical(side),
        })
    }
}

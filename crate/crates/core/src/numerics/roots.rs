use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Rect> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite())
            && re_min < re_max
            && im_min < im_max;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "degenerate rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Rect {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn expanded(&self, margin: f64) -> Rect {
        Rect {
            re_min: self.re_min - margin,
            re_max: self.re_max + margin,
            im_min: self.im_min - margin,
            im_max: self.im_max + margin,
        }
    }

    /// Distance from `z` to the closed rectangle (0 inside).
    pub fn distance(&self, z: Complex64) -> f64 {
        let dx = (self.re_min - z.re).max(0.0).max(z.re - self.re_max);
        let dy = (self.im_min - z.im).max(0.0).max(z.im - self.im_max);
        dx.hypot(dy)
    }

    /// Splits at the given interior coordinates into a grid of sub-boxes,
    /// row-major from the bottom-left corner.
    pub fn split_at(&self, xs: &[f64], ys: &[f64]) -> Vec<Rect> {
        let mut xb = vec![self.re_min];
        xb.extend_from_slice(xs);
        xb.push(self.re_max);
        let mut yb = vec![self.im_min];
        yb.extend_from_slice(ys);
        yb.push(self.im_max);
        let mut out = Vec::new();
        for j in 0..yb.len() - 1 {
            for i in 0..xb.len() - 1 {
                out.push(Rect {
                    re_min: xb[i],
                    re_max: xb[i + 1],
                    im_min: yb[j],
                    im_max: yb[j + 1],
                });
            }
        }
        out
    }

    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

const MAX_PHASE_STEP: f64 = PI / 4.0;
const MAX_BISECTION_DEPTH: u32 = 18;

/// Winding number of `f` around the boundary of `rect`, by phase accumulation.
///
/// Each side is sampled at `samples_per_side` points; any step whose phase
/// change exceeds π/4 is bisected until it does not. Fails with
/// [`Error::RepositionBox`] when `|f|` drops below `min_modulus` anywhere on
/// the sampled boundary.
pub fn winding_number<F>(mut f: F, rect: &Rect, samples_per_side: usize, min_modulus: f64) -> Result<i64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let samples = samples_per_side.max(2);
    let corners = rect.corners();
    let mut eval = |z: Complex64| -> Result<Complex64> {
        let w = f(z)?;
        if !(w.norm() > min_modulus) {
            return Err(Error::RepositionBox {
                min_modulus: w.norm(),
                threshold: min_modulus,
                at: z,
            });
        }
        Ok(w)
    };
    let mut total = 0.0;
    let first = eval(corners[0])?;
    let mut prev = (corners[0], first);
    for side in 0..4 {
        let from = corners[side];
        let to = corners[(side + 1) % 4];
        for k in 1..=samples {
            let z = if k == samples && side == 3 {
                corners[0]
            } else {
                from + (to - from) * (k as f64 / samples as f64)
            };
            let w = if k == samples && side == 3 { first } else { eval(z)? };
            total += phase_increment(&mut eval, prev, (z, w), 0)?;
            prev = (z, w);
        }
    }
    let turns = total / (2.0 * PI);
    Ok(turns.round() as i64)
}

fn phase_increment<F>(
    eval: &mut F,
    (z0, w0): (Complex64, Complex64),
    (z1, w1): (Complex64, Complex64),
    depth: u32,
) -> Result<f64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let step = (w1 / w0).arg();
    if step.abs() <= MAX_PHASE_STEP || depth >= MAX_BISECTION_DEPTH {
        return Ok(step);
    }
    let zm = (z0 + z1) * 0.5;
    let wm = eval(zm)?;
    Ok(phase_increment(eval, (z0, w0), (zm, wm), depth + 1)?
        + phase_increment(eval, (zm, wm), (z1, w1), depth + 1)?)
}

/// Outcome of [`newton_refine`].
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResult {
    pub z: Complex64,
    pub iterations: usize,
    pub residual: f64,
    /// `|f|` after each iteration, for inspecting the convergence order.
    pub history: Vec<f64>,
}

/// Options for [`newton_refine`].
#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Iterates leaving this rectangle abort with [`Error::Escaped`].
    pub region: Option<Rect>,
    /// Root multiplicity; the step is scaled by it.
    pub multiplicity: u32,
}

impl NewtonOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        NewtonOptions {
            tol,
            max_iter,
            region: None,
            multiplicity: 1,
        }
    }

    pub fn within(mut self, region: Rect) -> Self {
        self.region = Some(region);
        self
    }
}

/// Derivative step `max(1e-6, 1e-6·|z|)`.
fn derivative_step(z: Complex64) -> f64 {
    1e-6_f64.max(1e-6 * z.norm())
}

/// Central-difference derivative of an analytic function.
pub fn central_derivative<F>(f: &mut F, z: Complex64) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let h = derivative_step(z);
    let fp = f(z + h)?;
    let fm = f(z - h)?;
    Ok((fp - fm) / (2.0 * h))
}

/// Newton iteration for a zero of an analytic `f` from `z0`.
///
/// Once `|f| ≤ tol`, up to two polishing steps are taken while they keep
/// decreasing `|f|`.
pub fn newton_refine<F>(mut f: F, z0: Complex64, opts: NewtonOptions) -> Result<NewtonResult>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut z = z0;
    let mut fz = f(z)?;
    let mut history = vec![fz.norm()];
    let mut iterations = 0;
    let mut polish = 0;
    let m = opts.multiplicity.max(1) as f64;
    while iterations < opts.max_iter {
        if fz.norm() <= opts.tol {
            if polish >= 2 {
                break;
            }
            polish += 1;
        }
        let d = central_derivative(&mut f, z)?;
        if !(d.norm() > 1e-300) {
            return Err(Error::Stagnation {
                z,
                derivative: d.norm(),
            });
        }
        let step = fz / d * m;
        let candidate = z - step;
        if let Some(region) = opts.region {
            if !region.contains(candidate) {
                return Err(Error::Escaped { z: candidate });
            }
        }
        let fc = f(candidate)?;
        iterations += 1;
        if polish > 0 && fc.norm() >= fz.norm() {
            break;
        }
        z = candidate;
        fz = fc;
        history.push(fz.norm());
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) && fz.norm() <= opts.tol {
            break;
        }
    }
    if fz.norm() > opts.tol {
        return Err(Error::NewtonLimit {
            tol: opts.tol,
            iterations,
            residual: fz.norm(),
        });
    }
    Ok(NewtonResult {
        z,
        iterations,
        residual: fz.norm(),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square(r: f64) -> Rect {
        Rect::new(-r, r, -r, r).unwrap()
    }

    #[test]
    fn winding_of_identity_and_constant() {
        assert_eq!(winding_number(|z| Ok(z), &square(1.0), 16, 1e-12).unwrap(), 1);
        assert_eq!(winding_number(|_| Ok(c(1.0, 0.0)), &square(3.0), 16, 1e-12).unwrap(), 0);
    }

    #[test]
    fn double_zero_times_nonvanishing_factor() {
        // g(z) = e^z + 3 has |e^z| <= e^0.5 < 3 on the box, so it never vanishes.
        let z0 = c(0.2, -0.1);
        let f = |z: Complex64| Ok((z - z0) * (z - z0) * (z.exp() + 3.0));
        let b = Rect::new(-0.3, 0.5, -0.5, 0.4).unwrap();
        assert_eq!(winding_number(f, &b, 8, 1e-12).unwrap(), 2);
    }

    #[test]
    fn pole_counts_negative() {
        let f = |z: Complex64| Ok(c(1.0, 0.0) / (z - c(0.1, 0.1)));
        assert_eq!(winding_number(f, &square(1.0), 16, 1e-12).unwrap(), -1);
    }

    #[test]
    fn refinement_invariance() {
        let f = |z: Complex64| Ok((z * z + 1.0) * (z - c(0.3, 0.2)));
        let b = Rect::new(-2.0, 2.0, -0.5, 1.5).unwrap();
        let coarse = winding_number(f, &b, 4, 1e-12).unwrap();
        let fine = winding_number(f, &b, 8, 1e-12).unwrap();
        assert_eq!(coarse, fine);
        assert_eq!(coarse, 2);
    }

    #[test]
    fn zero_on_boundary_requests_reposition() {
        let f = |z: Complex64| Ok(z - c(1.0, 0.0));
        let err = winding_number(f, &square(1.0), 16, 1e-8).unwrap_err();
        assert!(matches!(err, Error::RepositionBox { .. }));
    }

    #[test]
    fn newton_on_simple_examples() {
        let r = newton_refine(|z| Ok(z * z + 1.0), c(0.0, 0.9), NewtonOptions::new(1e-12, 50)).unwrap();
        assert!((r.z - c(0.0, 1.0)).norm() < 1e-12);
        let r = newton_refine(|z: Complex64| Ok(z.exp() - 1.0), c(0.1, 0.0), NewtonOptions::new(1e-12, 50))
            .unwrap();
        assert!(r.z.norm() < 1e-12);
        assert!(r.history.len() >= 3);
    }

    #[test]
    fn newton_escape_and_stagnation() {
        let opts = NewtonOptions::new(1e-12, 50).within(Rect::new(0.5, 2.0, -0.5, 0.5).unwrap());
        let err = newton_refine(|z| Ok(z * z + 1.0), c(1.0, 0.01), opts).unwrap_err();
        assert!(matches!(err, Error::Escaped { .. }));
        let err = newton_refine(|_| Ok(c(1.0, 0.0)), c(0.0, 0.0), NewtonOptions::new(1e-12, 5)).unwrap_err();
        assert!(matches!(err, Error::Stagnation { .. }));
    }

    #[test]
    fn modified_newton_for_double_root() {
        let mut opts = NewtonOptions::new(1e-20, 60);
        opts.multiplicity = 2;
        let r = newton_refine(|z| Ok((z - 0.5) * (z - 0.5)), c(0.9, 0.2), opts).unwrap();
        assert!((r.z - c(0.5, 0.0)).norm() < 1e-9);
    }
}

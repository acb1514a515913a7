//! Boxed zero search for analytic functions: argument-principle counts,
//! quadrisection and Newton refinement.

use num_complex::Complex64;

use crate::numerics::{newton_refine, winding_number, NewtonOptions, Rect};
use crate::{Error, Result};

/// Tuning of [`find_zeros`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Initial grid of boxes.
    pub nx: usize,
    pub ny: usize,
    pub samples_per_side: usize,
    /// `|f|` on a box edge below this moves the edge.
    pub edge_threshold: f64,
    /// Edge shift as a fraction of the box size.
    pub edge_shift: f64,
    /// Newton stops at `|f| ≤ newton_tol`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Boxes smaller than this fraction of the region diameter are split once
    /// more and then treated as holding one multiple zero.
    pub resolution: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            nx: 4,
            ny: 2,
            samples_per_side: 16,
            edge_threshold: 1e-8,
            edge_shift: 1e-4,
            newton_tol: 1e-10,
            newton_max_iter: 60,
            resolution: 1e-3,
        }
    }
}

/// One refined zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FoundZero {
    pub z: Complex64,
    pub multiplicity: u32,
    pub iterations: usize,
    pub residual: f64,
    /// Boxes from the initial grid down to the isolating one.
    pub box_history: Vec<Rect>,
}

/// Result of a search over one rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// The rectangle actually used (edges may have been nudged).
    pub region: Rect,
    pub total_winding: i64,
    pub zeros: Vec<FoundZero>,
    pub boxes_examined: usize,
}

struct Searcher<'a, F> {
    f: &'a mut F,
    cfg: SearchConfig,
    region: Rect,
    boxes: usize,
}

impl<F> Searcher<'_, F>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    fn winding(&mut self, rect: &Rect) -> Result<i64> {
        self.boxes += 1;
        let cfg = self.cfg;
        winding_number(&mut *self.f, rect, cfg.samples_per_side, cfg.edge_threshold)
    }

    /// Counts for a split of `rect` at interior lines `xs`, `ys`; on a small
    /// boundary value the lines are nudged and the split retried.
    fn split_counts(&mut self, rect: &Rect, xs: &[f64], ys: &[f64]) -> Result<Vec<(Rect, i64)>> {
        let mut last_err = None;
        for attempt in 0..7 {
            let shift = self.cfg.edge_shift * shift_factor(attempt);
            let xs: Vec<f64> = xs.iter().map(|x| x + shift * rect.width()).collect();
            let ys: Vec<f64> = ys.iter().map(|y| y + shift * rect.height()).collect();
            let mut out = Vec::new();
            let mut failed = false;
            for b in rect.split_at(&xs, &ys) {
                match self.winding(&b) {
                    Ok(k) => out.push((b, k)),
                    Err(e @ Error::RepositionBox { .. }) => {
                        last_err = Some(e);
                        failed = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if !failed {
                return Ok(out);
            }
        }
        Err(last_err.expect("a failed attempt records its error"))
    }

    fn refine_box(&mut self, rect: Rect, count: i64, history: Vec<Rect>, extra: u32, out: &mut Vec<FoundZero>) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        if count < 0 {
            return Err(Error::IncompleteSearch {
                region: rect,
                expected: 0,
                found: count,
            });
        }
        let tiny = rect.diameter() < self.cfg.resolution * self.region.diameter();
        if count == 1 || (tiny && extra >= 1) || extra == u32::MAX {
            let z = self.newton_in(&rect, count as u32)?;
            let mut history = history;
            history.push(rect);
            out.push(FoundZero {
                z: z.0,
                multiplicity: count as u32,
                iterations: z.1,
                residual: z.2,
                box_history: history,
            });
            return Ok(());
        }
        let c = rect.center();
        let parts = match self.split_counts(&rect, &[c.re], &[c.im]) {
            Ok(parts) => parts,
            // every split line passes within reach of the cluster: treat it as one multiple zero
            Err(Error::RepositionBox { .. }) => return self.refine_box(rect, count, history, u32::MAX, out),
            Err(e) => return Err(e),
        };
        let sum: i64 = parts.iter().map(|p| p.1).sum();
        if sum != count {
            return Err(Error::IncompleteSearch {
                region: rect,
                expected: count,
                found: sum,
            });
        }
        for (b, k) in parts {
            let mut h = history.clone();
            h.push(rect);
            let extra = if tiny { extra.saturating_add(1) } else { 0 };
            self.refine_box(b, k, h, extra, out)?;
        }
        Ok(())
    }

    fn newton_in(&mut self, rect: &Rect, multiplicity: u32) -> Result<(Complex64, usize, f64)> {
        let bound = clip(&rect.expanded(0.25 * rect.diameter()), &self.region);
        let mut opts = NewtonOptions::new(self.cfg.newton_tol, self.cfg.newton_max_iter).within(bound);
        opts.multiplicity = multiplicity;
        let c = rect.center();
        let (w, h) = (rect.width(), rect.height());
        let starts = [
            c,
            c + Complex64::new(0.25 * w, 0.25 * h),
            c + Complex64::new(-0.25 * w, -0.25 * h),
            c + Complex64::new(0.25 * w, -0.25 * h),
            c + Complex64::new(-0.25 * w, 0.25 * h),
        ];
        let mut last = None;
        for z0 in starts {
            match newton_refine(&mut *self.f, z0, opts) {
                Ok(r) if rect.expanded(1e-9 * self.region.diameter()).contains(r.z) => {
                    return Ok((r.z, r.iterations, r.residual));
                }
                Ok(r) => last = Some(Error::Escaped { z: r.z }),
                Err(e @ (Error::Escaped { .. } | Error::Stagnation { .. } | Error::NewtonLimit { .. })) => {
                    last = Some(e)
                }
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one start"))
    }
}

fn shift_factor(attempt: usize) -> f64 {
    // 0, +1, -1, +2, -2, +3, -3
    let k = attempt.div_ceil(2) as f64;
    if attempt % 2 == 1 {
        k
    } else {
        -k
    }
}

fn clip(r: &Rect, outer: &Rect) -> Rect {
    Rect {
        re_min: r.re_min.max(outer.re_min),
        re_max: r.re_max.min(outer.re_max),
        im_min: r.im_min.max(outer.im_min),
        im_max: r.im_max.min(outer.im_max),
    }
}

/// Finds every zero of the analytic `f` inside `region`.
///
/// The total winding number over the region boundary is compared with the
/// sum over the initial grid and with the multiplicities found; any
/// disagreement is an [`Error::IncompleteSearch`].
pub fn find_zeros<F>(mut f: F, region: &Rect, cfg: &SearchConfig) -> Result<SearchOutcome>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut s = Searcher {
        f: &mut f,
        cfg: *cfg,
        region: *region,
        boxes: 0,
    };
    // nudge the outer boundary outwards if it passes too close to a zero
    let mut outer = *region;
    let mut total = None;
    for attempt in 0..7 {
        let margin = cfg.edge_shift * region.diameter() * attempt as f64;
        let r = region.expanded(margin);
        match s.winding(&r) {
            Ok(k) => {
                outer = r;
                total = Some(k);
                break;
            }
            Err(Error::RepositionBox { .. }) if attempt < 6 => continue,
            Err(e) => return Err(e),
        }
    }
    let total = total.expect("loop either sets the total or returns");
    s.region = outer;
    let xs: Vec<f64> = (1..cfg.nx.max(1))
        .map(|i| outer.re_min + outer.width() * i as f64 / cfg.nx as f64)
        .collect();
    let ys: Vec<f64> = (1..cfg.ny.max(1))
        .map(|j| outer.im_min + outer.height() * j as f64 / cfg.ny as f64)
        .collect();
    let parts = s.split_counts(&outer, &xs, &ys)?;
    let sum: i64 = parts.iter().map(|p| p.1).sum();
    if sum != total {
        return Err(Error::IncompleteSearch {
            region: outer,
            expected: total,
            found: sum,
        });
    }
    let mut zeros = Vec::new();
    for (b, k) in parts {
        s.refine_box(b, k, Vec::new(), 0, &mut zeros)?;
    }
    zeros.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    let found: i64 = zeros.iter().map(|z| z.multiplicity as i64).sum();
    if found != total {
        return Err(Error::IncompleteSearch {
            region: outer,
            expected: total,
            found,
        });
    }
    Ok(SearchOutcome {
        region: outer,
        total_winding: total,
        zeros,
        boxes_examined: s.boxes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn finds_polynomial_roots() {
        let roots = [c(0.3, -0.2), c(-0.5, -0.7), c(0.71, -0.11), c(-0.2, -0.25)];
        let f = |z: Complex64| Ok(roots.iter().fold(c(1.0, 0.0), |acc, &r| acc * (z - r)) * (z * 0.3).exp());
        let region = Rect::new(-1.0, 1.0, -1.0, -0.05).unwrap();
        let out = find_zeros(f, &region, &SearchConfig::default()).unwrap();
        assert_eq!(out.total_winding, 4);
        assert_eq!(out.zeros.len(), 4);
        for r in &roots {
            assert!(out.zeros.iter().any(|z| (z.z - r).norm() < 1e-10));
        }
    }

    #[test]
    fn empty_region() {
        let out = find_zeros(|z: Complex64| Ok(z.exp()), &Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), &SearchConfig::default())
            .unwrap();
        assert!(out.zeros.is_empty());
        assert_eq!(out.total_winding, 0);
    }

    #[test]
    fn zero_on_a_grid_line_is_handled() {
        // zero sits exactly on the initial vertical split line x = 0
        let f = |z: Complex64| Ok((z - c(0.0, -0.5)) * (z - c(0.5, -0.25)));
        let region = Rect::new(-1.0, 1.0, -1.0, 0.0).unwrap();
        let out = find_zeros(f, &region, &SearchConfig::default()).unwrap();
        assert_eq!(out.zeros.len(), 2);
        assert!(out.zeros.iter().any(|z| (z.z - c(0.0, -0.5)).norm() < 1e-10));
    }

    #[test]
    fn double_zero_is_reported_with_multiplicity() {
        let z0 = c(0.123, -0.456);
        let f = |z: Complex64| Ok((z - z0) * (z - z0) * (z + 3.0));
        let region = Rect::new(-1.0, 1.0, -1.0, -0.1).unwrap();
        let out = find_zeros(f, &region, &SearchConfig::default()).unwrap();
        assert_eq!(out.zeros.len(), 1);
        assert_eq!(out.zeros[0].multiplicity, 2);
        assert!((out.zeros[0].z - z0).norm() < 1e-6);
    }

    #[test]
    fn close_pair_is_separated() {
        let f = |z: Complex64| Ok((z - c(0.2, -0.3)) * (z - c(0.2 + 5e-3, -0.3)));
        let region = Rect::new(-1.0, 1.0, -1.0, -0.1).unwrap();
        let out = find_zeros(f, &region, &SearchConfig::default()).unwrap();
        assert_eq!(out.zeros.len(), 2);
        assert!(out.zeros.iter().all(|z| z.multiplicity == 1));
        assert!(out.zeros.iter().all(|z| !z.box_history.is_empty()));
    }
}

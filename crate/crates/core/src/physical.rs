//! Physical-sheet transition kernel, scattering matrices and resolvent.
//!
//! The Lippmann-Schwinger equation
//! `T(λ, μ, z) = V(λ, μ) − ∫_γ V(λ, ν) T(ν, μ, z) / (ν − z) dν`
//! is discretized on the quadrature of a contour `γ`, giving
//! `(I + K(z)) T = V` with `K_ij = V(ν_i, ν_j) w_j / (ν_j − z)`. Off the grid,
//! `T(λ, μ) = V(λ, μ) − Σ_j V(λ, ν_j) w_j/(ν_j − z) · T(ν_j, μ)` where the
//! column `T(ν_j, μ)` solves the same system with right-hand side `V(ν, μ)`;
//! algebraically this is the two-step extension through both equations.

use num_complex::Complex64;

use crate::contours::{build_contour, Contour, ContourSpec};
use crate::kernels::KernelSpec;
use crate::numerics::{Lu, Matrix};
use crate::{Error, Result, Side};

/// Reciprocal 1-norm condition of `I + K(z)` below which the system is
/// treated as singular.
pub const RCOND_FLOOR: f64 = 1e-12;

/// Whether a deformed-contour solve stays on the physical sheet or
/// deliberately continues past the pole into `Ω_γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Physical,
    DirectUnphysical,
}

/// Node-count policy for on-shell quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub nodes: usize,
    /// Double `nodes` until the value moves by less than `tol`.
    pub adaptive: bool,
    pub max_nodes: usize,
    pub tol: f64,
    /// Depth of the boundary-value dip; defaults to `min(h/2, (b − a)/4)`.
    pub dip_depth: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            nodes: 64,
            adaptive: true,
            max_nodes: 512,
            tol: 1e-9,
            dip_depth: None,
        }
    }
}

impl SolverOptions {
    /// Exactly `nodes` nodes, no doubling.
    pub fn fixed(nodes: usize) -> Self {
        SolverOptions {
            nodes,
            adaptive: false,
            ..SolverOptions::default()
        }
    }

    pub fn dip_depth_for(&self, kernel: &KernelSpec) -> f64 {
        let (a, b) = kernel.interval();
        self.dip_depth
            .unwrap_or_else(|| (0.5 * kernel.region().im_halfwidth).min(0.25 * (b - a)))
    }
}

/// Repeats `eval` with doubled node counts until successive values agree.
/// Returns the last value, the node count used and the last change.
pub(crate) fn converge<F>(opts: &SolverOptions, mut eval: F) -> Result<(Matrix, usize, f64)>
where
    F: FnMut(usize) -> Result<Matrix>,
{
    let mut n = opts.nodes;
    let mut value = eval(n)?;
    let mut change = f64::NAN;
    if !opts.adaptive {
        return Ok((value, n, change));
    }
    while 2 * n <= opts.max_nodes {
        let next = eval(2 * n)?;
        change = (&next - &value).max_abs() / next.max_abs().max(1.0);
        value = next;
        n *= 2;
        if change < opts.tol {
            break;
        }
    }
    Ok((value, n, change))
}

/// The factorized Nyström system `I + K(z)` on one contour.
#[derive(Debug, Clone)]
pub struct GridSystem {
    kernel: KernelSpec,
    contour: Contour,
    z: Complex64,
    mode: SolveMode,
    vgrid: Matrix,
    /// `w_j / (ν_j − z)`.
    wz: Vec<Complex64>,
    lu: Lu,
    rcond: f64,
}

fn check_contour_matches(kernel: &KernelSpec, contour: &Contour) -> Result<()> {
    if kernel.interval() != contour.endpoints() {
        return Err(Error::InvalidContour(format!(
            "contour endpoints {:?} differ from the kernel interval {:?}",
            contour.endpoints(),
            kernel.interval()
        )));
    }
    Ok(())
}

fn check_energy(contour: &Contour, z: Complex64, mode: SolveMode) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("energy {z} is not finite")));
    }
    let standoff = contour.standoff();
    if contour.distance_to(z) < standoff {
        return Err(Error::BoundaryAmbiguous { z, standoff });
    }
    match (mode, contour.halfplane()) {
        (SolveMode::Physical, Some(side)) if side.holds(z) => {
            if contour.omega_gamma_contains(z)? {
                return Err(Error::InvalidArgument(format!(
                    "energy {z} lies inside the region swept by the contour; \
                     a physical-sheet solve needs it outside"
                )));
            }
        }
        (SolveMode::DirectUnphysical, Some(side)) => {
            if !side.holds(z) || !contour.omega_gamma_contains(z)? {
                return Err(Error::InvalidArgument(format!(
                    "direct continuation needs {z} inside the region swept by the contour"
                )));
            }
        }
        (SolveMode::DirectUnphysical, None) => {
            return Err(Error::InvalidContour(
                "direct continuation needs a deformed contour".into(),
            ));
        }
        _ => {}
    }
    Ok(())
}

fn scale_block_columns(m: &mut Matrix, dim: usize, factors: &[Complex64]) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        for (j, &f) in factors.iter().enumerate() {
            for x in &mut row[j * dim..(j + 1) * dim] {
                *x *= f;
            }
        }
    }
}

/// Assembles `I + K(z)` and the kernel grid without factorizing.
fn assemble(kernel: &KernelSpec, contour: &Contour, z: Complex64) -> Result<(Matrix, Matrix, Vec<Complex64>)> {
    let nodes = contour.nodes();
    let wz: Vec<Complex64> = nodes
        .iter()
        .zip(contour.weights())
        .map(|(&nu, &w)| w / (nu - z))
        .collect();
    let vgrid = kernel.eval_block(nodes, nodes)?;
    let mut a = vgrid.clone();
    scale_block_columns(&mut a, kernel.dim(), &wz);
    for i in 0..a.rows() {
        a[(i, i)] += 1.0;
    }
    Ok((a, vgrid, wz))
}

impl GridSystem {
    pub fn new(kernel: &KernelSpec, contour: &Contour, z: Complex64, mode: SolveMode) -> Result<Self> {
        check_contour_matches(kernel, contour)?;
        check_energy(contour, z, mode)?;
        let (a, vgrid, wz) = assemble(kernel, contour, z)?;
        let lu = match Lu::factor(&a) {
            Ok(lu) => lu,
            Err(Error::SingularMatrix { .. }) => return Err(Error::SpectralPoint { z, rcond: 0.0 }),
            Err(e) => return Err(e),
        };
        let rcond = 1.0 / (a.norm_one() * lu.inverse_norm1_estimate()?);
        if !(rcond >= RCOND_FLOOR) {
            return Err(Error::SpectralPoint { z, rcond });
        }
        Ok(GridSystem {
            kernel: kernel.clone(),
            contour: contour.clone(),
            z,
            mode,
            vgrid,
            wz,
            lu,
            rcond,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn mode(&self) -> SolveMode {
        self.mode
    }

    /// `det(I + K(z))`.
    pub fn det(&self) -> Complex64 {
        self.lu.det()
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.lu.pivot_ratio()
    }

    /// Estimated reciprocal 1-norm condition of `I + K(z)` at construction.
    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    /// Columns `T(ν_i, μ_k, z)`, size `(N·n) × (M·n)`.
    pub fn columns(&self, mus: &[Complex64]) -> Result<Matrix> {
        let rhs = self.kernel.eval_block(self.contour.nodes(), mus)?;
        self.lu.solve(&rhs)
    }

    /// `[T(λ_k, μ_m, z)]` of size `(L·n) × (M·n)`.
    pub fn extend_block(&self, lambdas: &[Complex64], mus: &[Complex64]) -> Result<Matrix> {
        let direct = self.kernel.eval_block(lambdas, mus)?;
        let cols = self.columns(mus)?;
        Ok(&direct - &self.weighted_rows(lambdas)?.matmul(&cols)?)
    }

    /// `V(λ_k, ν_j) · w_j/(ν_j − z)`.
    fn weighted_rows(&self, lambdas: &[Complex64]) -> Result<Matrix> {
        let mut rows = self.kernel.eval_block(lambdas, self.contour.nodes())?;
        scale_block_columns(&mut rows, self.kernel.dim(), &self.wz);
        Ok(rows)
    }

    /// `T(z, z, z)`.
    pub fn on_shell(&self) -> Result<Matrix> {
        self.extend_block(&[self.z], &[self.z])
    }

    /// Solves for the full grid of blocks.
    pub fn solve(self) -> Result<GridSolution> {
        let blocks = self.lu.solve(&self.vgrid)?;
        let mut defect = self.vgrid.clone();
        scale_block_columns(&mut defect, self.kernel.dim(), &self.wz);
        let kt = defect.matmul(&blocks)?;
        let residual = (&(&blocks + &kt) - &self.vgrid).max_abs();
        Ok(GridSolution {
            system: self,
            blocks,
            residual,
        })
    }
}

/// Nyström solution `{T(ν_i, ν_j, z)}` on a contour.
#[derive(Debug, Clone)]
pub struct GridSolution {
    system: GridSystem,
    blocks: Matrix,
    residual: f64,
}

impl GridSolution {
    pub fn system(&self) -> &GridSystem {
        &self.system
    }

    pub fn contour(&self) -> &Contour {
        &self.system.contour
    }

    pub fn z(&self) -> Complex64 {
        self.system.z
    }

    /// All blocks as one `(N·n) × (N·n)` matrix.
    pub fn blocks(&self) -> &Matrix {
        &self.blocks
    }

    /// `T(ν_i, ν_j, z)`.
    pub fn block(&self, i: usize, j: usize) -> Matrix {
        self.blocks.block(i, j, self.system.kernel.dim())
    }

    /// Max entrywise defect of `(I + K)T − V`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Largest kernel entry on the grid.
    pub fn kernel_scale(&self) -> f64 {
        self.system.vgrid.max_abs()
    }

    pub fn extend(&self, lambda: Complex64, mu: Complex64) -> Result<Matrix> {
        extend_t(self, lambda, mu)
    }
}

/// Nyström solve of the Lippmann-Schwinger equation at `z` on `contour`.
pub fn solve_t_grid(kernel: &KernelSpec, contour: &Contour, z: Complex64, mode: SolveMode) -> Result<GridSolution> {
    GridSystem::new(kernel, contour, z, mode)?.solve()
}

/// `T(λ, μ, z)` for arbitrary `λ, μ ∈ Ω` from a grid solution.
pub fn extend_t(sol: &GridSolution, lambda: Complex64, mu: Complex64) -> Result<Matrix> {
    // First argument: T(λ, ν_j) from the grid blocks.
    let rows = sol.system.weighted_rows(&[lambda])?;
    let v_ln = sol.system.kernel.eval_block(&[lambda], sol.contour().nodes())?;
    let t_ln = &v_ln - &rows.matmul(&sol.blocks)?;
    // Second argument: T(λ, μ) = V(λ, μ) − Σ_j T(λ, ν_j) w_j/(ν_j − z) V(ν_j, μ).
    let mut t_w = t_ln;
    scale_block_columns(&mut t_w, sol.system.kernel.dim(), &sol.system.wz);
    let v_nm = sol.system.kernel.eval_block(sol.contour().nodes(), &[mu])?;
    Ok(&sol.system.kernel.eval(lambda, mu)? - &t_w.matmul(&v_nm)?)
}

/// Contour dipped into `side` with the given depth and node count.
pub fn dipped_contour(kernel: &KernelSpec, side: Side, depth: f64, nodes: usize) -> Result<Contour> {
    let (a, b) = kernel.interval();
    build_contour(&ContourSpec::elliptic_dip(depth, side, nodes), a, b, kernel.region())
}

fn check_sheet_side(z: Complex64, side: Side) -> Result<()> {
    if z.im != 0.0 && !side.holds(z) {
        return Err(Error::InvalidArgument(format!(
            "S_ℓ with ℓ = {} is evaluated for z in that half-plane, got {z}",
            side.sign()
        )));
    }
    Ok(())
}

/// Physical-sheet system at `z`, on a contour dipped away from `side`.
pub fn physical_system(kernel: &KernelSpec, z: Complex64, side: Side, opts: &SolverOptions, nodes: usize) -> Result<GridSystem> {
    check_sheet_side(z, side)?;
    let contour = dipped_contour(kernel, side.opposite(), opts.dip_depth_for(kernel), nodes)?;
    GridSystem::new(kernel, &contour, z, SolveMode::Physical)
}

/// `S_ℓ(z) = I − 2πiℓ·T(z, z, z)` from a solved system.
pub fn smatrix_from(system: &GridSystem, side: Side) -> Result<Matrix> {
    let t = system.on_shell()?;
    let n = t.rows();
    let factor = Complex64::new(0.0, -2.0 * std::f64::consts::PI * side.ell());
    Ok(&Matrix::identity(n) + &t.scale(factor))
}

/// Scattering matrix with the node count and last change of the doubling loop.
#[derive(Debug, Clone)]
pub struct SMatrixValue {
    pub s: Matrix,
    pub nodes: usize,
    pub change: f64,
}

/// `S_ℓ(z)` on the physical sheet; real `z` in `(a, b)` gives `S_ℓ(E + iℓ0)`.
pub fn smatrix(kernel: &KernelSpec, z: Complex64, side: Side, opts: &SolverOptions) -> Result<Matrix> {
    Ok(smatrix_value(kernel, z, side, opts)?.s)
}

pub fn smatrix_value(kernel: &KernelSpec, z: Complex64, side: Side, opts: &SolverOptions) -> Result<SMatrixValue> {
    check_sheet_side(z, side)?;
    kernel.check_domain("z", z)?;
    if kernel.is_zero() {
        return Ok(SMatrixValue {
            s: Matrix::identity(kernel.dim()),
            nodes: 0,
            change: 0.0,
        });
    }
    let (s, nodes, change) = converge(opts, |n| {
        let system = physical_system(kernel, z, side, opts, n)?;
        smatrix_from(&system, side)
    })?;
    Ok(SMatrixValue { s, nodes, change })
}

/// Smallest node count (from `opts.nodes`, doubling) at which `S_ℓ(z)`
/// moves by less than `tol`; `opts.max_nodes` if never.
pub fn converged_nodes(kernel: &KernelSpec, z: Complex64, side: Side, opts: &SolverOptions, tol: f64) -> Result<usize> {
    let o = SolverOptions {
        adaptive: true,
        tol,
        ..*opts
    };
    let (_, nodes, change) = converge(&o, |n| {
        let system = physical_system(kernel, z, side, &o, n)?;
        smatrix_from(&system, side)
    })?;
    // the doubling loop reports the larger count of the agreeing pair
    Ok(if change < tol { (nodes / 2).max(opts.nodes) } else { nodes })
}

/// `R(z) f = R₀f − R₀ T R₀ f` on the grid of `contour`; `f` has `N·n` entries.
pub fn apply_resolvent(kernel: &KernelSpec, contour: &Contour, z: Complex64, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let sol = solve_t_grid(kernel, contour, z, SolveMode::Physical)?;
    apply_resolvent_with(&sol, f)
}

/// As [`apply_resolvent`] for an existing solution.
pub fn apply_resolvent_with(sol: &GridSolution, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = sol.system.kernel.dim();
    let nodes = sol.contour().nodes();
    if f.len() != nodes.len() * n {
        return Err(Error::Dimension(format!(
            "grid vector has {} entries, expected {}",
            f.len(),
            nodes.len() * n
        )));
    }
    let z = sol.z();
    // R₀ f, then W R₀ f = (w/(ν − z)) ⊙ f
    let r0f: Vec<Complex64> = f.iter().enumerate().map(|(k, &x)| x / (nodes[k / n] - z)).collect();
    let weighted: Vec<Complex64> = r0f
        .iter()
        .enumerate()
        .map(|(k, &x)| x * sol.contour().weights()[k / n])
        .collect();
    let tf = sol.blocks.matvec(&weighted)?;
    Ok(r0f
        .iter()
        .zip(&tf)
        .enumerate()
        .map(|(k, (&a, &t))| a - t / (nodes[k / n] - z))
        .collect())
}

/// `(H − z) g` with `H = ν ⊗ I + V` applied by the contour quadrature.
pub fn apply_h_minus_z(kernel: &KernelSpec, contour: &Contour, z: Complex64, g: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = kernel.dim();
    let nodes = contour.nodes();
    let weights = contour.weights();
    let vgrid = kernel.eval_block(nodes, nodes)?;
    let wg: Vec<Complex64> = g.iter().enumerate().map(|(k, &x)| x * weights[k / n]).collect();
    let vg = vgrid.matvec(&wg)?;
    Ok(g.iter()
        .zip(&vg)
        .enumerate()
        .map(|(k, (&x, &v))| (nodes[k / n] - z) * x + v)
        .collect())
}

/// `det(I + K(z))`; an exactly singular system gives zero.
pub fn fredholm_det(kernel: &KernelSpec, contour: &Contour, z: Complex64) -> Result<Complex64> {
    check_contour_matches(kernel, contour)?;
    let standoff = contour.standoff();
    if contour.distance_to(z) < standoff {
        return Err(Error::BoundaryAmbiguous { z, standoff });
    }
    let (a, _, _) = assemble(kernel, contour, z)?;
    match Lu::factor(&a) {
        Ok(lu) => Ok(lu.det()),
        Err(Error::SingularMatrix { .. }) => Ok(Complex64::new(0.0, 0.0)),
        Err(e) => Err(e),
    }
}

/// Sample points per bracket in the sign-change scan.
const BOUND_STATE_SCAN: usize = 400;

/// Real zeros of the Fredholm determinant in the given brackets (outside
/// `[a, b]`), located on the real-segment contour.
pub fn bound_states(kernel: &KernelSpec, brackets: &[(f64, f64)], opts: &SolverOptions) -> Result<Vec<f64>> {
    let (a, b) = kernel.interval();
    if kernel.is_zero() {
        return Ok(Vec::new());
    }
    let (_, nodes, _) = converge(opts, |n| {
        let contour = build_contour(&ContourSpec::real_segment(n), a, b, kernel.region())?;
        // convergence judged on the determinant at the brackets' inner ends
        let probes: Vec<Complex64> = brackets
            .iter()
            .flat_map(|&(lo, hi)| [lo, hi])
            .map(|x| Complex64::new(x, 0.0))
            .collect();
        let vals: Result<Vec<Complex64>> = probes.iter().map(|&x| fredholm_det(kernel, &contour, x)).collect();
        Ok(Matrix::column(&vals?))
    })?;
    let contour = build_contour(&ContourSpec::real_segment(nodes), a, b, kernel.region())?;
    let standoff = contour.standoff();
    let det = |x: f64| -> Result<f64> { Ok(fredholm_det(kernel, &contour, Complex64::new(x, 0.0))?.re) };
    let mut roots = Vec::new();
    for &(lo, hi) in brackets {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidArgument(format!("bad bracket ({lo}, {hi})")));
        }
        if hi > a - standoff && lo < b + standoff {
            return Err(Error::InvalidArgument(format!(
                "bracket ({lo}, {hi}) overlaps the continuous spectrum [{a}, {b}]"
            )));
        }
        let mut x0 = lo;
        let mut f0 = det(x0)?;
        for k in 1..=BOUND_STATE_SCAN {
            let x1 = lo + (hi - lo) * k as f64 / BOUND_STATE_SCAN as f64;
            let f1 = det(x1)?;
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0.signum() != f1.signum() && f1 != 0.0 {
                roots.push(safeguarded_newton(&det, x0, x1, f0)?);
            }
            x0 = x1;
            f0 = f1;
        }
        if f0 == 0.0 {
            roots.push(x0);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    Ok(roots)
}

/// Newton with bisection fallback on a sign-changing bracket.
pub(crate) fn safeguarded_newton<F>(f: &F, mut lo: f64, mut hi: f64, flo: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let neg_at_lo = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == neg_at_lo {
            lo = x;
        } else {
            hi = x;
        }
        let h = 1e-6_f64.max(1e-6 * x.abs());
        let d = (f(x + h)? - f(x - h)?) / (2.0 * h);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) || hi - lo <= 1e-14 * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contours::{build_contour, ContourSpec};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_segment(k: &KernelSpec, n: usize) -> Contour {
        let (a, b) = k.interval();
        build_contour(&ContourSpec::real_segment(n), a, b, k.region()).unwrap()
    }

    fn d_of_i() -> Complex64 {
        c(1.0, 2.0 * PI - 16.0 / 3.0)
    }

    #[test]
    fn zero_kernel_gives_zero_t() {
        let k = KernelSpec::reference(0.0);
        let sol = solve_t_grid(&k, &real_segment(&k, 16), c(0.3, 0.4), SolveMode::Physical).unwrap();
        assert_eq!(sol.blocks().max_abs(), 0.0);
        assert_eq!(sol.residual(), 0.0);
        assert_eq!(sol.extend(c(0.1, 0.2), c(-0.4, 0.0)).unwrap().max_abs(), 0.0);
        assert_eq!(fredholm_det(&k, &real_segment(&k, 16), c(0.0, 1.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn reference_kernel_at_i() {
        let k = KernelSpec::reference(1.0);
        let sol = solve_t_grid(&k, &real_segment(&k, 64), c(0.0, 1.0), SolveMode::Physical).unwrap();
        let t00 = sol.extend(c(0.0, 0.0), c(0.0, 0.0)).unwrap()[(0, 0)];
        assert!((t00 - c(1.0, 0.0) / d_of_i()).norm() <= 1e-10);
        assert!(sol.residual() <= 1e-9 * sol.kernel_scale());
        let det = fredholm_det(&k, &real_segment(&k, 64), c(0.0, 1.0)).unwrap();
        assert!((det - d_of_i()).norm() <= 1e-10 * d_of_i().norm());
    }

    #[test]
    fn extension_reproduces_grid() {
        let k = KernelSpec::reference(1.0);
        let sol = solve_t_grid(&k, &real_segment(&k, 32), c(0.2, 0.7), SolveMode::Physical).unwrap();
        let nodes = sol.contour().nodes().to_vec();
        let e = sol.extend(nodes[3], nodes[7]).unwrap();
        assert!((&e - &sol.block(3, 7)).max_abs() <= 1e-12);
        let b = sol.system().extend_block(&[nodes[3]], &[nodes[7]]).unwrap();
        assert!((&b - &sol.block(3, 7)).max_abs() <= 1e-12);
    }

    #[test]
    fn off_grid_extension_matches_closed_form() {
        let k = KernelSpec::reference(1.0);
        let sol = solve_t_grid(&k, &real_segment(&k, 64), c(0.0, 1.0), SolveMode::Physical).unwrap();
        let (l, m) = (c(0.5, 0.2), c(-0.5, 0.0));
        let v = |x: Complex64| c(1.0, 0.0) - x * x;
        let exact = v(l) * v(m) / d_of_i();
        assert!((sol.extend(l, m).unwrap()[(0, 0)] - exact).norm() <= 1e-10);
    }

    #[test]
    fn real_energy_right_of_interval_is_real_symmetric() {
        let k = KernelSpec::reference(1.0);
        let sol = solve_t_grid(&k, &real_segment(&k, 64), c(3.0, 0.0), SolveMode::Physical).unwrap();
        let t = sol.blocks();
        assert!(t.as_slice().iter().all(|x| x.im.abs() <= 1e-10));
        assert!((t - &t.adjoint()).max_abs() <= 1e-10);
    }

    #[test]
    fn smatrix_reference_values() {
        let zero = KernelSpec::reference(0.0);
        let s = smatrix(&zero, c(0.2, 0.0), Side::Upper, &SolverOptions::default()).unwrap();
        assert_eq!(s, Matrix::identity(1));
        let k = KernelSpec::reference(1.0);
        let s = smatrix(&k, c(0.0, 0.0), Side::Upper, &SolverOptions::default()).unwrap()[(0, 0)];
        let expected = c(1.0 - PI * PI, -2.0 * PI) / (1.0 + PI * PI);
        assert!((s - expected).norm() <= 1e-10, "{s} vs {expected}");
        assert!((s.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn smatrix_side_is_enforced() {
        let k = KernelSpec::reference(1.0);
        assert!(smatrix(&k, c(0.0, -0.2), Side::Upper, &SolverOptions::default()).is_err());
        assert!(smatrix(&k, c(0.0, 2.0), Side::Upper, &SolverOptions::default()).is_err());
    }

    #[test]
    fn resolvent_for_free_and_interacting() {
        let zero = KernelSpec::reference(0.0);
        let g = real_segment(&zero, 16);
        let z = c(2.0, 1.0);
        let f: Vec<Complex64> = (0..16).map(|i| c(i as f64, 1.0)).collect();
        let r = apply_resolvent(&zero, &g, z, &f).unwrap();
        for (i, x) in r.iter().enumerate() {
            assert!((x - f[i] / (g.nodes()[i] - z)).norm() <= 1e-15);
        }
        let k = KernelSpec::reference(1.0);
        let g = real_segment(&k, 64);
        let ones = vec![c(1.0, 0.0); 64];
        let r = apply_resolvent(&k, &g, z, &ones).unwrap();
        let back = apply_h_minus_z(&k, &g, z, &r).unwrap();
        let defect = back.iter().zip(&ones).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(defect <= 1e-8);
    }

    #[test]
    fn bound_state_for_attractive_coupling() {
        let attractive = KernelSpec::reference(-1.0);
        let opts = SolverOptions::default();
        let e = bound_states(&attractive, &[(-3.0, -1.01)], &opts).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e[0] + 1.207_408_857_542_286_5).abs() <= 1e-10, "{}", e[0]);
        assert!(bound_states(&KernelSpec::reference(0.0), &[(-3.0, -1.01)], &opts)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn determinant_sign_change_left_of_interval() {
        let k = KernelSpec::reference(-1.0);
        let g = real_segment(&k, 64);
        let left = fredholm_det(&k, &g, c(-3.0, 0.0)).unwrap().re;
        let right = fredholm_det(&k, &g, c(-1.01, 0.0)).unwrap().re;
        assert!(left > 0.0 && right < 0.0);
    }

    #[test]
    fn spectral_point_is_reported() {
        let k = KernelSpec::reference(-1.0);
        let e = bound_states(&k, &[(-3.0, -1.01)], &SolverOptions::default()).unwrap()[0];
        let g = real_segment(&k, 64);
        let r = solve_t_grid(&k, &g, c(e, 0.0), SolveMode::Physical);
        assert!(matches!(r, Err(Error::SpectralPoint { .. })), "{r:?}");
    }
}

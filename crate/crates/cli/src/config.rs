//! Experiment configuration: a single JSON document with `"schema": 1`.

use std::collections::BTreeMap;
use std::path::Path;

use ffsheets_core::contours::{build_contour, Contour, ContourSpec};
use ffsheets_core::kernels::{FormFactor, HolomorphyRegion, KernelFamily, KernelSpec, ProductTerm, RankTerm};
use ffsheets_core::numerics::{Matrix, Rect};
use ffsheets_core::physical::SolverOptions;
use ffsheets_core::Side;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    pub kernel: KernelBlock,
    #[serde(default)]
    pub contours: BTreeMap<String, ContourBlock>,
    #[serde(default)]
    pub solver: SolverBlock,
    pub smatrix: Option<SmatrixBlock>,
    pub resonances: Option<ResonancesBlock>,
    pub sheetmap: Option<SheetmapBlock>,
    pub deform: Option<DeformBlock>,
    pub validate: Option<ValidateBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    FiniteRank,
    AnalyticProduct,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub interval: [f64; 2],
    #[serde(default = "one")]
    pub internal_dim: usize,
    pub family: FamilyName,
    pub terms: Option<Vec<TermBlock>>,
    pub product: Option<ProductBlock>,
    pub region: RegionBlock,
}

/// A matrix entry: a real number or `[re, im]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> Complex64 {
        match self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormBlock {
    #[serde(default = "one_u32")]
    pub p: u32,
    #[serde(default = "one_u32")]
    pub q: u32,
    pub poly: Vec<f64>,
    #[serde(default)]
    pub exp_poly: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermBlock {
    pub coupling: f64,
    pub form: FormBlock,
    /// Defaults to the identity.
    pub channel: Option<Vec<Vec<Entry>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductBlock {
    pub coupling: f64,
    pub form: FormBlock,
    pub exponent: f64,
    pub channel: Option<Vec<Vec<Entry>>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionBlock {
    pub re_min: f64,
    pub re_max: f64,
    pub im_halfwidth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContourBlock {
    RealSegment { nodes: usize },
    EllipticDip { depth: f64, sign: i32, nodes: usize },
    Polyline { anchors: Vec<[f64; 2]>, nodes: usize },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "yes")]
    pub adaptive: bool,
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub dip_depth: Option<f64>,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            nodes: default_nodes(),
            adaptive: true,
            max_nodes: default_max_nodes(),
            tol: default_tol(),
            dip_depth: None,
        }
    }
}

/// `count` equally spaced points from `start` to `stop`, both included.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridBlock {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmatrixBlock {
    #[serde(default = "plus_one")]
    pub sheet: i32,
    pub energies: GridBlock,
    #[serde(default = "smatrix_csv")]
    pub output: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectBlock {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorChoice {
    Smatrix,
    Oracle,
    Deformation,
    All,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonancesBlock {
    pub sheet: i32,
    pub region: RectBlock,
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "all_detectors")]
    pub detector: DetectorChoice,
    /// Named contour for the deformation detector.
    pub contour: Option<String>,
    /// Pairing threshold; defaults to `1e−3 ·` region diameter.
    pub threshold: Option<f64>,
    /// Estimate residue ranks of the S-matrix zeros.
    #[serde(default)]
    pub residue: bool,
    #[serde(default = "resonances_json")]
    pub output: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheetmapBlock {
    pub sheet: i32,
    pub re: GridBlock,
    pub im: GridBlock,
    #[serde(default = "sheetmap_csv")]
    pub output: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformBlock {
    pub contours: Vec<String>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "deform_json")]
    pub output: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateBlock {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_validation_tol")]
    pub tol: f64,
}

impl Default for ValidateBlock {
    fn default() -> Self {
        ValidateBlock {
            samples: default_samples(),
            tol: default_validation_tol(),
        }
    }
}

fn one() -> usize {
    1
}
fn one_u32() -> u32 {
    1
}
fn yes() -> bool {
    true
}
fn plus_one() -> i32 {
    1
}
fn default_nodes() -> usize {
    64
}
fn default_max_nodes() -> usize {
    512
}
fn default_tol() -> f64 {
    1e-9
}
fn default_grid() -> [usize; 2] {
    [4, 2]
}
fn all_detectors() -> DetectorChoice {
    DetectorChoice::All
}
fn default_threshold() -> f64 {
    1e-3
}
fn default_samples() -> usize {
    64
}
fn default_validation_tol() -> f64 {
    1e-12
}
fn smatrix_csv() -> String {
    "smatrix.csv".into()
}
fn resonances_json() -> String {
    "resonances.json".into()
}
fn sheetmap_csv() -> String {
    "sheetmap.csv".into()
}
fn deform_json() -> String {
    "deform_report.json".into()
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// A parsed config with its digest and the objects built from it.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub digest: String,
    pub kernel: KernelSpec,
    pub solver: SolverOptions,
}

/// Hex SHA-256 of the canonical (sorted-key, compact) JSON form.
pub fn digest_of(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(value).expect("a JSON value serializes");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid("", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Loaded, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| invalid("", e.to_string()))?;
    let digest = digest_of(&value);
    let config: ExperimentConfig =
        serde_path_to_error::deserialize(value).map_err(|e| invalid(e.path().to_string(), e.inner().to_string()))?;
    if config.schema != SCHEMA_VERSION {
        return Err(invalid("schema", format!("unsupported schema {}, expected {SCHEMA_VERSION}", config.schema)));
    }
    let kernel = build_kernel(&config.kernel)?;
    let solver = build_solver(&config.solver)?;
    let loaded = Loaded {
        config,
        digest,
        kernel,
        solver,
    };
    loaded.check_contours()?;
    Ok(loaded)
}

fn build_matrix(rows: &Option<Vec<Vec<Entry>>>, dim: usize, path: &str) -> Result<Matrix, CliError> {
    let Some(rows) = rows else {
        return Ok(Matrix::identity(dim));
    };
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(invalid(path, format!("channel must be {dim}x{dim}")));
    }
    let data: Vec<Vec<Complex64>> = rows.iter().map(|r| r.iter().map(|e| e.value()).collect()).collect();
    Matrix::from_rows(&data).map_err(|e| invalid(path, e.to_string()))
}

fn build_form(f: &FormBlock) -> FormFactor {
    FormFactor {
        p: f.p,
        q: f.q,
        poly: f.poly.clone(),
        exp_poly: f.exp_poly.clone(),
    }
}

pub fn build_kernel(k: &KernelBlock) -> Result<KernelSpec, CliError> {
    let region = HolomorphyRegion::new(k.region.re_min, k.region.re_max, k.region.im_halfwidth)
        .map_err(|e| invalid("kernel.region", e.to_string()))?;
    let family = match k.family {
        FamilyName::FiniteRank => {
            let terms = k
                .terms
                .as_ref()
                .ok_or_else(|| invalid("kernel.terms", "finite_rank kernels need a terms list"))?;
            let mut out = Vec::with_capacity(terms.len());
            for (i, t) in terms.iter().enumerate() {
                out.push(RankTerm {
                    coupling: t.coupling,
                    form: build_form(&t.form),
                    channel: build_matrix(&t.channel, k.internal_dim, &format!("kernel.terms[{i}].channel"))?,
                });
            }
            KernelFamily::FiniteRank(out)
        }
        FamilyName::AnalyticProduct => {
            let p = k
                .product
                .as_ref()
                .ok_or_else(|| invalid("kernel.product", "analytic_product kernels need a product block"))?;
            KernelFamily::AnalyticProduct(ProductTerm {
                coupling: p.coupling,
                form: build_form(&p.form),
                exponent: p.exponent,
                channel: build_matrix(&p.channel, k.internal_dim, "kernel.product.channel")?,
            })
        }
    };
    KernelSpec::new((k.interval[0], k.interval[1]), k.internal_dim, family, region)
        .map_err(|e| invalid("kernel", e.to_string()))
}

fn build_solver(s: &SolverBlock) -> Result<SolverOptions, CliError> {
    if s.nodes == 0 || s.max_nodes < s.nodes {
        return Err(invalid("solver.nodes", "need 0 < nodes <= max_nodes"));
    }
    if !(s.tol > 0.0) {
        return Err(invalid("solver.tol", "tolerance must be positive"));
    }
    if let Some(d) = s.dip_depth {
        if !(d > 0.0) {
            return Err(invalid("solver.dip_depth", "dip depth must be positive"));
        }
    }
    Ok(SolverOptions {
        nodes: s.nodes,
        adaptive: s.adaptive,
        max_nodes: s.max_nodes,
        tol: s.tol,
        dip_depth: s.dip_depth,
    })
}

pub fn side_of(sheet: i32, path: &str) -> Result<Side, CliError> {
    Side::from_sign(sheet).ok_or_else(|| invalid(path, format!("sheet must be +1 or -1, got {sheet}")))
}

pub fn rect_of(r: &RectBlock, path: &str) -> Result<Rect, CliError> {
    Rect::new(r.re_min, r.re_max, r.im_min, r.im_max).map_err(|e| invalid(path, e.to_string()))
}

impl Loaded {
    fn check_contours(&self) -> Result<(), CliError> {
        for name in self.config.contours.keys() {
            self.contour(name)?;
        }
        Ok(())
    }

    /// Builds the named contour.
    pub fn contour(&self, name: &str) -> Result<Contour, CliError> {
        let path = format!("contours.{name}");
        let block = self
            .config
            .contours
            .get(name)
            .ok_or_else(|| invalid(path.clone(), "no contour with this name"))?;
        let spec = match block {
            ContourBlock::RealSegment { nodes } => ContourSpec::real_segment(*nodes),
            ContourBlock::EllipticDip { depth, sign, nodes } => {
                ContourSpec::elliptic_dip(*depth, side_of(*sign, &format!("{path}.sign"))?, *nodes)
            }
            ContourBlock::Polyline { anchors, nodes } => ContourSpec::polyline(
                anchors.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
                *nodes,
            ),
        };
        let (a, b) = self.kernel.interval();
        build_contour(&spec, a, b, self.kernel.region()).map_err(|e| invalid(path, e.to_string()))
    }

    pub fn block<'a, T>(&self, block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        block.as_ref().ok_or_else(|| invalid(name, format!("the {name} command needs a \"{name}\" block")))
    }
}

pub(crate) fn config_error(path: impl Into<String>, message: impl Into<String>) -> CliError {
    invalid(path, message)
}

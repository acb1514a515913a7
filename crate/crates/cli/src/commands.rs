//! The five subcommands.

use std::path::Path;

use ffsheets_core::contours::Contour;
use ffsheets_core::deformation::{compare_spectra, deformed_spectrum, DeformedSpectrum, SpectralClass};
use ffsheets_core::kernels::{validate_kernel, KernelSpec};
use ffsheets_core::numerics::{Lu, Matrix, Rect};
use ffsheets_core::physical::{smatrix_value, SolverOptions};
use ffsheets_core::resonances::{
    find_resonances, match_points, pairing_threshold, separable_oracle, Detector, MatchReport, Resonance,
    ResonanceSearch, SearchRegion,
};
use ffsheets_core::unphysical::{inversion_condition, invert_smatrix, residue_rank};
use ffsheets_core::{Error, Sheet, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{config_error, rect_of, side_of, DetectorChoice, Loaded};
use crate::output::{matrix_columns, matrix_fields, nan_fields, num, write_json, Csv};
use crate::{CliError, Outcome};

fn det_of(m: &Matrix) -> Result<Complex64, CliError> {
    match Lu::factor(m) {
        Ok(lu) => Ok(lu.det()),
        Err(Error::SingularMatrix { .. }) => Ok(Complex64::new(0.0, 0.0)),
        Err(e) => Err(e.into()),
    }
}

fn frobenius(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn point_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn rect_json(r: &Rect) -> Value {
    json!({"re_min": r.re_min, "re_max": r.re_max, "im_min": r.im_min, "im_max": r.im_max})
}

fn match_json(m: &MatchReport) -> Value {
    json!({
        "left": m.left,
        "right": m.right,
        "threshold": m.threshold,
        "max_distance": m.max_distance,
        "pairs": m.pairs.iter().map(|p| json!({"left": p.left, "right": p.right, "distance": p.distance})).collect::<Vec<_>>(),
        "unmatched_left": m.unmatched_left,
        "unmatched_right": m.unmatched_right,
    })
}

fn exclusion_check(kernel: &KernelSpec, x: f64, path: &str) -> Result<(), CliError> {
    let (a, b) = kernel.interval();
    let r = SearchRegion::exclusion_radius(kernel);
    if (x - a).abs() <= r || (x - b).abs() <= r {
        return Err(config_error(path, format!("{x} lies within {r} of an endpoint")));
    }
    Ok(())
}

/// Energies of the `smatrix` block, checked against `(a, b)` and the endpoint disks.
pub fn smatrix_energies(loaded: &Loaded) -> Result<(Side, Vec<f64>), CliError> {
    let block = loaded.block(&loaded.config.smatrix, "smatrix")?;
    let side = side_of(block.sheet, "smatrix.sheet")?;
    let (a, b) = loaded.kernel.interval();
    let energies = block.energies.points();
    if energies.is_empty() {
        return Err(config_error("smatrix.energies.count", "need at least one energy"));
    }
    for &e in &energies {
        if !(e > a && e < b) {
            return Err(config_error("smatrix.energies", format!("energy {e} lies outside ({a}, {b})")));
        }
        exclusion_check(&loaded.kernel, e, "smatrix.energies")?;
    }
    Ok((side, energies))
}

pub fn smatrix(loaded: &Loaded, out: &Path) -> Result<Outcome, CliError> {
    let (side, energies) = smatrix_energies(loaded)?;
    let block = loaded.config.smatrix.as_ref().expect("checked above");
    let kernel = &loaded.kernel;
    let opts = loaded.solver;
    let values: Vec<_> = energies
        .par_iter()
        .map(|&e| smatrix_value(kernel, Complex64::new(e, 0.0), side, &opts))
        .collect();
    let n = kernel.dim();
    let mut header = vec!["e".to_string()];
    header.extend(matrix_columns(n));
    header.extend(["abs_det_s", "phase", "unitarity_residual"].map(String::from));
    let mut csv = Csv::new(&header);
    let mut skipped = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut max_nodes = 0;
    for (&e, value) in energies.iter().zip(values) {
        let sv = match value {
            Ok(sv) => sv,
            Err(Error::SpectralPoint { .. }) => {
                skipped.push(e);
                continue;
            }
            Err(err) => return Err(err.into()),
        };
        let det = det_of(&sv.s)?;
        let residual = frobenius(&(&sv.s.matmul(&sv.s.adjoint())? - &Matrix::identity(n)));
        max_residual = max_residual.max(residual);
        max_nodes = max_nodes.max(sv.nodes);
        let mut row = vec![num(e)];
        row.extend(matrix_fields(&sv.s));
        row.extend([num(det.norm()), num(0.5 * det.arg()), num(residual)]);
        csv.row(&row);
    }
    let path = csv.write(&out.join(&block.output))?;
    Ok(Outcome {
        outputs: vec![path],
        diagnostics: json!({
            "sheet": Sheet::Unphysical(side).label(),
            "rows": energies.len() - skipped.len(),
            "skipped_spectral_points": skipped,
            "max_unitarity_residual": max_residual,
            "max_nodes": max_nodes,
        }),
        status: None,
    })
}

struct ResonancePlan {
    side: Side,
    region: SearchRegion,
    threshold: f64,
    detectors: Vec<Detector>,
    contour: Option<Contour>,
    oracle_note: Option<String>,
}

fn resonance_plan(loaded: &Loaded) -> Result<ResonancePlan, CliError> {
    let block = loaded.block(&loaded.config.resonances, "resonances")?;
    let side = side_of(block.sheet, "resonances.sheet")?;
    let rect = rect_of(&block.region, "resonances.region")?;
    if block.grid[0] == 0 || block.grid[1] == 0 {
        return Err(config_error("resonances.grid", "grid sizes must be positive"));
    }
    let region = SearchRegion::new(rect).with_grid(block.grid[0], block.grid[1]);
    match side {
        Side::Lower if rect.im_max >= 0.0 => {
            return Err(config_error("resonances.region.im_max", "must be negative on sheet -1"))
        }
        Side::Upper if rect.im_min <= 0.0 => {
            return Err(config_error("resonances.region.im_min", "must be positive on sheet +1"))
        }
        _ => {}
    }
    region
        .validate(&loaded.kernel, side)
        .map_err(|e| config_error("resonances.region", e.to_string()))?;
    let threshold = match block.threshold {
        Some(t) if t > 0.0 => t,
        Some(_) => return Err(config_error("resonances.threshold", "threshold must be positive")),
        None => pairing_threshold(&rect),
    };
    let oracle_available = ffsheets_core::resonances::SeparableDenominator::new(&loaded.kernel);
    let mut oracle_note = None;
    let detectors = match block.detector {
        DetectorChoice::Smatrix => vec![Detector::SmatrixZero],
        DetectorChoice::Oracle => {
            if let Err(e) = oracle_available {
                return Err(config_error("resonances.detector", e.to_string()));
            }
            vec![Detector::Oracle]
        }
        DetectorChoice::Deformation => vec![Detector::Deformation],
        DetectorChoice::All => {
            let mut d = vec![Detector::SmatrixZero];
            match oracle_available {
                Ok(_) => d.push(Detector::Oracle),
                Err(e) => oracle_note = Some(e.to_string()),
            }
            d.push(Detector::Deformation);
            d
        }
    };
    let contour = if detectors.contains(&Detector::Deformation) {
        let name = block
            .contour
            .as_ref()
            .ok_or_else(|| config_error("resonances.contour", "the deformation detector needs a named contour"))?;
        let contour = loaded.contour(name)?;
        if contour.halfplane() != Some(side) {
            return Err(config_error(
                "resonances.contour",
                format!("contour {name} must dip into the half-plane of sheet {}", side.sign()),
            ));
        }
        Some(contour)
    } else {
        None
    };
    Ok(ResonancePlan {
        side,
        region,
        threshold,
        detectors,
        contour,
        oracle_note,
    })
}

/// One detector's findings, or the failure that stopped it.
struct DetectorRun {
    detector: Detector,
    search: Result<ResonanceSearch, CliError>,
    residues: Vec<Option<(usize, f64)>>,
}

fn deformation_search(loaded: &Loaded, plan: &ResonancePlan) -> Result<ResonanceSearch, CliError> {
    let contour = plan.contour.as_ref().expect("planned with a contour");
    let spectrum = deformed_spectrum(&loaded.kernel, contour)?;
    let rect = plan.region.rect;
    let resonances = spectrum
        .resonances()
        .into_iter()
        .filter(|&z| rect.contains(z))
        .map(|z| {
            let sv = smatrix_value(&loaded.kernel, z, plan.side, &loaded.solver)?;
            Ok(Resonance {
                z,
                side: plan.side,
                detector: Detector::Deformation,
                abs_det_s: det_of(&sv.s)?.norm(),
                newton_iters: 0,
                residue_rank: None,
                multiplicity: 1,
                box_history: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(ResonanceSearch {
        detector: Detector::Deformation,
        side: plan.side,
        total_winding: resonances.len() as i64,
        resonances,
        region: rect,
        nodes: spectrum.node_count(),
        exclusion_radius: SearchRegion::exclusion_radius(&loaded.kernel),
        boxes_examined: 0,
    })
}

/// Residue circle radius: well inside the half-plane and away from neighbours.
fn residue_radius(z: Complex64, others: &[Complex64]) -> f64 {
    let nearest = others
        .iter()
        .filter(|&&w| w != z)
        .map(|w| (w - z).norm())
        .fold(f64::INFINITY, f64::min);
    (0.25 * z.im.abs()).min(0.25 * nearest).min(1e-2)
}

fn residues(kernel: &KernelSpec, side: Side, opts: &SolverOptions, search: &ResonanceSearch) -> Vec<Option<(usize, f64)>> {
    let points: Vec<Complex64> = search.resonances.iter().map(|r| r.z).collect();
    search
        .resonances
        .par_iter()
        .map(|r| {
            if r.multiplicity != 1 {
                return None;
            }
            residue_rank(kernel, r.z, side, residue_radius(r.z, &points), opts)
                .ok()
                .map(|est| (est.rank, est.gap))
        })
        .collect()
}

fn resonance_json(r: &Resonance, residue: Option<(usize, f64)>) -> Value {
    json!({
        "re": r.z.re,
        "im": r.z.im,
        "sheet": Sheet::Unphysical(r.side).label(),
        "detector": r.detector.label(),
        "abs_det_S": r.abs_det_s,
        "residue_rank": residue.map(|x| x.0),
        "residue_gap": residue.map(|x| x.1),
        "iters": r.newton_iters,
        "multiplicity": r.multiplicity,
        "box_history": r.box_history.iter().map(rect_json).collect::<Vec<_>>(),
    })
}

pub fn resonances(loaded: &Loaded, out: &Path) -> Result<Outcome, CliError> {
    let plan = resonance_plan(loaded)?;
    let block = loaded.config.resonances.as_ref().expect("checked above");
    let kernel = &loaded.kernel;
    let runs: Vec<DetectorRun> = plan
        .detectors
        .par_iter()
        .map(|&detector| {
            let search = match detector {
                Detector::SmatrixZero => find_resonances(kernel, plan.side, &plan.region, &loaded.solver).map_err(CliError::from),
                Detector::Oracle => separable_oracle(kernel, plan.side, &plan.region).map_err(CliError::from),
                Detector::Deformation => deformation_search(loaded, &plan),
            };
            let residues = match (&search, detector, block.residue) {
                (Ok(s), Detector::SmatrixZero, true) => residues(kernel, plan.side, &loaded.solver, s),
                (Ok(s), _, _) => vec![None; s.resonances.len()],
                _ => Vec::new(),
            };
            DetectorRun {
                detector,
                search,
                residues,
            }
        })
        .collect();
    let mut status = None;
    let mut lists = Vec::new();
    let mut detector_json = Vec::new();
    for run in &runs {
        match &run.search {
            Ok(s) => {
                lists.push((run.detector, s.resonances.iter().map(|r| r.z).collect::<Vec<_>>()));
                detector_json.push(json!({
                    "detector": run.detector.label(),
                    "status": "ok",
                    "total_winding": s.total_winding,
                    "nodes": s.nodes,
                    "boxes_examined": s.boxes_examined,
                    "resonances": s.resonances.iter().zip(&run.residues).map(|(r, &res)| resonance_json(r, res)).collect::<Vec<_>>(),
                }));
            }
            Err(e) => {
                detector_json.push(json!({
                    "detector": run.detector.label(),
                    "status": "error",
                    "error": e.to_string(),
                    "resonances": [],
                }));
                if status.is_none() || e.exit_code() > 3 {
                    status = Some(match e {
                        CliError::Incomplete(m) => CliError::Incomplete(m.clone()),
                        other => CliError::Incomplete(other.to_string()),
                    });
                }
            }
        }
    }
    let mut matches = Vec::new();
    for i in 0..lists.len() {
        for j in i + 1..lists.len() {
            let m = match_points(lists[i].0.label(), &lists[i].1, lists[j].0.label(), &lists[j].1, plan.threshold);
            matches.push(m);
        }
    }
    let report = json!({
        "config_digest": loaded.digest,
        "sheet": Sheet::Unphysical(plan.side).label(),
        "region": rect_json(&plan.region.rect),
        "exclusion_radius": SearchRegion::exclusion_radius(kernel),
        "threshold": plan.threshold,
        "oracle_note": plan.oracle_note,
        "detectors": detector_json,
        "matches": matches.iter().map(match_json).collect::<Vec<_>>(),
    });
    let path = write_json(&out.join(&block.output), &report)?;
    let diagnostics = json!({
        "counts": lists.iter().map(|(d, l)| json!({"detector": d.label(), "count": l.len()})).collect::<Vec<_>>(),
        "max_distances": matches.iter().map(|m| json!({"pair": format!("{}-{}", m.left, m.right), "max_distance": m.max_distance, "complete": m.complete()})).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        outputs: vec![path],
        diagnostics,
        status,
    })
}

/// Grid of the `sheetmap` block, row-major from the lowest `Im z`.
pub fn sheetmap_points(loaded: &Loaded) -> Result<(Side, Vec<Complex64>), CliError> {
    let block = loaded.block(&loaded.config.sheetmap, "sheetmap")?;
    let side = side_of(block.sheet, "sheetmap.sheet")?;
    let kernel = &loaded.kernel;
    let res = block.re.points();
    let ims = block.im.points();
    if res.is_empty() || ims.is_empty() {
        return Err(config_error("sheetmap", "grid counts must be positive"));
    }
    for &y in &ims {
        if !side.holds(Complex64::new(0.0, y)) {
            return Err(config_error(
                "sheetmap.im",
                format!("Im z = {y} is not in the half-plane of sheet {}", side.sign()),
            ));
        }
    }
    let radius = SearchRegion::exclusion_radius(kernel);
    let (a, b) = kernel.interval();
    let mut points = Vec::with_capacity(res.len() * ims.len());
    for &y in &ims {
        for &x in &res {
            let z = Complex64::new(x, y);
            if !kernel.region().contains(z) {
                return Err(config_error("sheetmap", format!("grid point {z} leaves the holomorphy region")));
            }
            if (z - a).norm() <= radius || (z - b).norm() <= radius {
                return Err(config_error("sheetmap", format!("grid point {z} lies within {radius} of an endpoint")));
            }
            points.push(z);
        }
    }
    Ok((side, points))
}

pub fn sheetmap(loaded: &Loaded, out: &Path) -> Result<Outcome, CliError> {
    let (side, points) = sheetmap_points(loaded)?;
    let block = loaded.config.sheetmap.as_ref().expect("checked above");
    let kernel = &loaded.kernel;
    let n = kernel.dim();
    let rows: Vec<Result<(Matrix, Option<(Matrix, f64)>, f64), CliError>> = points
        .par_iter()
        .map(|&z| {
            let s = smatrix_value(kernel, z, side, &loaded.solver)?.s;
            match invert_smatrix(&s, z) {
                Ok((inv, condition, _)) => Ok((s, Some((inv, condition)), condition)),
                Err(Error::AtResonance { .. }) => {
                    let c = inversion_condition(&s);
                    Ok((s, None, c))
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let mut header = vec!["re_z".to_string(), "im_z".into(), "sheet".into()];
    header.extend(matrix_columns(n));
    header.extend(["abs_det_s", "condition", "product"].map(String::from));
    let mut csv = Csv::new(&header);
    let physical = Sheet::Physical.label();
    let continued = Sheet::Unphysical(side).label();
    let mut at_resonance = 0;
    let mut max_product_defect: f64 = 0.0;
    for (z, row) in points.iter().zip(rows) {
        let (s, inv, condition) = row?;
        let det_s = det_of(&s)?.norm();
        let (inv_fields, det_inv, cond_field, product) = match &inv {
            Some((m, c)) => {
                let d = det_of(m)?.norm();
                (matrix_fields(m), d, num(*c), det_s * d)
            }
            None => {
                at_resonance += 1;
                (nan_fields(n), f64::INFINITY, num(f64::INFINITY), f64::NAN)
            }
        };
        if product.is_finite() {
            max_product_defect = max_product_defect.max((product - 1.0).abs());
        }
        let mut first = vec![num(z.re), num(z.im), physical.to_string()];
        first.extend(matrix_fields(&s));
        let phys_condition = if inv.is_some() { num(condition) } else { num(f64::INFINITY) };
        first.extend([num(det_s), phys_condition, num(product)]);
        csv.row(&first);
        let mut second = vec![num(z.re), num(z.im), continued.to_string()];
        second.extend(inv_fields);
        second.extend([num(det_inv), cond_field, num(product)]);
        csv.row(&second);
    }
    let path = csv.write(&out.join(&block.output))?;
    Ok(Outcome {
        outputs: vec![path],
        diagnostics: json!({
            "points": points.len(),
            "at_resonance": at_resonance,
            "max_product_defect": max_product_defect,
        }),
        status: None,
    })
}

/// Contours named by the `deform` block.
pub fn deform_contours(loaded: &Loaded) -> Result<Vec<(String, Contour)>, CliError> {
    let block = loaded.block(&loaded.config.deform, "deform")?;
    if block.contours.is_empty() {
        return Err(config_error("deform.contours", "name at least one contour"));
    }
    if !(block.threshold > 0.0) {
        return Err(config_error("deform.threshold", "threshold must be positive"));
    }
    let mut out = Vec::new();
    for (i, name) in block.contours.iter().enumerate() {
        let contour = loaded
            .contour(name)
            .map_err(|_| config_error(format!("deform.contours[{i}]"), format!("unknown contour {name}")))?;
        if contour.halfplane().is_none() {
            return Err(config_error(format!("deform.contours[{i}]"), "the contour must leave the real axis"));
        }
        if let Some((_, first)) = out.first() {
            let first: &Contour = first;
            if first.halfplane() != contour.halfplane() {
                return Err(config_error(format!("deform.contours[{i}]"), "all contours must dip into the same half-plane"));
            }
        }
        out.push((name.clone(), contour));
    }
    Ok(out)
}

fn spectrum_csv(spectrum: &DeformedSpectrum) -> Csv {
    let header = ["re", "im", "class", "distance"].map(String::from);
    let mut csv = Csv::new(&header);
    for e in spectrum.eigenvalues() {
        csv.row(&[num(e.value.re), num(e.value.im), e.class.label().to_string(), num(e.contour_distance)]);
    }
    csv
}

pub fn deform(loaded: &Loaded, out: &Path) -> Result<Outcome, CliError> {
    let contours = deform_contours(loaded)?;
    let block = loaded.config.deform.as_ref().expect("checked above");
    let spectra = contours
        .par_iter()
        .map(|(_, c)| deformed_spectrum(&loaded.kernel, c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut outputs = Vec::new();
    let mut summaries = Vec::new();
    for ((name, contour), spectrum) in contours.iter().zip(&spectra) {
        outputs.push(spectrum_csv(spectrum).write(&out.join(format!("spectrum_{name}.csv")))?);
        let count = |c: SpectralClass| spectrum.of_class(c).len();
        summaries.push(json!({
            "name": name,
            "node_count": spectrum.node_count(),
            "arc_length": contour.arc_length(),
            "tau": spectrum.tau(),
            "resonances": spectrum.resonances().into_iter().map(point_json).collect::<Vec<_>>(),
            "bound_states": spectrum.bound_states(),
            "counts": {
                "near_contour": count(SpectralClass::NearContour),
                "isolated_in_region": count(SpectralClass::IsolatedInRegion),
                "isolated_real": count(SpectralClass::IsolatedReal),
                "stray": count(SpectralClass::Stray),
            },
        }));
    }
    let mut independence = Vec::new();
    let mut max_distance: f64 = 0.0;
    for i in 0..spectra.len() {
        for j in i + 1..spectra.len() {
            let rep = compare_spectra(&spectra[i], &spectra[j], block.threshold)?;
            max_distance = max_distance.max(rep.max_distance());
            independence.push(json!({
                "first": contours[i].0,
                "second": contours[j].0,
                "max_distance": rep.max_distance(),
                "complete": rep.complete(),
                "shared": match_json(&rep.shared),
                "real": match_json(&rep.real),
                "only_first": rep.only_first.iter().copied().map(point_json).collect::<Vec<_>>(),
                "only_second": rep.only_second.iter().copied().map(point_json).collect::<Vec<_>>(),
            }));
        }
    }
    let report = json!({
        "config_digest": loaded.digest,
        "threshold": block.threshold,
        "contours": summaries,
        "independence": independence,
    });
    outputs.push(write_json(&out.join(&block.output), &report)?);
    Ok(Outcome {
        outputs,
        diagnostics: json!({"contours": contours.len(), "max_independence_distance": max_distance}),
        status: None,
    })
}

/// Kernel sampling checks plus the preconditions of every present block.
pub fn validate(loaded: &Loaded, out: &Path) -> Result<Outcome, CliError> {
    let block = loaded.config.validate.unwrap_or_default();
    let report = validate_kernel(&loaded.kernel, block.samples, loaded.config.seed)?;
    let mut checked = vec!["kernel", "contours"];
    if loaded.config.smatrix.is_some() {
        smatrix_energies(loaded)?;
        checked.push("smatrix");
    }
    if loaded.config.resonances.is_some() {
        resonance_plan(loaded)?;
        checked.push("resonances");
    }
    if loaded.config.sheetmap.is_some() {
        sheetmap_points(loaded)?;
        checked.push("sheetmap");
    }
    if loaded.config.deform.is_some() {
        deform_contours(loaded)?;
        checked.push("deform");
    }
    let passed = report.passed(block.tol);
    let value = json!({
        "config_digest": loaded.digest,
        "seed": loaded.config.seed,
        "samples": report.samples,
        "tol": block.tol,
        "hermiticity_residual": report.hermiticity_residual,
        "endpoint_max": report.endpoint_max,
        "schwarz_residual": report.schwarz_residual,
        "analyticity_residual": report.analyticity_residual,
        "scale": report.scale,
        "passed": passed,
        "checked_blocks": checked,
    });
    let path = write_json(&out.join("validation.json"), &value)?;
    let status = (!passed).then(|| config_error("kernel", "kernel failed the sampled structural checks; see validation.json"));
    Ok(Outcome {
        outputs: vec![path],
        diagnostics: json!({"passed": passed}),
        status,
    })
}

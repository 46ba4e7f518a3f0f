//! Campaign runner shared by the command-line tool and the C interface.
//!
//! Every command reads one [`ExperimentConfig`], expands its per-experiment
//! overrides and writes its tables into an output directory. Files are written
//! to a temporary name first and renamed into place.

use crate::config::{ExperimentConfig, MeshSpec, TensorFieldSpec};
use crate::couple::CoupleField;
use crate::error::{Error, Result};
use crate::geometry::{
    check_fatness, cover_epsilon, geometric_constants, make_domain, GeometricConstants, Inclusion,
    PlateDomain, Shape,
};
use crate::mesh::{generate_mesh, Mesh, MeshOptions, Refinement};
use crate::morley::MorleySpace;
use crate::plate::{
    assemble, hessian_integral_elements, hessian_sup_elements, load_functional, solve_normalized,
    solve_problem, work, DiscIntegrator, Material, SolveOutcome,
};
use crate::size::{
    area_lower_certificate, area_upper_certificate, calibrate_constants, k_from_lps, linear_fit,
    theorem_bracket, verify_energy_lemma, xi_bounds, Calibration, EnergyBudget, ExperimentRecord,
};
use crate::smallness::{
    boundary_data_bound_check, chain_budget, frequency_scan, hex_centers, large_rho_branch,
    lps_fit, lps_scan_in, three_spheres_fit, three_spheres_sample, LpsPoint,
};
use crate::tensor::{
    classify_dichotomy, classify_jump, ellipticity_gamma, regularity_m, sample_grid,
    DichotomyClass, JumpReport, JumpSign, PlateTensorField, TensorField, DICHOTOMY_ZERO_TOL,
};
use crate::Vec2;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Upper limit on lattice centres in one propagation-of-smallness scan.
const MAX_CENTERS: f64 = 20_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckTensor,
    Solve,
    Scan,
    Calibrate,
    Bounds,
    All,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::CheckTensor,
        Command::Solve,
        Command::Scan,
        Command::Calibrate,
        Command::Bounds,
        Command::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CheckTensor => "check-tensor",
            Command::Solve => "solve",
            Command::Scan => "scan",
            Command::Calibrate => "calibrate",
            Command::Bounds => "bounds",
            Command::All => "all",
        }
    }

    pub fn parse(name: &str) -> Result<Command> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown command {name:?}")))
    }
}

/// Runs one command and returns its JSON summary.
pub fn run_command(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Value> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    write_atomic(&out.join("resolved_config.json"), cfg.to_json().as_bytes())?;
    match cmd {
        Command::CheckTensor => check_tensor(cfg, out),
        Command::Solve => solve(cfg, out),
        Command::Scan => scan(cfg, out),
        Command::Calibrate => calibrate(cfg, out),
        Command::Bounds => bounds(cfg, out),
        Command::All => {
            let mut summary = serde_json::Map::new();
            for c in &Command::ALL[..5] {
                summary.insert(c.name().to_string(), run_command(*c, cfg, out)?);
            }
            Ok(Value::Object(summary))
        }
    }
}

// ---------------------------------------------------------------------------
// Experiment setup

/// One fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub index: usize,
    pub config: ExperimentConfig,
    /// Seed drawn for this experiment from the campaign generator.
    pub seed: u64,
    pub dom: PlateDomain,
    pub reference: TensorField,
    pub plate: PlateTensorField,
    pub inclusion: Option<(Inclusion, PlateTensorField)>,
    pub field: CoupleField,
    pub samples: Vec<Vec2>,
}

/// Tensor constants of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TensorConstants {
    pub gamma: f64,
    pub m: f64,
    pub xi0: f64,
    pub xi1: f64,
    pub jump: Option<JumpReport>,
}

/// Expands the overrides and resolves every experiment.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Vec<Experiment>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let configs = cfg.expand()?;
    let seeds: Vec<u64> = configs.iter().map(|_| rng.next_u64()).collect();
    configs
        .into_iter()
        .zip(seeds)
        .enumerate()
        .map(|(i, (c, seed))| Experiment::new(i, c, seed))
        .collect()
}

impl Experiment {
    pub fn new(index: usize, config: ExperimentConfig, seed: u64) -> Result<Experiment> {
        let dom = make_domain(&config.domain)?;
        let reference = config.tensor.reference.build(None)?;
        let plate = PlateTensorField::new(reference.clone(), config.tensor.thickness);
        let inclusion = match (&config.inclusion, &config.tensor.inclusion) {
            (Some(g), Some(t)) => {
                let shape = g.shape.build()?;
                let tilde =
                    PlateTensorField::new(t.build(Some(&reference))?, config.tensor.thickness);
                Some((
                    Inclusion {
                        shape,
                        d0: g.d0,
                        h1: g.h1,
                    },
                    tilde,
                ))
            }
            _ => None,
        };
        let field = config.couple.build(&dom.curve, &plate, seed)?;
        let samples = tensor_samples(&dom, config.constants.tensor_grid);
        Ok(Experiment {
            index,
            config,
            seed,
            dom,
            reference,
            plate,
            inclusion,
            field,
            samples,
        })
    }

    pub fn tensor_constants(&self) -> Result<TensorConstants> {
        let gamma = ellipticity_gamma(&self.reference, &self.samples)?;
        let m = regularity_m(&self.reference, &self.samples, self.dom.rho0);
        let (xi0, xi1) = xi_bounds(gamma, m, self.config.tensor.thickness);
        let jump = match &self.inclusion {
            Some((_, tilde)) => Some(classify_jump(&self.reference, &tilde.base, &self.samples)?),
            None => None,
        };
        Ok(TensorConstants {
            gamma,
            m,
            xi0,
            xi1,
            jump,
        })
    }

    /// `h0` from the configuration or from a connectivity scan of `Ω_h`.
    pub fn h0(&self) -> (f64, &'static str) {
        if let Some(h0) = self.config.constants.h0 {
            return (h0, "configured");
        }
        let grid: Vec<f64> = (1..100).map(|i| i as f64 * 0.01 * self.dom.rho0).collect();
        let first_bad = self.dom.connectivity_scan(&grid, 200);
        let h0 = grid
            .iter()
            .rev()
            .copied()
            .find(|&g| g < first_bad)
            .unwrap_or(0.5 * grid[0]);
        (h0 / self.dom.rho0, "connectivity scan")
    }

    pub fn geometric_constants(&self) -> Result<GeometricConstants> {
        geometric_constants(self.dom.m0, self.h0().0)
    }

    pub fn inclusion_shape(&self) -> Option<&Shape> {
        self.inclusion.as_ref().map(|(i, _)| &i.shape)
    }

    pub fn levels(&self) -> usize {
        self.config.mesh.levels
    }
}

fn tensor_samples(dom: &PlateDomain, n: usize) -> Vec<Vec2> {
    // slightly larger than the domain so the audit covers a neighbourhood of it
    let (lo, hi) = dom.bbox();
    let pad = 0.05 * (hi - lo);
    sample_grid(lo - pad, hi + pad, n.max(2))
}

/// Mesh options for a refinement level, refined towards `shape` if given.
pub fn mesh_options(spec: &MeshSpec, level: usize, shape: Option<&Shape>) -> MeshOptions {
    let h = spec.h / 2f64.powi(level as i32);
    let mut opts = MeshOptions::uniform(h);
    opts.smoothing_passes = spec.smoothing_passes;
    if let Some(shape) = shape {
        if spec.refine_inclusion || spec.fit_interface {
            let h_fine = if spec.refine_inclusion {
                h * spec.fine_factor
            } else {
                h
            };
            opts.refinement = Some(Refinement {
                shape: shape.clone(),
                h_fine,
                grading: spec.grading,
                fit_interface: spec.fit_interface,
            });
        }
    }
    opts
}

/// Reference and perturbed solves on one mesh.
pub struct PairSolve {
    pub level: usize,
    pub h: f64,
    pub space: MorleySpace,
    pub reference: SolveOutcome,
    pub perturbed: Option<SolveOutcome>,
    /// Elements assigned to the inclusion.
    pub mask: Vec<bool>,
    pub discrete_area: f64,
    pub budget: Option<EnergyBudget>,
}

/// Solves the problem with and without the inclusion at a refinement level.
pub fn solve_pair(exp: &Experiment, consts: &TensorConstants, level: usize) -> Result<PairSolve> {
    let opts = mesh_options(&exp.config.mesh, level, exp.inclusion_shape());
    let mesh = generate_mesh(&exp.dom, &opts)?;
    let space = MorleySpace::new(mesh, &exp.dom);
    let (_, reference) = solve_problem(
        &space,
        &exp.dom,
        &Material::homogeneous(exp.plate.clone()),
        &exp.field,
    )?;
    let mut out = PairSolve {
        level,
        h: opts.h,
        mask: vec![false; space.mesh.num_triangles()],
        discrete_area: 0.0,
        space,
        reference,
        perturbed: None,
        budget: None,
    };
    if let Some((inc, tilde)) = &exp.inclusion {
        let material =
            Material::with_inclusion(exp.plate.clone(), inc.shape.clone(), tilde.clone());
        out.mask = material.inclusion_elements(&out.space);
        let (_, perturbed) = solve_problem(&out.space, &exp.dom, &material, &exp.field)?;
        out.discrete_area = out
            .mask
            .iter()
            .zip(&out.space.elements)
            .filter(|(m, _)| **m)
            .map(|(_, e)| e.area)
            .sum();
        if let Some(j) = consts.jump.filter(|j| j.sign != JumpSign::Neither) {
            let sol = &out.reference.solution;
            out.budget = Some(EnergyBudget {
                w: perturbed.work,
                w0: out.reference.work,
                hess_d: hessian_integral_elements(&out.space, sol, &out.mask),
                hess_sup_d: hessian_sup_elements(sol, &out.mask),
                xi0: consts.xi0,
                xi1: consts.xi1,
                eta0: j.eta0,
                eta1: j.eta1,
                sign: j.sign,
            });
        }
        out.perturbed = Some(perturbed);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// check-tensor

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn audit(exp: &Experiment) -> (Value, Option<Error>) {
    let mut checks: Vec<Check> = Vec::new();
    let mut first_error: Option<Error> = None;
    let mut record = |name: &'static str, res: std::result::Result<String, Error>| match res {
        Ok(detail) => checks.push(Check {
            name,
            ok: true,
            detail,
        }),
        Err(e) => {
            checks.push(Check {
                name,
                ok: false,
                detail: e.to_string(),
            });
            first_error.get_or_insert(e);
        }
    };
    let c = &exp.config.constants;

    let gamma = ellipticity_gamma(&exp.reference, &exp.samples);
    record(
        "reference_ellipticity",
        gamma.clone().map(|g| format!("gamma = {g:.6e}")),
    );
    let m = regularity_m(&exp.reference, &exp.samples, exp.dom.rho0);
    let dichotomy = classify_dichotomy(&exp.reference, &exp.samples, DICHOTOMY_ZERO_TOL);
    record(
        "dichotomy",
        match &dichotomy {
            Ok(r) if r.classification == DichotomyClass::Violated => Err(Error::DichotomyViolated(
                format!("witnesses {:?}", r.witnesses),
            )),
            Ok(r) => Ok(format!("{:?}, mu = {:.6e}", r.classification, r.mu)),
            Err(e) => Err(e.clone()),
        },
    );

    let mut inclusion_json = Value::Null;
    if let Some((inc, tilde)) = &exp.inclusion {
        let g = ellipticity_gamma(&tilde.base, &exp.samples);
        record(
            "inclusion_ellipticity",
            g.clone().map(|g| format!("gamma = {g:.6e}")),
        );
        let jump = classify_jump(&exp.reference, &tilde.base, &exp.samples);
        record(
            "jump",
            match &jump {
                Ok(j) if j.sign == JumpSign::Neither => Err(Error::HypothesisFailed(format!(
                    "inclusion tensor is neither uniformly stiffer nor softer (eta0 = {:.4e}, eta1 = {:.4e})",
                    j.eta0, j.eta1
                ))),
                Ok(j) => Ok(format!("{} eta0 = {:.6e} eta1 = {:.6e}", j.sign.label(), j.eta0, j.eta1)),
                Err(e) => Err(e.clone()),
            },
        );
        let standoff = exp.dom.check_standoff(&inc.shape, inc.d0);
        record(
            "standoff",
            standoff
                .clone()
                .map(|d| format!("dist(D, boundary) = {d:.6e}")),
        );
        let fat = check_fatness(inc, exp.dom.rho0);
        record(
            "fatness",
            if fat.fat {
                Ok(format!(
                    "eroded area {:.6e} of {:.6e}",
                    fat.eroded_area, fat.area
                ))
            } else {
                Err(Error::HypothesisFailed(format!(
                    "eroded area {:.6e} is below half of {:.6e}",
                    fat.eroded_area, fat.area
                )))
            },
        );
        inclusion_json = json!({
            "area": inc.area(),
            "d0": inc.d0,
            "h1": inc.h1,
            "gamma": g.ok(),
            "jump": jump.ok(),
            "standoff": standoff.ok(),
            "fatness": fat,
        });
    }

    let compat = exp.field.check_compatibility(c.compat_tol);
    record(
        "couple_compatibility",
        if compat.compatible {
            Ok(format!("residuals {:?}", compat.residuals))
        } else {
            Err(Error::HypothesisFailed(format!(
                "affine residuals {:?} exceed tolerance",
                compat.residuals
            )))
        },
    );
    let norms = exp.field.norms(exp.dom.rho0);
    record(
        "couple_nonzero",
        if norms.l2 > 0.0 {
            Ok(format!("L2 = {:.6e}", norms.l2))
        } else {
            Err(Error::ZeroSolution)
        }
        .map_err(|_| Error::HypothesisFailed("couple field vanishes".into())),
    );
    let delta0 = exp.field.delta0();
    if let Some(min) = c.delta0 {
        record(
            "support_gap",
            if delta0 >= min {
                Ok(format!("delta0 = {delta0:.6}"))
            } else {
                Err(Error::HypothesisFailed(format!(
                    "delta0 = {delta0:.6} below {min}"
                )))
            },
        );
    }
    if let Some(cap) = c.f_cap {
        record(
            "frequency_cap",
            if norms.f <= cap {
                Ok(format!("F = {:.6e}", norms.f))
            } else {
                Err(Error::HypothesisFailed(format!(
                    "F = {:.6e} exceeds {cap}",
                    norms.f
                )))
            },
        );
    }

    let (h0, h0_source) = exp.h0();
    let gc = geometric_constants(exp.dom.m0, h0);
    let ok = checks.iter().all(|c| c.ok);
    let report = json!({
        "experiment": exp.index,
        "ok": ok,
        "checks": checks,
        "reference": {
            "gamma": gamma.ok(),
            "m": m,
            "dichotomy": dichotomy.ok(),
        },
        "inclusion": inclusion_json,
        "domain": {
            "rho0": exp.dom.rho0,
            "m0": exp.dom.m0,
            "m1": exp.dom.m1,
            "area": exp.dom.area,
            "diameter": exp.dom.diameter(),
            "h0": h0,
            "h0_source": h0_source,
        },
        "geometric_constants": gc.ok(),
        "couple": {
            "compatibility": compat,
            "norms": norms,
            "delta0": delta0,
        },
    });
    (report, first_error)
}

fn check_tensor(cfg: &ExperimentConfig, out: &Path) -> Result<Value> {
    let exps = prepare(cfg)?;
    let audits: Vec<(Value, Option<Error>)> = exps.par_iter().map(audit).collect();
    let ok = audits.iter().all(|(_, e)| e.is_none());
    let report = json!({
        "ok": ok,
        "experiments": audits.iter().map(|(v, _)| v.clone()).collect::<Vec<_>>(),
    });
    write_json(&out.join("check_tensor.json"), &report)?;
    if let Some(e) = audits.into_iter().find_map(|(_, e)| e) {
        return Err(e);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// solve

/// One row of `works.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct WorkRow {
    pub experiment: usize,
    pub level: usize,
    pub h: f64,
    pub elements: usize,
    pub dofs: usize,
    pub min_angle: f64,
    pub true_area: Option<f64>,
    pub discrete_area: Option<f64>,
    pub w0: f64,
    pub energy0: f64,
    pub identity0: f64,
    pub backward_error0: f64,
    pub w: Option<f64>,
    pub energy: Option<f64>,
    pub identity: Option<f64>,
    pub backward_error: Option<f64>,
    pub sign: Option<&'static str>,
    pub sign_consistent: Option<bool>,
    pub rel_gap: Option<f64>,
    pub hess_d: Option<f64>,
    pub lemma_lower: Option<f64>,
    pub lemma_upper: Option<f64>,
    pub lower_slack: Option<f64>,
    pub upper_slack: Option<f64>,
    pub lemma_holds: Option<bool>,
}

fn work_row(exp: &Experiment, p: &PairSolve) -> WorkRow {
    let mesh = &p.space.mesh;
    let r = &p.reference;
    let mut row = WorkRow {
        experiment: exp.index,
        level: p.level,
        h: p.h,
        elements: mesh.num_triangles(),
        dofs: p.space.ndof(),
        min_angle: mesh.min_angle_deg(),
        true_area: exp.inclusion.as_ref().map(|(i, _)| i.area()),
        discrete_area: exp.inclusion.as_ref().map(|_| p.discrete_area),
        w0: r.work,
        energy0: r.energy,
        identity0: r.identity_residual,
        backward_error0: r.solution.backward_error,
        w: p.perturbed.as_ref().map(|o| o.work),
        energy: p.perturbed.as_ref().map(|o| o.energy),
        identity: p.perturbed.as_ref().map(|o| o.identity_residual),
        backward_error: p.perturbed.as_ref().map(|o| o.solution.backward_error),
        sign: None,
        sign_consistent: None,
        rel_gap: None,
        hess_d: None,
        lemma_lower: None,
        lemma_upper: None,
        lower_slack: None,
        upper_slack: None,
        lemma_holds: None,
    };
    if let Some(b) = &p.budget {
        row.sign = Some(b.sign.label());
        row.hess_d = Some(b.hess_d);
        match verify_energy_lemma(b, exp.config.constants.slack) {
            Ok(l) => {
                row.sign_consistent = Some(true);
                row.rel_gap = b.rel_gap().ok();
                row.lemma_lower = Some(l.lower);
                row.lemma_upper = Some(l.upper);
                row.lower_slack = Some(l.lower_slack);
                row.upper_slack = Some(l.upper_slack);
                row.lemma_holds = Some(l.holds());
            }
            Err(_) => row.sign_consistent = Some(false),
        }
    }
    row
}

fn solve(cfg: &ExperimentConfig, out: &Path) -> Result<Value> {
    let exps = prepare(cfg)?;
    let results: Vec<Result<(Vec<WorkRow>, Value)>> =
        exps.par_iter().map(|e| solve_one(e, out)).collect();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for r in results {
        let (mut r, s) = r?;
        rows.append(&mut r);
        summaries.push(s);
    }
    write_csv(&out.join("works.csv"), &rows)?;
    let summary = json!({
        "seed": cfg.seed,
        "experiments": summaries,
        "max_identity_residual": rows
            .iter()
            .flat_map(|r| [Some(r.identity0), r.identity])
            .flatten()
            .fold(0.0f64, f64::max),
    });
    write_json(&out.join("solve.json"), &summary)?;
    Ok(summary)
}

fn solve_one(exp: &Experiment, out: &Path) -> Result<(Vec<WorkRow>, Value)> {
    let consts = exp.tensor_constants()?;
    let mut rows = Vec::new();
    let mut finest = None;
    for level in 0..exp.levels() {
        let p = solve_pair(exp, &consts, level)?;
        rows.push(work_row(exp, &p));
        finest = Some(p);
    }
    let p = finest.expect("at least one level");
    let dir = out.join(format!("experiment_{:03}", exp.index));
    fs::create_dir_all(&dir)?;
    write_solution_files(&dir, &p)?;
    let last = rows.last().expect("at least one level");
    let summary = json!({
        "experiment": exp.index,
        "seed": exp.seed,
        "tensor_constants": consts,
        "finest": last,
        "output_dir": dir.file_name().map(|n| n.to_string_lossy().into_owned()),
    });
    Ok((rows, summary))
}

fn write_solution_files(dir: &Path, p: &PairSolve) -> Result<()> {
    let mesh = &p.space.mesh;
    let nv = mesh.vertices.len();
    let w0 = &p.reference.solution;
    let w = p.perturbed.as_ref().map(|o| &o.solution);

    #[derive(Serialize)]
    struct VertexRow {
        id: usize,
        x: f64,
        y: f64,
        w0: f64,
        w: Option<f64>,
    }
    let verts: Vec<VertexRow> = (0..nv)
        .map(|i| VertexRow {
            id: i,
            x: mesh.vertices[i].x,
            y: mesh.vertices[i].y,
            w0: w0.dofs[i],
            w: w.map(|s| s.dofs[i]),
        })
        .collect();
    write_csv(&dir.join("mesh_vertices.csv"), &verts)?;

    #[derive(Serialize)]
    struct TriangleRow {
        id: usize,
        v0: usize,
        v1: usize,
        v2: usize,
        inclusion: bool,
        h11_0: f64,
        h22_0: f64,
        h12_0: f64,
        h11: Option<f64>,
        h22: Option<f64>,
        h12: Option<f64>,
    }
    let tris: Vec<TriangleRow> = mesh
        .triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| TriangleRow {
            id: t,
            v0: tri[0],
            v1: tri[1],
            v2: tri[2],
            inclusion: p.mask[t],
            h11_0: w0.hessians[t][0],
            h22_0: w0.hessians[t][1],
            h12_0: w0.hessians[t][2],
            h11: w.map(|s| s.hessians[t][0]),
            h22: w.map(|s| s.hessians[t][1]),
            h12: w.map(|s| s.hessians[t][2]),
        })
        .collect();
    write_csv(&dir.join("mesh_triangles.csv"), &tris)?;

    let mut point_data: Vec<(&str, Vec<f64>)> = vec![("w0", w0.dofs[..nv].to_vec())];
    let mut cell_data: Vec<(&str, Vec<f64>)> = vec![
        (
            "inclusion",
            p.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
        ),
        (
            "hess_sq_w0",
            (0..mesh.num_triangles()).map(|t| w0.hess_sq(t)).collect(),
        ),
    ];
    if let Some(s) = w {
        point_data.push(("w", s.dofs[..nv].to_vec()));
        cell_data.push((
            "hess_sq_w",
            (0..mesh.num_triangles()).map(|t| s.hess_sq(t)).collect(),
        ));
    }
    write_atomic(
        &dir.join("solution.vtk"),
        vtk_legacy(mesh, &point_data, &cell_data).as_bytes(),
    )
}

/// Legacy ASCII VTK unstructured grid of linear triangles.
pub fn vtk_legacy(
    mesh: &Mesh,
    point_data: &[(&str, Vec<f64>)],
    cell_data: &[(&str, Vec<f64>)],
) -> String {
    let mut s = String::new();
    let nv = mesh.vertices.len();
    let nt = mesh.triangles.len();
    s.push_str(
        "# vtk DataFile Version 3.0\nplatesize solution\nASCII\nDATASET UNSTRUCTURED_GRID\n",
    );
    let _ = writeln!(s, "POINTS {nv} double");
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} 0", v.x, v.y);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let mut section = |header: String, data: &[(&str, Vec<f64>)]| {
        if data.is_empty() {
            return;
        }
        s.push_str(&header);
        for (name, values) in data {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in values {
                let _ = writeln!(s, "{v}");
            }
        }
    };
    section(format!("POINT_DATA {nv}\n"), point_data);
    section(format!("CELL_DATA {nt}\n"), cell_data);
    s
}

// ---------------------------------------------------------------------------
// scan

fn capped_spacing(dom: &PlateDomain, rho: f64) -> f64 {
    (rho / 2.0).max((dom.area / MAX_CENTERS).sqrt())
}

/// Default radius grid: geometric with ratio √2 below `0.1·ρ0`.
pub fn default_rho_grid(rho0: f64) -> Vec<f64> {
    (0..8)
        .map(|k| 0.1 * rho0 / std::f64::consts::SQRT_2.powi(k))
        .collect()
}

fn scan(cfg: &ExperimentConfig, out: &Path) -> Result<Value> {
    let exps = prepare(cfg)?;
    let exp = &exps[0];
    let camp = &exp.config.campaign;
    let consts = &exp.config.constants;
    let gc = exp.geometric_constants()?;
    let level = exp.levels() - 1;
    let opts = mesh_options(&exp.config.mesh, level, None);
    let space = MorleySpace::new(generate_mesh(&exp.dom, &opts)?, &exp.dom);
    let asm = assemble(&space, &Material::homogeneous(exp.plate.clone()))?;
    let ell = load_functional(&space, &exp.dom, &exp.field);
    let sol = solve_normalized(&space, &asm.matrix, &ell)?;
    let integ = DiscIntegrator::new(&space, &exp.dom, &sol);
    let rho0 = exp.dom.rho0;

    // frequency ratio
    let freq = frequency_scan(&space, &exp.dom, &sol, &camp.r_grid);
    #[derive(Serialize)]
    struct FreqRow {
        r: f64,
        ratio: f64,
    }
    let rows: Vec<FreqRow> = freq
        .rows
        .iter()
        .map(|&(r, ratio)| FreqRow { r, ratio })
        .collect();
    write_csv(&out.join("frequency.csv"), &rows)?;

    // propagation of smallness
    let grid = camp
        .rho_grid
        .clone()
        .unwrap_or_else(|| default_rho_grid(rho0));
    let scans: Vec<(f64, Result<LpsPoint>)> = grid
        .iter()
        .map(|&rho| {
            (
                rho,
                lps_scan_in(
                    &integ,
                    &exp.dom,
                    rho,
                    gc.s * rho,
                    capped_spacing(&exp.dom, rho),
                ),
            )
        })
        .collect();
    #[derive(Serialize)]
    struct LpsRow {
        rho: f64,
        min_ratio: Option<f64>,
        argmin_x: Option<f64>,
        argmin_y: Option<f64>,
        centers: usize,
        status: String,
    }
    let lps_rows: Vec<LpsRow> = scans
        .iter()
        .map(|(rho, r)| match r {
            Ok(p) => LpsRow {
                rho: *rho,
                min_ratio: Some(p.min_ratio),
                argmin_x: Some(p.argmin[0]),
                argmin_y: Some(p.argmin[1]),
                centers: p.centers,
                status: "ok".into(),
            },
            Err(e) => LpsRow {
                rho: *rho,
                min_ratio: None,
                argmin_x: None,
                argmin_y: None,
                centers: 0,
                status: e.to_string(),
            },
        })
        .collect();
    write_csv(&out.join("lps.csv"), &lps_rows)?;
    let points: Vec<LpsPoint> = scans
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok().copied())
        .collect();
    let fit = lps_fit(&points, rho0);

    // three spheres
    let radii = camp.three_spheres_radii;
    let centers = hex_centers(
        &exp.dom,
        camp.three_spheres_spacing,
        radii[2] * (1.0 + 1e-9),
    );
    let samples: Vec<_> = centers
        .iter()
        .map(|&c| three_spheres_sample(&integ, c, radii))
        .collect::<Result<Vec<_>>>()?;
    #[derive(Serialize)]
    struct SphereRow {
        x: f64,
        y: f64,
        r1: f64,
        r2: f64,
        r3: f64,
        i1: f64,
        i2: f64,
        i3: f64,
    }
    let sphere_rows: Vec<SphereRow> = samples
        .iter()
        .map(|s| SphereRow {
            x: s.center[0],
            y: s.center[1],
            r1: s.radii[0],
            r2: s.radii[1],
            r3: s.radii[2],
            i1: s.integrals[0],
            i2: s.integrals[1],
            i3: s.integrals[2],
        })
        .collect();
    write_csv(&out.join("three_spheres.csv"), &sphere_rows)?;
    let ts_fit = three_spheres_fit(&samples);

    // boundary data bound over a random family sharing the mesh
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let family: Vec<(u64, f64)> = (0..camp.random_family)
        .map(|_| {
            (
                rng.next_u64(),
                (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 0.35,
            )
        })
        .collect();
    let members: Vec<Result<Value>> = family
        .par_iter()
        .map(|&(seed, t0)| {
            let field = CoupleField::random_fourier(&exp.dom.curve, (t0, t0 + 0.6), 6, seed)?;
            let ell = load_functional(&space, &exp.dom, &field);
            let s = solve_normalized(&space, &asm.matrix, &ell)?;
            let ratio = boundary_data_bound_check(&field, &space, &s, rho0)?;
            let f = frequency_scan(&space, &exp.dom, &s, &camp.r_grid);
            Ok(json!({
                "seed": seed,
                "support": [t0, t0 + 0.6],
                "ratio": ratio,
                "work": work(&ell, &s),
                "rho_tilde_emp": f.rho_tilde_emp,
            }))
        })
        .collect();
    let members = members.into_iter().collect::<Result<Vec<_>>>()?;
    let mut ratios: Vec<f64> = members.iter().filter_map(|m| m["ratio"].as_f64()).collect();
    ratios.sort_by(|a, b| a.total_cmp(b));
    let median = if ratios.is_empty() {
        f64::NAN
    } else {
        ratios[ratios.len() / 2]
    };
    let max = ratios.last().copied().unwrap_or(f64::NAN);

    // chain bookkeeping
    let delta = consts
        .delta
        .or(ts_fit.as_ref().ok().filter(|f| f.feasible).map(|f| f.delta));
    let delta_chi = consts.delta_chi.or(delta);
    let rho_star = consts.rho_star.unwrap_or(gc.rho_bar);
    let chain = match (delta, delta_chi) {
        (Some(d), Some(dc)) => chain_budget(
            rho_star,
            &gc,
            exp.dom.m1,
            d,
            dc,
            consts.a1,
            consts.b1,
            consts.rho_star,
        )
        .map_err(|e| e.to_string()),
        _ => Err(
            "no exponent available: three-spheres fit infeasible and delta not configured"
                .to_string(),
        ),
    };
    let large_rho = match &fit {
        Ok(f) => {
            let rs = rho_star * rho0;
            match lps_scan_in(&integ, &exp.dom, rs, gc.s * rs, capped_spacing(&exp.dom, rs)) {
                Ok(p) => grid
                    .iter()
                    .filter(|&&r| r > rs)
                    .map(|&r| {
                        let b = large_rho_branch(r, rs, gc.s, &exp.dom, p.min_ratio, f.a_envelope, f.b);
                        json!({"rho": r, "c_star": p.min_ratio, "result": b.as_ref().ok(), "error": b.err().map(|e| e.to_string())})
                    })
                    .collect::<Vec<_>>(),
                Err(e) => vec![json!({"rho_star": rs, "error": e.to_string()})],
            }
        }
        Err(_) => Vec::new(),
    };

    let summary = json!({
        "experiment": exp.index,
        "elements": space.mesh.num_triangles(),
        "geometric_constants": gc,
        "h0_source": exp.h0().1,
        "frequency": { "rho_tilde_emp": freq.rho_tilde_emp },
        "lps": {
            "points": points,
            "fit": fit.as_ref().ok(),
            "fit_error": fit.as_ref().err().map(|e| e.to_string()),
        },
        "three_spheres": {
            "samples": samples.len(),
            "fit": ts_fit.as_ref().ok(),
            "fit_error": ts_fit.as_ref().err().map(|e| e.to_string()),
        },
        "boundary_data": {
            "members": members,
            "median_ratio": median,
            "max_ratio": max,
            "bounded": max <= 10.0 * median,
        },
        "chain": {
            "empirical": true,
            "rho": rho_star,
            "budget": chain.as_ref().ok(),
            "error": chain.err(),
        },
        "large_rho": large_rho,
    });
    write_json(&out.join("scan.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// calibrate

/// One member of the calibration family.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationRow {
    pub tensor: usize,
    pub member: usize,
    pub radius: f64,
    pub true_area: f64,
    pub discrete_area: f64,
    pub w0: f64,
    pub w: f64,
    pub sign: &'static str,
    pub rel_gap: f64,
    pub held_out: bool,
    pub bracket_lower: Option<f64>,
    pub bracket_upper: Option<f64>,
    pub covered: Option<bool>,
}

fn calibrate(cfg: &ExperimentConfig, out: &Path) -> Result<Value> {
    let exps = prepare(cfg)?;
    let base = &exps[0];
    let camp = &base.config.campaign;
    let mut tensors: Vec<TensorFieldSpec> = Vec::new();
    for e in &exps {
        if let Some(t) = &e.config.tensor.inclusion {
            if !tensors.contains(t) {
                tensors.push(t.clone());
            }
        }
    }
    if tensors.is_empty() {
        return Err(Error::Config(
            "calibration needs an inclusion tensor".into(),
        ));
    }
    let d0 = base.config.inclusion.as_ref().map(|i| i.d0).unwrap_or(0.1);
    let tildes = tensors
        .iter()
        .map(|t| {
            Ok(PlateTensorField::new(
                t.build(Some(&base.reference))?,
                base.config.tensor.thickness,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let consts = base.tensor_constants()?;
    let jumps = tildes
        .iter()
        .map(|t| classify_jump(&base.reference, &t.base, &base.samples))
        .collect::<Result<Vec<_>>>()?;
    for j in &jumps {
        if j.sign == JumpSign::Neither {
            return Err(Error::HypothesisFailed(
                "calibration tensor has no definite jump sign".into(),
            ));
        }
    }
    let center = Vec2::from(camp.family_center);
    let level = base.levels() - 1;

    let members: Vec<Result<Vec<(usize, usize, f64, ExperimentRecord, f64, f64, f64)>>> = camp
        .inclusion_radii
        .par_iter()
        .enumerate()
        .map(|(m, &r)| {
            let shape = Shape::disc(center, r)?;
            base.dom.check_standoff(&shape, d0)?;
            let opts = mesh_options(&base.config.mesh, level, Some(&shape));
            let space = MorleySpace::new(generate_mesh(&base.dom, &opts)?, &base.dom);
            let (_, reference) = solve_problem(
                &space,
                &base.dom,
                &Material::homogeneous(base.plate.clone()),
                &base.field,
            )?;
            let mut rows = Vec::new();
            for (ti, tilde) in tildes.iter().enumerate() {
                let material =
                    Material::with_inclusion(base.plate.clone(), shape.clone(), tilde.clone());
                let mask = material.inclusion_elements(&space);
                let (_, pert) = solve_problem(&space, &base.dom, &material, &base.field)?;
                let sol = &reference.solution;
                let budget = EnergyBudget {
                    w: pert.work,
                    w0: reference.work,
                    hess_d: hessian_integral_elements(&space, sol, &mask),
                    hess_sup_d: hessian_sup_elements(sol, &mask),
                    xi0: consts.xi0,
                    xi1: consts.xi1,
                    eta0: jumps[ti].eta0,
                    eta1: jumps[ti].eta1,
                    sign: jumps[ti].sign,
                };
                let area: f64 = mask
                    .iter()
                    .zip(&space.elements)
                    .filter(|(k, _)| **k)
                    .map(|(_, e)| e.area)
                    .sum();
                let record = ExperimentRecord {
                    true_area: shape.shape_area(),
                    rho0: base.dom.rho0,
                    budget,
                };
                rows.push((ti, m, r, record, area, reference.work, pert.work));
            }
            Ok(rows)
        })
        .collect();
    let mut all = Vec::new();
    for m in members {
        all.extend(m?);
    }
    all.sort_by_key(|row| (row.0, row.1));

    let held_out = |m: usize| m % camp.holdout_every == 1;
    let training: Vec<ExperimentRecord> =
        all.iter().filter(|r| !held_out(r.1)).map(|r| r.3).collect();
    let calibration = calibrate_constants(&training)?;

    let mut rows = Vec::new();
    let (mut tested, mut covered) = (0usize, 0usize);
    for (ti, m, r, rec, area, w0, w) in &all {
        let rel = rec.budget.rel_gap()?;
        let ho = held_out(*m);
        let (mut lo, mut hi, mut cov) = (None, None, None);
        if ho {
            let (a, b) = theorem_bracket(Some(&calibration), &rec.budget, rec.rho0)?;
            let c = a <= rec.true_area && rec.true_area <= b;
            tested += 1;
            covered += c as usize;
            (lo, hi, cov) = (Some(a), Some(b), Some(c));
        }
        rows.push(CalibrationRow {
            tensor: *ti,
            member: *m,
            radius: *r,
            true_area: rec.true_area,
            discrete_area: *area,
            w0: *w0,
            w: *w,
            sign: rec.budget.sign.label(),
            rel_gap: rel,
            held_out: ho,
            bracket_lower: lo,
            bracket_upper: hi,
            covered: cov,
        });
    }
    write_csv(&out.join("calibration.csv"), &rows)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.true_area.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.rel_gap.ln()).collect();
    let (intercept_all, slope_all) = linear_fit(&xs, &ys).unwrap_or((f64::NAN, f64::NAN));
    let summary = json!({
        "calibration": calibration,
        "tensors": tensors,
        "jumps": jumps,
        "slope_all": slope_all,
        "intercept_all": intercept_all,
        "held_out": tested,
        "covered": covered,
        "coverage": if tested > 0 { covered as f64 / tested as f64 } else { f64::NAN },
        "seed": cfg.seed,
    });
    write_json(&out.join("calibration.json"), &summary)?;
    Ok(summary)
}

/// Reads the calibration written by a previous `calibrate` run.
pub fn load_calibration(out: &Path) -> Result<Option<Calibration>> {
    let path = out.join("calibration.json");
    if !path.exists() {
        return Ok(None);
    }
    let v: Value = serde_json::from_str(&fs::read_to_string(&path)?)?;
    Ok(Some(serde_json::from_value(v["calibration"].clone())?))
}

// ---------------------------------------------------------------------------
// bounds

/// One row of `bounds.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsRow {
    pub experiment: usize,
    pub true_area: f64,
    pub discrete_area: f64,
    pub sign: &'static str,
    pub sign_consistent: bool,
    pub rel_gap: Option<f64>,
    pub lemma_holds: Option<bool>,
    pub lower_certificate: Option<f64>,
    pub k_lps: Option<f64>,
    pub upper_from_hessian: Option<f64>,
    pub upper_from_gap: Option<f64>,
    pub lower_valid: Option<bool>,
    pub upper_valid: Option<bool>,
    pub theorem_lower: Option<f64>,
    pub theorem_upper: Option<f64>,
    pub theorem_contains: Option<bool>,
}

fn bounds(cfg: &ExperimentConfig, out: &Path) -> Result<Value> {
    let calibration = load_calibration(out)?;
    if cfg.theorem_form && calibration.is_none() {
        return Err(Error::MissingCalibration);
    }
    let exps = prepare(cfg)?;
    let rows: Vec<Result<Option<BoundsRow>>> = exps
        .par_iter()
        .map(|e| bounds_one(e, calibration.as_ref(), cfg.theorem_form))
        .collect();
    let rows: Vec<BoundsRow> = rows
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    write_csv(&out.join("bounds.csv"), &rows)?;
    let count =
        |f: &dyn Fn(&BoundsRow) -> Option<bool>| rows.iter().filter(|r| f(r) == Some(true)).count();
    let summary = json!({
        "experiments": rows.len(),
        "lower_valid": count(&|r| r.lower_valid),
        "upper_valid": count(&|r| r.upper_valid),
        "theorem_contains": count(&|r| r.theorem_contains),
        "calibrated": calibration.is_some(),
        "rows": rows,
    });
    write_json(&out.join("bounds.json"), &summary)?;
    Ok(summary)
}

fn bounds_one(
    exp: &Experiment,
    cal: Option<&Calibration>,
    theorem_form: bool,
) -> Result<Option<BoundsRow>> {
    let Some((inc, _)) = &exp.inclusion else {
        return Ok(None);
    };
    let consts = exp.tensor_constants()?;
    let p = solve_pair(exp, &consts, exp.levels() - 1)?;
    let Some(b) = p.budget else {
        return Err(Error::HypothesisFailed(
            "inclusion tensor has no definite jump sign".into(),
        ));
    };
    let true_area = inc.area();
    let gc = exp.geometric_constants()?;
    let rho0 = exp.dom.rho0;
    let eps = cover_epsilon(inc.d0, inc.h1, &gc);
    let rho = eps * rho0 / 2.0;
    let integ = DiscIntegrator::new(&p.space, &exp.dom, &p.reference.solution);
    let k = lps_scan_in(
        &integ,
        &exp.dom,
        rho,
        inc.d0 * rho0,
        capped_spacing(&exp.dom, rho),
    )
    .ok()
    .map(|pt| k_from_lps(pt.min_ratio, eps, consts.xi1));

    let mut row = BoundsRow {
        experiment: exp.index,
        true_area,
        discrete_area: p.discrete_area,
        sign: b.sign.label(),
        sign_consistent: b.gap().is_ok(),
        rel_gap: b.rel_gap().ok(),
        lemma_holds: verify_energy_lemma(&b, exp.config.constants.slack)
            .ok()
            .map(|l| l.holds()),
        lower_certificate: None,
        k_lps: k,
        upper_from_hessian: None,
        upper_from_gap: None,
        lower_valid: None,
        upper_valid: None,
        theorem_lower: None,
        theorem_upper: None,
        theorem_contains: None,
    };
    if !row.sign_consistent {
        return Ok(Some(row));
    }
    if let Ok(l) = area_lower_certificate(&b) {
        row.lower_certificate = Some(l);
        row.lower_valid = Some(l <= true_area);
    }
    if let Ok(u) = area_upper_certificate(&b, k, rho0) {
        row.upper_from_hessian = Some(u.from_hessian);
        row.upper_from_gap = Some(u.from_gap);
        row.upper_valid = Some(u.from_hessian >= true_area);
    }
    match theorem_bracket(cal, &b, rho0) {
        Ok((lo, hi)) => {
            row.theorem_lower = Some(lo);
            row.theorem_upper = Some(hi);
            row.theorem_contains = Some(lo <= true_area && true_area <= hi);
        }
        Err(e) if theorem_form => return Err(e),
        Err(_) => {}
    }
    Ok(Some(row))
}

// ---------------------------------------------------------------------------
// output helpers

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp: PathBuf = path.to_path_buf();
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    tmp.set_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

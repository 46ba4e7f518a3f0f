//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits with
//! a non-zero status if any criterion fails.

use platesize::config::{
    CoupleSpec, ExperimentConfig, InclusionSpec, MeshSpec, ShapeSpec, TensorFieldSpec, TensorSpec,
};
use platesize::couple::CoupleField;
use platesize::experiment::{run_command, solve_pair, Command, Experiment};
use platesize::geometry::{
    build_chain, default_xtilde, geometric_constants, k_of_rho, make_domain, DomainSpec,
    PlateDomain,
};
use platesize::mesh::{generate_mesh, MeshOptions};
use platesize::morley::MorleySpace;
use platesize::plate::{
    assemble, load_functional, solve_normalized, solve_problem, work, DiscIntegrator, Material,
};
use platesize::smallness::{frequency_scan, hex_centers, three_spheres_fit, three_spheres_sample};
use platesize::tensor::{
    dichotomy_value, symbol_quartic, PlateTensorField, SymbolQuartic, TensorField,
};
use platesize::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Work-energy residuals of every solve performed by the harness.
static IDENTITY: Mutex<Vec<f64>> = Mutex::new(Vec::new());

fn record_identity(r: f64) {
    IDENTITY.lock().unwrap().push(r);
}

fn unit_disc() -> PlateDomain {
    make_domain(&DomainSpec::unit_disc()).unwrap()
}

fn space(dom: &PlateDomain, h: f64) -> MorleySpace {
    MorleySpace::new(generate_mesh(dom, &MeshOptions::uniform(h)).unwrap(), dom)
}

fn iso_plate() -> PlateTensorField {
    PlateTensorField::new(TensorField::isotropic(1.0, 1.0), 0.1)
}

fn base_config() -> ExperimentConfig {
    ExperimentConfig {
        domain: DomainSpec::unit_disc(),
        tensor: TensorSpec {
            thickness: 0.1,
            reference: TensorFieldSpec::Isotropic {
                lambda: 1.0,
                mu: 1.0,
            },
            inclusion: None,
        },
        inclusion: None,
        couple: CoupleSpec::RandomFourier {
            support: [0.05, 0.75],
            modes: 6,
            seed: None,
        },
        mesh: MeshSpec::default(),
        constants: Default::default(),
        campaign: Default::default(),
        seed: 11,
        theorem_form: false,
        experiments: Vec::new(),
    }
}

// 1. Dichotomy kernel.
fn criterion_1() -> Verdict {
    let mut worst_iso = 0.0f64;
    for &(lambda, mu) in &[(1.0, 1.0), (0.3, 2.0), (5.0, 0.7), (0.0, 1.0), (2.5, 2.5)] {
        let t = TensorField::isotropic(lambda, mu);
        let q = symbol_quartic(&t, Vec2::new(0.2, -0.1));
        let d = dichotomy_value(&q).unwrap();
        worst_iso = worst_iso.max(d.abs() / q.a0.powi(6));
    }
    // x⁴ + p x² + q has discriminant 16 q (p² − 4q)²
    let (p, q) = (5.0f64, 4.0f64);
    let oracle = 16.0 * q * (p * p - 4.0 * q).powi(2);
    let d = dichotomy_value(&SymbolQuartic {
        a0: 1.0,
        a1: 0.0,
        a2: p,
        a3: 0.0,
        a4: q,
    })
    .unwrap();
    let rel = (d - oracle).abs() / oracle;
    verdict(
        worst_iso <= 1e-10 && rel <= 1e-9,
        format!("isotropic max D/a0^6 = {worst_iso:.2e}; orthotropic D = {d:.6} vs {oracle} (rel {rel:.1e})"),
    )
}

// 2. Pure bending.
fn criterion_2() -> Verdict {
    let dom = unit_disc();
    let sp = space(&dom, 0.1);
    let p = iso_plate();
    let field = CoupleField::pure_bending(&dom.curve, &p.at(Vec2::zeros()), [1.0, 0.0, 0.0]);
    let (_, out) = solve_problem(&sp, &dom, &Material::homogeneous(p), &field).unwrap();
    record_identity(out.identity_residual);
    let herr = out
        .solution
        .hessians
        .iter()
        .map(|h| (h[0] - 1.0).abs().max(h[1].abs()).max(h[2].abs()))
        .fold(0.0f64, f64::max);
    // W0 = (h³/12)(λ + 2μ)|Ω| for w = x1²/2
    let oracle = 0.1f64.powi(3) / 12.0 * 3.0 * PI;
    let rel = (out.work - oracle).abs() / oracle;
    verdict(
        herr <= 1e-10 && rel <= 1e-9 && (oracle - 7.85398e-4).abs() < 1e-9,
        format!(
            "max Hessian error {herr:.2e}; W0 = {:.9e} vs {oracle:.9e} (rel {rel:.1e})",
            out.work
        ),
    )
}

// 3. Work-energy identity over all solves.
fn criterion_3() -> Verdict {
    let all = IDENTITY.lock().unwrap();
    let bad = all.iter().filter(|r| !(**r <= 1e-8)).count();
    let worst = all.iter().copied().fold(0.0f64, f64::max);
    verdict(
        bad == 0 && !all.is_empty(),
        format!("{} solves, {bad} above 1e-8, worst {worst:.2e}", all.len()),
    )
}

fn random_lemma_configs() -> Vec<ExperimentConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..12)
        .map(|i| {
            let plus = i % 2 == 0;
            let ang: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let off: f64 = rng.random_range(0.0..0.25);
            let center = [off * ang.cos(), off * ang.sin()];
            let shape = if i % 3 == 0 {
                ShapeSpec::Disc {
                    center,
                    radius: rng.random_range(0.15..0.35),
                }
            } else {
                let a = rng.random_range(0.18..0.4);
                ShapeSpec::Ellipse {
                    center,
                    a,
                    b: a * rng.random_range(0.5..1.0),
                    angle: rng.random_range(0.0..PI),
                }
            };
            let tensor = if i % 4 < 2 {
                let f = if plus {
                    rng.random_range(1.5..4.0)
                } else {
                    rng.random_range(0.25..0.75)
                };
                TensorFieldSpec::Scaled { factor: f }
            } else {
                // anisotropic perturbation of the isotropic (λ, μ) = (1, 1) tensor
                let s = if plus { 1.0 } else { -1.0 };
                let (x, y, z) = (
                    rng.random_range(0.3..0.9),
                    rng.random_range(0.2..0.6),
                    rng.random_range(0.3..0.9),
                );
                TensorFieldSpec::Constant {
                    a0: 3.0 + s * 2.0 * x,
                    b0: 1.0,
                    c0: 0.0,
                    d0: 0.0,
                    e0: 1.0 + s * y,
                    f0: 3.0 + s * 2.0 * z,
                }
            };
            let t0: f64 = rng.random_range(0.0..0.3);
            let mut cfg = base_config();
            cfg.tensor.inclusion = Some(tensor);
            cfg.inclusion = Some(InclusionSpec {
                shape,
                d0: 0.1,
                h1: 0.02,
            });
            cfg.couple = CoupleSpec::RandomFourier {
                support: [t0, t0 + 0.65],
                modes: 6,
                seed: Some(rng.random()),
            };
            cfg.mesh = MeshSpec {
                h: 0.1,
                levels: 3,
                ..MeshSpec::default()
            };
            cfg
        })
        .collect()
}

// 4. Energy lemma on randomized inclusions.
fn criterion_4() -> Verdict {
    let configs = random_lemma_configs();
    let results: Vec<(bool, bool, bool, bool, String)> = configs
        .into_par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let exp = Experiment::new(i, cfg, 0).unwrap();
            let consts = exp.tensor_constants().unwrap();
            let jump = consts.jump.unwrap();
            let mut slacks = Vec::new();
            let mut last = None;
            for level in 0..exp.levels() {
                let p = solve_pair(&exp, &consts, level).unwrap();
                record_identity(p.reference.identity_residual);
                record_identity(p.perturbed.as_ref().unwrap().identity_residual);
                let b = p.budget.unwrap();
                let check = platesize::size::verify_energy_lemma(&b, 0.02);
                slacks.push(
                    check
                        .as_ref()
                        .map(|c| c.lower_slack.min(c.upper_slack))
                        .unwrap_or(f64::NAN),
                );
                last = Some((b, check));
            }
            let (b, check) = last.unwrap();
            let raw = b.w0 - b.w;
            let sign_ok = match jump.sign {
                platesize::tensor::JumpSign::Plus => raw > 0.0,
                platesize::tensor::JumpSign::Minus => raw < 0.0,
                platesize::tensor::JumpSign::Neither => false,
            };
            let holds = check.as_ref().map(|c| c.holds()).unwrap_or(false);
            let monotone =
                slacks.windows(2).all(|w| w[1] >= w[0] - 1e-9) || slacks.iter().all(|s| *s >= 1.0);
            (
                holds,
                sign_ok,
                jump.sign == platesize::tensor::JumpSign::Plus,
                monotone,
                format!("{}:{:.3}", jump.sign.label(), slacks.last().unwrap()),
            )
        })
        .collect();
    let n = results.len();
    let holds = results.iter().filter(|r| r.0).count();
    let signs = results.iter().filter(|r| r.1).count();
    let plus = results.iter().filter(|r| r.2).count();
    let mono = results.iter().filter(|r| r.3).count();
    let worst: Vec<String> = results.iter().map(|r| r.4.clone()).collect();
    verdict(
        n >= 10 && holds == n && signs == n && plus > 0 && plus < n,
        format!(
            "{n} runs ({plus} plus, {} minus): lemma holds {holds}/{n}, sign matches {signs}/{n}; \
             min slack at finest level [{}]; slack trend non-decreasing or above 1 in {mono}/{n}",
            n - plus,
            worst.join(" ")
        ),
    )
}

// 5. Scaling and calibrated bracket.
fn criterion_5(dir: &Path) -> Verdict {
    let mut cfg = base_config();
    cfg.tensor.inclusion = Some(TensorFieldSpec::Scaled { factor: 2.0 });
    cfg.inclusion = Some(InclusionSpec {
        shape: ShapeSpec::Disc {
            center: [0.0, 0.0],
            radius: 0.2,
        },
        d0: 0.1,
        h1: 0.02,
    });
    cfg.mesh = MeshSpec {
        h: 0.05,
        levels: 1,
        ..MeshSpec::default()
    };
    cfg.experiments = vec![
        serde_json::json!({}),
        serde_json::json!({"tensor": {"inclusion": {"kind": "scaled", "factor": 0.5}}}),
    ];
    let radii = &cfg.campaign.inclusion_radii;
    let span = (radii.last().unwrap() / radii[0]).powi(2);
    let v = run_command(Command::Calibrate, &cfg, dir).unwrap();
    let slope = v["slope_all"].as_f64().unwrap();
    let coverage = v["coverage"].as_f64().unwrap();
    verdict(
        (slope - 1.0).abs() <= 0.25 && coverage >= 0.9 && span >= 10.0 - 1e-9,
        format!(
            "area span {span:.2}x, slope {slope:.4}, held-out coverage {}/{} = {coverage:.2}",
            v["covered"], v["held_out"]
        ),
    )
}

fn random_solutions(
    sp: &MorleySpace,
    dom: &PlateDomain,
    n: usize,
    seed: u64,
) -> Vec<platesize::plate::DiscreteSolution> {
    let asm = assemble(sp, &Material::homogeneous(iso_plate())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<(f64, u64)> = (0..n)
        .map(|_| (rng.random_range(0.0..0.4), rng.random()))
        .collect();
    specs
        .into_par_iter()
        .map(|(t0, s)| {
            let f = CoupleField::random_fourier(&dom.curve, (t0, t0 + 0.55), 6, s).unwrap();
            let ell = load_functional(sp, dom, &f);
            let sol = solve_normalized(sp, &asm.matrix, &ell).unwrap();
            let w = work(&ell, &sol);
            let e: f64 = platesize::plate::energy(&asm, &sol);
            record_identity((w - e).abs() / e.abs().max(w.abs()));
            sol
        })
        .collect()
}

// 6. Frequency ratio.
fn criterion_6() -> Verdict {
    let dom = unit_disc();
    let sp = space(&dom, 0.05);
    let grid: Vec<f64> = (0..=25).map(|i| i as f64 * 0.02).collect();
    let p = iso_plate();
    let pb = CoupleField::pure_bending(&dom.curve, &p.at(Vec2::zeros()), [1.0, 0.0, 0.0]);
    let (_, out) = solve_problem(&sp, &dom, &Material::homogeneous(p), &pb).unwrap();
    record_identity(out.identity_residual);
    let scan = frequency_scan(&sp, &dom, &out.solution, &grid);
    let closed = scan
        .rows
        .iter()
        .map(|&(r, q)| (q - (1.0 - r).powi(2)).abs())
        .fold(0.0f64, f64::max);
    let mut scans = vec![scan];
    for sol in random_solutions(&sp, &dom, 10, 6) {
        scans.push(frequency_scan(&sp, &dom, &sol, &grid));
    }
    let at_zero = scans.iter().all(|s| s.rows[0] == (0.0, 1.0));
    let monotone = scans
        .iter()
        .all(|s| s.rows.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
    let rho_tilde: Vec<Option<f64>> = scans.iter().map(|s| s.rho_tilde_emp).collect();
    let all_positive = rho_tilde.iter().all(|r| r.is_some_and(|v| v > 0.0));
    verdict(
        at_zero && monotone && all_positive && closed <= 1e-6,
        format!(
            "{} families; ratio(0)=1: {at_zero}; nonincreasing: {monotone}; (1-r)^2 error {closed:.2e}; rho_tilde min {:.3}",
            scans.len(),
            rho_tilde.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b))
        ),
    )
}

// 7. Three spheres.
fn criterion_7() -> Verdict {
    let dom = unit_disc();
    let sp = space(&dom, 0.05);
    let radii = [0.05, 0.1, 0.2];
    let centers = hex_centers(&dom, 0.25, radii[2] * (1.0 + 1e-9));
    let sols = random_solutions(&sp, &dom, 20, 7);
    let mut samples = Vec::new();
    for sol in &sols {
        let integ = DiscIntegrator::new(&sp, &dom, sol);
        for &c in &centers {
            samples.push(three_spheres_sample(&integ, c, radii).unwrap());
        }
    }
    match three_spheres_fit(&samples) {
        Ok(fit) => verdict(
            fit.feasible && fit.delta > 0.0 && fit.delta < 1.0 && sols.len() >= 20,
            format!(
                "{} solutions x {} centres: delta = {:.4}, C = {:.4}, max residual {:.2e}",
                sols.len(),
                centers.len(),
                fit.delta,
                fit.c,
                fit.max_residual
            ),
        ),
        Err(e) => verdict(false, format!("fit failed: {e}")),
    }
}

// 8. Geometric constants and chains.
fn criterion_8() -> Verdict {
    let c = geometric_constants(1.0, 0.06).unwrap();
    // s solves s·sin θ0 / 5 = (s + 1)/(s − 1) on (1, ∞); bisection oracle
    let oracle_s = |m0: f64| {
        let st = (1.0 / m0).atan().sin();
        let g = |s: f64| s * st / 5.0 - (s + 1.0) / (s - 1.0);
        let (mut lo, mut hi) = (1.0 + 1e-12, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let s_ok = (c.s - 8.86841).abs() <= 1e-4 && (c.s - oracle_s(1.0)).abs() <= 1e-9;
    let chi_ok = (c.chi - 1.254181).abs() <= 1e-5;
    let th_ok =
        (c.theta1 - 0.113000).abs() <= 1e-5 && (c.theta1 - (1.0 / c.s).asin()).abs() < 1e-15;
    let mut identity = 0.0f64;
    for i in 0..=200 {
        let m0 = 0.1 * 100f64.powf(i as f64 / 200.0);
        let g = geometric_constants(m0, 0.06).unwrap();
        identity = identity.max((g.chi - (g.s + 1.0) / (g.s - 1.0)).abs());
    }

    let dom = unit_disc();
    let gc = geometric_constants(1.0, 0.5).unwrap();
    let mut tangency = 0.0f64;
    let mut chains = 0;
    for &(x, y, rho) in &[(0.0, 0.0, 1e-3), (0.3, -0.2, 2e-3), (-0.1, 0.4, 5e-4)] {
        let p = Vec2::new(x, y);
        let xt = default_xtilde(&dom, p, rho, &gc);
        let ch = build_chain(&dom, p, xt, rho, &gc).unwrap();
        chains += 1;
        for k in 1..ch.radii.len() {
            let d = (ch.center(k) - ch.center(k - 1)).norm();
            tangency = tangency.max((d - ch.radii[k] - ch.radii[k - 1]).abs() / ch.radii[k]);
        }
    }

    let kl = k_of_rho(1e-4, &c).unwrap();
    // smallest k ≥ 1 with χ^k above the chain-length argument
    let arg = (c.chi - 1.0) / (6.0 * c.chi - 4.0) * (c.h0 / 8e-4 - c.s + 1.0 + 2.0 / (c.chi - 1.0));
    let mut k_oracle = 1;
    while c.chi.powi(k_oracle) <= arg {
        k_oracle += 1;
    }
    let k_ok = kl.k == 8
        && k_oracle == 8
        && (kl.r_k - 4.881e-4).abs() <= 5e-8
        && (kl.lower - 2.156e-4).abs() <= 5e-8
        && (kl.upper - 3e-3).abs() <= 1e-15
        && kl.lower <= kl.r_k
        && kl.r_k <= kl.upper;
    verdict(
        s_ok && chi_ok && th_ok && identity <= 1e-9 && tangency <= 1e-9 && k_ok,
        format!(
            "s = {:.6}, chi = {:.7}, theta1 = {:.7}; chi identity {identity:.1e}; tangency {tangency:.1e} over {chains} chains; \
             k = {}, r_k = {:.4e} in [{:.4e}, {:.1e}]",
            c.s, c.chi, c.theta1, kl.k, kl.r_k, kl.lower, kl.upper
        ),
    )
}

// 9. Energy-norm convergence on the smooth benchmark.
fn criterion_9() -> Verdict {
    let dom = unit_disc();
    let p = iso_plate();
    let coeffs = p.at(Vec2::zeros());
    let q = coeffs.voigt();
    let terms = vec![
        (4, 0, 1.0),
        (2, 2, -6.0),
        (0, 4, 1.0),
        (3, 0, 1.0),
        (1, 2, 1.0),
    ];
    let field = CoupleField::manufactured(
        &dom.curve,
        &coeffs,
        platesize::couple::Polynomial::new(terms),
    )
    .unwrap();
    // exact Hessian of x⁴ − 6x²y² + y⁴ + x³ + xy²
    let exact = |x: Vec2| {
        let (a, b) = (x.x, x.y);
        [
            12.0 * a * a - 12.0 * b * b + 6.0 * a,
            -12.0 * a * a + 12.0 * b * b + 2.0 * a,
            -24.0 * a * b + 2.0 * b,
        ]
    };
    let hs = [0.2, 0.1, 0.05, 0.025];
    let errors: Vec<f64> = hs
        .par_iter()
        .map(|&h| {
            let sp = space(&dom, h);
            let (_, out) =
                solve_problem(&sp, &dom, &Material::homogeneous(p.clone()), &field).unwrap();
            record_identity(out.identity_residual);
            let mut e2 = 0.0;
            for (t, el) in sp.elements.iter().enumerate() {
                let hh = out.solution.hessians[t];
                let tri = sp.mesh.tri_points(t);
                e2 += el.integrate(&tri, |x| {
                    let ex = exact(x);
                    let d = nalgebra::Vector3::new(
                        hh[0] - ex[0],
                        hh[1] - ex[1],
                        std::f64::consts::SQRT_2 * (hh[2] - ex[2]),
                    );
                    d.dot(&(q * d))
                });
            }
            e2.sqrt()
        })
        .collect();
    let rates: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(
        min_rate >= 0.9,
        format!(
            "errors [{}], rates [{}]",
            errors
                .iter()
                .map(|e| format!("{e:.3e}"))
                .collect::<Vec<_>>()
                .join(", "),
            rates
                .iter()
                .map(|r| format!("{r:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

// 10. Determinism of the command-line pipeline.
fn criterion_10(dir: &Path) -> Verdict {
    let mut cfg = base_config();
    cfg.tensor.inclusion = Some(TensorFieldSpec::Scaled { factor: 2.0 });
    cfg.inclusion = Some(InclusionSpec {
        shape: ShapeSpec::Ellipse {
            center: [0.1, 0.0],
            a: 0.3,
            b: 0.2,
            angle: 0.4,
        },
        d0: 0.1,
        h1: 0.02,
    });
    cfg.mesh = MeshSpec {
        h: 0.1,
        levels: 2,
        ..MeshSpec::default()
    };
    cfg.experiments = vec![
        serde_json::json!({}),
        serde_json::json!({"tensor": {"inclusion": {"kind": "scaled", "factor": 0.5}}}),
    ];
    let cfg_path = dir.join("config.json");
    std::fs::write(&cfg_path, cfg.to_json()).unwrap();
    let run = |out: &Path| {
        std::process::Command::new(env!("CARGO_BIN_EXE_platesize"))
            .args(["all", "--quiet", "--seed", "99", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap()
    };
    let (a, b) = (dir.join("a"), dir.join("b"));
    let (sa, sb) = (run(&a), run(&b));
    if !(sa.success() && sb.success()) {
        return verdict(false, format!("runs exited with {sa} and {sb}"));
    }
    let mut files = Vec::new();
    collect_csv(&a, &mut files);
    files.sort();
    let mut differing = Vec::new();
    for f in &files {
        let rel = f.strip_prefix(&a).unwrap();
        if std::fs::read(f).unwrap() != std::fs::read(b.join(rel)).unwrap_or_default() {
            differing.push(rel.display().to_string());
        }
    }
    let mut rdr = csv::Reader::from_path(a.join("works.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let cols: Vec<usize> = ["identity0", "identity"]
        .iter()
        .map(|n| headers.iter().position(|h| h == *n).unwrap())
        .collect();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        for &c in &cols {
            if let Ok(v) = rec[c].parse::<f64>() {
                record_identity(v);
            }
        }
    }
    verdict(
        differing.is_empty() && files.len() >= 8,
        format!(
            "{} CSV files compared, {} differ {:?}",
            files.len(),
            differing.len(),
            differing
        ),
    )
}

fn collect_csv(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            collect_csv(&p, out);
        } else if p.extension().is_some_and(|x| x == "csv") {
            out.push(p);
        }
    }
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    results.push((1, "dichotomy kernel", criterion_1()));
    results.push((2, "manufactured pure bending", criterion_2()));
    results.push((4, "energy lemma on randomized inclusions", criterion_4()));
    results.push((
        5,
        "area scaling and calibrated bracket",
        criterion_5(&tmp.path().join("c5")),
    ));
    results.push((6, "frequency ratio", criterion_6()));
    results.push((7, "three spheres", criterion_7()));
    results.push((8, "geometric constants and chains", criterion_8()));
    results.push((9, "energy-norm convergence", criterion_9()));
    results.push((10, "determinism", criterion_10(tmp.path())));
    results.push((3, "work-energy identity", criterion_3()));
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (n, name, v) in &results {
        println!(
            "criterion {n:>2} {}: {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += !v.pass as usize;
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

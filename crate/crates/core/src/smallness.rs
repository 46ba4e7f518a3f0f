//! Empirical quantitative unique continuation: three-spheres samples,
//! propagation of smallness, the frequency ratio and chain bookkeeping.

use crate::couple::CoupleField;
use crate::error::{Error, Result};
use crate::geometry::{k_of_rho, GeometricConstants, PlateDomain};
use crate::morley::MorleySpace;
use crate::plate::{hessian_integral, DiscIntegrator, DiscreteSolution};
use crate::size::linear_fit;
use crate::Vec2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeSpheresSample {
    pub center: [f64; 2],
    pub radii: [f64; 3],
    pub integrals: [f64; 3],
}

pub fn three_spheres_sample(
    integ: &DiscIntegrator,
    center: Vec2,
    radii: [f64; 3],
) -> Result<ThreeSpheresSample> {
    if !(0.0 < radii[0] && radii[0] < radii[1] && radii[1] < radii[2]) {
        return Err(Error::InvalidSpec(format!("radii {radii:?} must increase")));
    }
    let mut integrals = [0.0; 3];
    for k in 0..3 {
        integrals[k] = integ.integral(center, radii[k])?;
    }
    Ok(ThreeSpheresSample {
        center: [center.x, center.y],
        radii,
        integrals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeSpheresFit {
    pub c: f64,
    pub delta: f64,
    pub feasible: bool,
    /// `max_j (log I2 − δ log I1 − (1−δ) log I3)` at the returned `δ`.
    pub max_residual: f64,
}

/// Largest `δ ∈ (0, 1)` with `I2 ≤ I1^δ I3^{1−δ}` on every sample, so that
/// `C = 1`. Each sample allows `δ ≤ log(I3/I2)/log(I3/I1)`.
pub fn three_spheres_fit(samples: &[ThreeSpheresSample]) -> Result<ThreeSpheresFit> {
    if samples.is_empty() {
        return Err(Error::InfeasibleFit("no samples".into()));
    }
    let mut dmax = f64::INFINITY;
    for s in samples {
        let [i1, i2, i3] = s.integrals;
        if !(i1 > 0.0) {
            return Err(Error::InfeasibleFit(format!(
                "vanishing inner integral at {:?}",
                s.center
            )));
        }
        let (a, b) = ((i3 / i2).ln(), (i3 / i1).ln());
        let d = if b > 0.0 { a / b } else { f64::NEG_INFINITY };
        dmax = dmax.min(d);
    }
    if !(dmax > 0.0) {
        return Err(Error::InfeasibleFit(format!(
            "log-convexity fails (delta bound {dmax:.4e})"
        )));
    }
    let delta = dmax.min(1.0 - 1e-9);
    let max_residual = samples
        .iter()
        .map(|s| {
            let [i1, i2, i3] = s.integrals.map(f64::ln);
            i2 - delta * i1 - (1.0 - delta) * i3
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ThreeSpheresFit {
        c: max_residual.exp().max(1.0),
        delta,
        feasible: max_residual <= 1e-12,
        max_residual,
    })
}

/// Points of a hexagonal lattice with spacing `h` in `Ω_d`.
pub fn hex_centers(dom: &PlateDomain, h: f64, d: f64) -> Vec<Vec2> {
    let (lo, hi) = dom.bbox();
    let dy = h * 3f64.sqrt() / 2.0;
    let mut out = Vec::new();
    let ny = ((hi.y - lo.y) / dy).ceil() as i64;
    let nx = ((hi.x - lo.x) / h).ceil() as i64;
    for j in 0..=ny {
        let y = lo.y + j as f64 * dy;
        let shift = if j % 2 == 1 { 0.5 * h } else { 0.0 };
        for i in 0..=nx {
            let p = Vec2::new(lo.x + shift + i as f64 * h, y);
            if dom.signed_distance(p) > d {
                out.push(p);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpsPoint {
    pub rho: f64,
    pub min_ratio: f64,
    pub argmin: [f64; 2],
    pub centers: usize,
}

/// Minimum over a lattice of centers in `Ω_{sρ}` (spacing `ρ/2`) of
/// `∫_{B_ρ(x)} |∇²w0|² / ∫_Ω |∇²w0|²`.
pub fn lps_scan(integ: &DiscIntegrator, dom: &PlateDomain, rho: f64, s: f64) -> Result<LpsPoint> {
    lps_scan_in(integ, dom, rho, s * rho, rho / 2.0)
}

/// Same minimum over centers in `Ω_d` on a lattice of the given spacing.
pub fn lps_scan_in(
    integ: &DiscIntegrator,
    dom: &PlateDomain,
    rho: f64,
    d: f64,
    spacing: f64,
) -> Result<LpsPoint> {
    let centers = hex_centers(dom, spacing, d);
    if centers.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let total = integ.total();
    if total == 0.0 {
        return Err(Error::ZeroSolution);
    }
    let vals: Vec<Result<f64>> = centers
        .par_iter()
        .map(|&c| integ.integral(c, rho))
        .collect();
    let mut best = (f64::INFINITY, 0usize);
    for (k, v) in vals.into_iter().enumerate() {
        let v = v?;
        if v < best.0 {
            best = (v, k);
        }
    }
    let c = centers[best.1];
    Ok(LpsPoint {
        rho,
        min_ratio: best.0 / total,
        argmin: [c.x, c.y],
        centers: centers.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpsFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Smallest `A` that makes the envelope hold on every sample with the fitted `B`.
    pub a_envelope: f64,
    pub feasible: bool,
    /// Set when the fitted `B` is below 0.1, the power-law regime of
    /// solutions without concentration.
    pub small_b: bool,
}

/// Fits `ratio ≥ C/exp[A(ρ0/ρ)^B]` with `C = e·ratio(ρ_max)` and a linear
/// fit of `log(−log(ratio/C))` against `log(ρ0/ρ)`.
pub fn lps_fit(points: &[LpsPoint], rho0: f64) -> Result<LpsFit> {
    let mut rhos: Vec<f64> = points.iter().map(|p| p.rho).collect();
    rhos.sort_by(|a, b| a.total_cmp(b));
    rhos.dedup();
    if rhos.len() < 5 {
        return Err(Error::DegenerateScan(format!(
            "{} distinct radii, at least 5 required",
            rhos.len()
        )));
    }
    let top = points
        .iter()
        .max_by(|a, b| a.rho.total_cmp(&b.rho))
        .unwrap();
    if !(top.min_ratio > 0.0) {
        return Err(Error::DegenerateScan(
            "vanishing ratio at the largest radius".into(),
        ));
    }
    let c = std::f64::consts::E * top.min_ratio;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in points {
        if p.min_ratio > 0.0 && p.min_ratio < c {
            xs.push((rho0 / p.rho).ln());
            ys.push((-(p.min_ratio / c).ln()).ln());
        }
    }
    let (la, b) = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::DegenerateScan("fit is underdetermined".into()))?;
    let a = la.exp();
    let a_envelope = points
        .iter()
        .map(|p| {
            if p.min_ratio > 0.0 {
                -(p.min_ratio / c).ln() / (rho0 / p.rho).powf(b)
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    let feasible = points
        .iter()
        .all(|p| p.min_ratio >= c * (-a * (rho0 / p.rho).powf(b)).exp() * (1.0 - 1e-12));
    Ok(LpsFit {
        a,
        b,
        c,
        a_envelope,
        feasible,
        small_b: b < 0.1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyScan {
    /// `(r, ∫_{Ω_r}|∇²w0|² / ∫_Ω|∇²w0|²)`.
    pub rows: Vec<(f64, f64)>,
    /// Largest grid `r` such that every sampled `r' ≤ r` has ratio at least 1/2.
    pub rho_tilde_emp: Option<f64>,
}

pub fn frequency_scan(
    space: &MorleySpace,
    dom: &PlateDomain,
    sol: &DiscreteSolution,
    grid: &[f64],
) -> FrequencyScan {
    let total = hessian_integral(space, sol, None);
    let mut r: Vec<f64> = grid.to_vec();
    r.sort_by(|a, b| a.total_cmp(b));
    let rows: Vec<(f64, f64)> = r
        .iter()
        .map(|&r| {
            let ratio = if r <= 0.0 {
                1.0
            } else if total == 0.0 {
                f64::NAN
            } else {
                let env = dom.interior_envelope(r);
                hessian_integral(space, sol, Some(env.as_ref())) / total
            };
            (r, ratio)
        })
        .collect();
    let mut rho_tilde_emp = None;
    for &(r, q) in &rows {
        if q >= 0.5 {
            if r > 0.0 {
                rho_tilde_emp = Some(r);
            }
        } else {
            break;
        }
    }
    FrequencyScan {
        rows,
        rho_tilde_emp,
    }
}

/// `‖M̂‖_{H^{-1/2}} / ‖∇²w0‖_{L²(Ω)}`.
pub fn boundary_data_bound_check(
    field: &CoupleField,
    space: &MorleySpace,
    sol: &DiscreteSolution,
    rho0: f64,
) -> Result<f64> {
    let e = hessian_integral(space, sol, None);
    if !(e > 0.0) {
        return Err(Error::ZeroSolution);
    }
    Ok(field.norms(rho0).hm12 / e.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainBudget {
    pub rho: f64,
    pub k_rho: usize,
    pub r_k: f64,
    pub l: u64,
    pub l_tilde: u64,
    pub n: u64,
    pub delta: f64,
    pub delta_chi: f64,
    /// `log(δ_χ^{k−1} δ^{k+L−1})`.
    pub log_exponent_near: f64,
    /// `log(δ_χ^{k−1} δ^{L̃})`.
    pub log_exponent_far: f64,
    pub a1: Option<f64>,
    pub b1: Option<f64>,
    /// `3 exp(A1 |log δ_χ|)`.
    pub a: Option<f64>,
    /// `|log δ_χ| B1 + 1`.
    pub b: Option<f64>,
}

/// Counts and exponents of the chain argument at dimensionless radius `ρ`.
#[allow(clippy::too_many_arguments)]
pub fn chain_budget(
    rho: f64,
    consts: &GeometricConstants,
    m1: f64,
    delta: f64,
    delta_chi: f64,
    a1: Option<f64>,
    b1: Option<f64>,
    rho_star: Option<f64>,
) -> Result<ChainBudget> {
    for (name, v) in [("delta", delta), ("delta_chi", delta_chi)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Config(format!("{name} = {v} must lie in (0, 1)")));
        }
    }
    let limit = rho_star.unwrap_or(consts.rho_bar).min(consts.rho_bar);
    if rho > limit {
        return Err(Error::RhoTooLarge { rho, limit });
    }
    let ck = k_of_rho(rho, consts)?;
    let l = (m1 / (std::f64::consts::PI * ck.r_k * ck.r_k)).ceil() as u64;
    let n = (m1 / (2.0 * rho * rho)).ceil() as u64;
    let k = ck.k as f64;
    let ldc = delta_chi.ln().abs();
    Ok(ChainBudget {
        rho,
        k_rho: ck.k,
        r_k: ck.r_k,
        l,
        l_tilde: l,
        n,
        delta,
        delta_chi,
        log_exponent_near: (k - 1.0) * delta_chi.ln() + (k + l as f64 - 1.0) * delta.ln(),
        log_exponent_far: (k - 1.0) * delta_chi.ln() + l as f64 * delta.ln(),
        a1,
        b1,
        a: a1.map(|a1| 3.0 * (a1 * ldc).exp()),
        b: b1.map(|b1| ldc * b1 + 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeRhoBranch {
    pub diameter: f64,
    /// `C*·exp[A(2s/C2)^B]`.
    pub constant: f64,
    /// `constant / exp[A(ρ0/ρ)^B]`, which never exceeds `C*`.
    pub bound_at_rho: f64,
}

/// Fallback constant for `ρ > ρ*`, with `C2 = diam(Ω)`.
#[allow(clippy::too_many_arguments)]
pub fn large_rho_branch(
    rho: f64,
    rho_star: f64,
    s: f64,
    dom: &PlateDomain,
    c_star: f64,
    a: f64,
    b: f64,
) -> Result<LargeRhoBranch> {
    if rho <= rho_star {
        return Err(Error::Config(format!(
            "rho = {rho} does not exceed rho* = {rho_star}"
        )));
    }
    let diameter = dom.diameter();
    if 2.0 * s * rho > diameter {
        return Err(Error::GeometryViolation {
            index: 0,
            reason: format!(
                "2 s rho = {:.6e} exceeds diam = {diameter:.6e}",
                2.0 * s * rho
            ),
        });
    }
    let c2 = diameter / dom.rho0;
    let constant = c_star * (a * (2.0 * s / c2).powf(b)).exp();
    let bound_at_rho = constant / (a * (dom.rho0 / rho).powf(b)).exp();
    Ok(LargeRhoBranch {
        diameter,
        constant,
        bound_at_rho,
    })
}

//! Closed-form constants that depend only on `M0`, disc chains and cones.

use super::domain::PlateDomain;
use crate::error::{Error, Result};
use crate::Vec2;
use serde::{Deserialize, Serialize};

/// Constants of the chain construction; radii are in units of `ρ0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricConstants {
    pub m0: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub s: f64,
    pub chi: f64,
    pub h0: f64,
    pub tau_chain: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub rho4: f64,
    pub rho_bar: f64,
}

pub fn geometric_constants(m0: f64, h0: f64) -> Result<GeometricConstants> {
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::InvalidSpec(format!("M0 = {m0} must be positive")));
    }
    if !(h0 > 0.0 && h0.is_finite()) {
        return Err(Error::InvalidSpec(format!("h0 = {h0} must be positive")));
    }
    let theta0 = (1.0 / m0).atan();
    let st = theta0.sin();
    let s = (5.0 + st + (st * st + 30.0 * st + 25.0).sqrt()) / (2.0 * st);
    let chi = s * st / 5.0;
    let theta1 = (1.0 / s).asin();
    let rho1 = 1.0 / (16.0 * s);
    let rho2 = 1.0 / (8.0 * (6.0 * chi + s + 1.0));
    let rho3 = h0 / (16.0 * s);
    let rho4 = (chi - 1.0) * h0 / 16.0;
    let rho_bar = rho1.min(rho2).min(rho3).min(rho4);
    let tau_chain = (chi - 1.0) * h0 / (16.0 * (6.0 * chi - 4.0));
    Ok(GeometricConstants {
        m0,
        theta0,
        theta1,
        s,
        chi,
        h0,
        tau_chain,
        rho1,
        rho2,
        rho3,
        rho4,
        rho_bar,
    })
}

/// Chain length `k(ρ)` for a dimensionless radius, with `r_{k(ρ)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainLength {
    pub k: usize,
    pub r_k: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn k_of_rho(rho: f64, c: &GeometricConstants) -> Result<ChainLength> {
    if !(rho > 0.0) {
        return Err(Error::InvalidSpec(format!("rho = {rho} must be positive")));
    }
    if rho > c.rho_bar {
        return Err(Error::RhoTooLarge {
            rho,
            limit: c.rho_bar,
        });
    }
    let chi = c.chi;
    let arg =
        (chi - 1.0) / (6.0 * chi - 4.0) * (c.h0 / (8.0 * rho) - c.s + 1.0 + 2.0 / (chi - 1.0));
    let k = ((arg.ln() / chi.ln()).floor() as i64 + 1).max(1) as usize;
    let r_k = chi.powi(k as i32 - 1) * rho;
    let lower = c.tau_chain / chi;
    let upper = c.h0 / 20.0;
    if !(lower <= r_k * (1.0 + 1e-12) && r_k <= upper * (1.0 + 1e-12)) {
        return Err(Error::GeometryViolation {
            index: k,
            reason: format!("r_k = {r_k:.6e} outside [{lower:.6e}, {upper:.6e}]"),
        });
    }
    Ok(ChainLength {
        k,
        r_k,
        lower,
        upper,
    })
}

/// `ε = min{2d0/s, h1/√2}`.
pub fn cover_epsilon(d0: f64, h1: f64, c: &GeometricConstants) -> f64 {
    (2.0 * d0 / c.s).min(h1 / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub centers: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    pub xtilde: [f64; 2],
}

impl Chain {
    pub fn center(&self, k: usize) -> Vec2 {
        Vec2::new(self.centers[k][0], self.centers[k][1])
    }
}

/// Auxiliary point `x̃ = x + sρ·n`, with `n` the outward normal at the
/// boundary point nearest to `x`.
pub fn default_xtilde(dom: &PlateDomain, x: Vec2, rho: f64, c: &GeometricConstants) -> Vec2 {
    let near = dom.nearest(x);
    x + dom.curve.normal(near.s) * (c.s * rho)
}

/// Chain of tangent discs `B_{r_k}(x_k)` moving away from `x̃`; `rho` is a
/// physical length.
pub fn build_chain(
    dom: &PlateDomain,
    x: Vec2,
    xtilde: Vec2,
    rho: f64,
    c: &GeometricConstants,
) -> Result<Chain> {
    let sep = (x - xtilde).norm();
    if ((sep - c.s * rho) / (c.s * rho)).abs() > 1e-9 {
        return Err(Error::InvalidSpec(format!(
            "|x − x̃| = {sep:.6e} differs from sρ = {:.6e}",
            c.s * rho
        )));
    }
    if c.s * rho >= dom.signed_distance(x) {
        return Err(Error::InvalidSpec(
            "sρ must be smaller than dist(x, ∂Ω)".into(),
        ));
    }
    let len = k_of_rho(rho / dom.rho0, c)?;
    let xi = (x - xtilde) / sep;
    let mut centers = vec![x];
    let mut radii = vec![rho];
    for k in 1..len.k {
        let r = radii[k - 1] * c.chi;
        let prev = centers[k - 1];
        centers.push(prev + xi * (radii[k - 1] + r));
        radii.push(r);
    }
    for j in 0..len.k.saturating_sub(1) {
        let big = 5.0 * c.chi * radii[j];
        if dom.signed_distance(centers[j]) < big {
            return Err(Error::GeometryViolation {
                index: j + 1,
                reason: format!("disc of radius {big:.4e} leaves the domain"),
            });
        }
    }
    Ok(Chain {
        centers: centers.iter().map(|p| [p.x, p.y]).collect(),
        radii,
        xtilde: [xtilde.x, xtilde.y],
    })
}

/// Open cone with vertex `z`, unit axis `ξ` and half-angle `ϑ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cone {
    pub vertex: Vec2,
    pub axis: Vec2,
    pub half_angle: f64,
}

impl Cone {
    pub fn new(vertex: Vec2, axis: Vec2, half_angle: f64) -> Result<Cone> {
        if !(half_angle > 0.0 && half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidSpec(format!(
                "half-angle {half_angle} outside (0, π/2)"
            )));
        }
        let n = axis.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidSpec("cone axis must be nonzero".into()));
        }
        Ok(Cone {
            vertex,
            axis: axis / n,
            half_angle,
        })
    }

    pub fn contains(&self, p: Vec2) -> Result<bool> {
        let d = p - self.vertex;
        let n = d.norm();
        if n == 0.0 {
            return Err(Error::VertexQuery);
        }
        Ok(d.dot(&self.axis) / n > self.half_angle.cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::{make_domain, DomainSpec};
    use proptest::prelude::*;

    #[test]
    fn constants_for_m0_one() {
        let c = geometric_constants(1.0, 0.06).unwrap();
        assert!((c.s - 8.86841).abs() < 1e-5);
        assert!((c.chi - 1.254181).abs() < 1e-6);
        assert!((c.theta1 - 0.113000).abs() < 1e-6);
        assert!((c.rho_bar - 4.229e-4).abs() < 1e-7);
        assert_eq!(c.rho_bar, c.rho3);
    }

    #[test]
    fn constants_for_m0_sqrt3() {
        let c = geometric_constants(3f64.sqrt(), 0.06).unwrap();
        assert!((c.theta0 - std::f64::consts::PI / 6.0).abs() < 1e-14);
        assert!((c.s - 11.84429).abs() < 1e-4);
        assert!((c.chi - 1.184429).abs() < 1e-5);
    }

    #[test]
    fn chain_length_example() {
        let c = geometric_constants(1.0, 0.06).unwrap();
        let k = k_of_rho(1e-4, &c).unwrap();
        assert_eq!(k.k, 8);
        assert!((k.r_k - 4.881e-4).abs() < 1e-7);
        assert!((k.lower - 2.156e-4).abs() < 1e-7);
        assert!((k.upper - 3e-3).abs() < 1e-15);
        assert!(k_of_rho(c.rho_bar, &c).unwrap().k >= 1);
        assert!(matches!(
            k_of_rho(c.rho_bar * 1.01, &c),
            Err(Error::RhoTooLarge { .. })
        ));
    }

    #[test]
    fn epsilon_example() {
        let c = geometric_constants(1.0, 0.06).unwrap();
        assert!((cover_epsilon(0.05, 0.1, &c) - 0.011276).abs() < 1e-6);
    }

    #[test]
    fn chain_tangency() {
        let dom = make_domain(&DomainSpec::unit_disc()).unwrap();
        let c = geometric_constants(1.0, 0.06).unwrap();
        let x = Vec2::new(0.3, -0.2);
        let rho = 1e-4;
        let xt = default_xtilde(&dom, x, rho, &c);
        let chain = build_chain(&dom, x, xt, rho, &c).unwrap();
        assert_eq!(chain.radii.len(), 8);
        let st0 = c.theta0.sin();
        for k in 0..chain.radii.len() {
            let d = (chain.center(k) - xt).norm();
            assert!((chain.radii[k] - c.theta1.sin() * d).abs() <= 1e-10 * d.max(1.0));
            assert!((5.0 * c.chi * chain.radii[k] - st0 * d).abs() <= 1e-10 * d.max(1.0));
            if k + 1 < chain.radii.len() {
                let step = (chain.center(k + 1) - chain.center(k)).norm();
                assert!((step - chain.radii[k] - chain.radii[k + 1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn chain_violation_near_boundary() {
        let dom = make_domain(&DomainSpec::unit_disc()).unwrap();
        let c = geometric_constants(1.0, 0.06).unwrap();
        let rho = 1e-4;
        // x̃ placed on the inner side so the chain runs towards ∂Ω
        let x = Vec2::new(1.0 - 1.1 * c.s * rho, 0.0);
        let xt = x - Vec2::new(c.s * rho, 0.0);
        match build_chain(&dom, x, xt, rho, &c) {
            Err(Error::GeometryViolation { index, .. }) => assert!(index >= 1),
            other => panic!("expected GeometryViolation, got {other:?}"),
        }
    }

    #[test]
    fn cone_membership() {
        let cone = Cone::new(Vec2::zeros(), Vec2::new(1.0, 0.0), 0.5).unwrap();
        assert!(cone.contains(Vec2::new(2.0, 0.0)).unwrap());
        let at = |a: f64| Vec2::new(a.cos(), a.sin()) * 3.0;
        assert!(!cone.contains(at(0.5 + 1e-9)).unwrap());
        assert!(cone.contains(at(0.5 - 1e-9)).unwrap());
        assert_eq!(cone.contains(Vec2::zeros()), Err(Error::VertexQuery));
        assert!(Cone::new(Vec2::zeros(), Vec2::new(1.0, 0.0), 2.0).is_err());
    }

    proptest! {
        #[test]
        fn chi_identity(m0 in 0.1..10.0f64) {
            let c = geometric_constants(m0, 0.06).unwrap();
            prop_assert!(c.s > 1.0 && c.chi > 1.0);
            prop_assert!((c.chi - (c.s + 1.0) / (c.s - 1.0)).abs() <= 1e-9);
            prop_assert!((c.chi - c.s * c.theta0.sin() / 5.0).abs() <= 1e-12);
            prop_assert!((c.theta1 - (1.0 / c.s).asin()).abs() <= 1e-15);
        }

        #[test]
        fn cone_matches_angle_oracle(px in -2.0..2.0f64, py in -2.0..2.0f64, ang in 0.1..1.5f64, dir in 0.0..std::f64::consts::TAU) {
            let cone = Cone::new(Vec2::new(0.1, 0.2), Vec2::new(dir.cos(), dir.sin()), ang).unwrap();
            let p = Vec2::new(px, py);
            let d = p - cone.vertex;
            prop_assume!(d.norm() > 1e-9);
            let angle = (d.y.atan2(d.x) - dir).rem_euclid(std::f64::consts::TAU);
            let angle = angle.min(std::f64::consts::TAU - angle);
            prop_assume!((angle - ang).abs() > 1e-9);
            prop_assert_eq!(cone.contains(p).unwrap(), angle < ang);
        }
    }
}

//! Plate domains with quantified boundary regularity.

use super::curve::{BoundaryCurve, Nearest};
use super::region::{EmptyRegion, LevelSetRegion, Region, Shape};
use crate::error::{Error, Result};
use crate::Vec2;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Boundary shape of a plate domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainShape {
    Disc {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
    },
    RoundedPolygon {
        vertices: Vec<[f64; 2]>,
        corner_radius: f64,
    },
}

/// Domain description with optional overrides of the a-priori constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: DomainShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
}

impl DomainSpec {
    pub fn unit_disc() -> DomainSpec {
        DomainSpec::from(DomainShape::Disc {
            center: [0.0, 0.0],
            radius: 1.0,
        })
    }
}

impl From<DomainShape> for DomainSpec {
    fn from(shape: DomainShape) -> Self {
        DomainSpec {
            shape,
            rho0: None,
            m0: None,
            m1: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub s: f64,
    pub point: Vec2,
    pub normal: Vec2,
    pub tangent: Vec2,
}

/// A simply connected plate domain `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateDomain {
    pub curve: BoundaryCurve,
    pub rho0: f64,
    pub m0: f64,
    pub m1: f64,
    pub area: f64,
    /// Arclength samples; the last one repeats the first.
    pub samples: Vec<BoundarySample>,
    disc: Option<(Vec2, f64)>,
}

fn v2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

/// Builds a domain from its specification.
///
/// Without overrides, `ρ0` is the smallest radius of curvature of the
/// boundary, `M0 = 1` and `M1 = |Ω|/ρ0²`.
pub fn make_domain(spec: &DomainSpec) -> Result<PlateDomain> {
    let (curve, disc) = match &spec.shape {
        DomainShape::Disc { center, radius } => (
            BoundaryCurve::circle(v2(*center), *radius)?,
            Some((v2(*center), *radius)),
        ),
        DomainShape::Ellipse { center, a, b } => {
            (BoundaryCurve::ellipse(v2(*center), *a, *b)?, None)
        }
        DomainShape::RoundedPolygon {
            vertices,
            corner_radius,
        } => {
            let v: Vec<Vec2> = vertices.iter().map(|p| v2(*p)).collect();
            (BoundaryCurve::rounded_polygon(&v, *corner_radius)?, None)
        }
    };
    let kappa = curve.max_curvature();
    let rho0 = spec.rho0.unwrap_or(1.0 / kappa);
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "rho0 = {rho0} must be positive"
        )));
    }
    let area = curve.area();
    let m0 = spec.m0.unwrap_or(1.0);
    if !(m0 > 0.0) {
        return Err(Error::InvalidSpec(format!("M0 = {m0} must be positive")));
    }
    let m1 = spec.m1.unwrap_or(area / (rho0 * rho0));
    if area > m1 * rho0 * rho0 * (1.0 + 1e-12) {
        return Err(Error::InvalidSpec(format!(
            "area {area} exceeds M1·rho0² = {}",
            m1 * rho0 * rho0
        )));
    }
    // chord sagitta κΔs²/8 below 1e-6·ρ0
    let ds = (8e-6 * rho0 / kappa).sqrt();
    let n = ((curve.length() / ds).ceil() as usize).max(16);
    let mut samples = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let s = curve.length() * k as f64 / n as f64;
        let (point, tangent) = curve.eval(s);
        let normal = Vec2::new(tangent.y, -tangent.x);
        samples.push(BoundarySample {
            s: if k == n { curve.length() } else { s },
            point,
            normal,
            tangent,
        });
    }
    samples[n].point = samples[0].point;
    samples[n].normal = samples[0].normal;
    samples[n].tangent = samples[0].tangent;
    Ok(PlateDomain {
        curve,
        rho0,
        m0,
        m1,
        area,
        samples,
        disc,
    })
}

impl PlateDomain {
    /// Distance to `∂Ω`, positive inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        match self.disc {
            Some((c, r)) => r - (p - c).norm(),
            None => self.curve.signed_distance(p),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.signed_distance(p) > 0.0
    }

    pub fn nearest(&self, p: Vec2) -> Nearest {
        self.curve.nearest(p)
    }

    pub fn as_disc(&self) -> Option<(Vec2, f64)> {
        self.disc
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        self.curve.bbox()
    }

    pub fn perimeter(&self) -> f64 {
        self.curve.length()
    }

    /// Largest distance between two boundary samples.
    pub fn diameter(&self) -> f64 {
        if let Some((_, r)) = self.disc {
            return 2.0 * r;
        }
        let pts: Vec<Vec2> = self.samples.iter().map(|s| s.point).collect();
        let mut best = 0.0f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max((pts[i] - pts[j]).norm_squared());
            }
        }
        best.sqrt()
    }

    /// `Ω_r = {x ∈ Ω : dist(x, ∂Ω) > r}`.
    pub fn interior_envelope(&self, r: f64) -> Box<dyn Region + Send + '_> {
        match self.disc {
            Some((c, rad)) if r < rad => Box::new(Shape::Disc {
                center: c,
                radius: rad - r,
            }),
            Some(_) => Box::new(EmptyRegion),
            None => {
                let (lo, hi) = self.bbox();
                Box::new(LevelSetRegion::new(
                    move |p| self.curve.signed_distance(p) - r,
                    lo,
                    hi,
                ))
            }
        }
    }

    /// `|Ω| − |Ω_r|` together with the ratio `(|Ω| − |Ω_r|)/r`.
    pub fn boundary_layer_area(&self, r: f64) -> (f64, f64) {
        let layer = self.area - self.interior_envelope(r).area();
        (layer, layer / r)
    }

    /// Polyline approximation of `∂Ω_r` (inward offset samples whose true
    /// distance to the boundary is `r`), for plotting.
    pub fn envelope_polyline(&self, r: f64) -> Vec<Vec2> {
        self.samples[..self.samples.len() - 1]
            .iter()
            .map(|s| s.point - s.normal * r)
            .filter(|&p| (self.signed_distance(p) - r).abs() <= 1e-6 * self.rho0)
            .collect()
    }

    /// Checks `dist(D, ∂Ω) ≥ d0·ρ0` on a dense sample of `∂D`.
    pub fn check_standoff(&self, shape: &Shape, d0: f64) -> Result<f64> {
        let mut min = f64::INFINITY;
        for p in shape.boundary_points(2048) {
            min = min.min(self.signed_distance(p));
        }
        if min < d0 * self.rho0 {
            return Err(Error::InvalidSpec(format!(
                "inclusion is {min:.4e} from the boundary, below d0·rho0 = {:.4e}",
                d0 * self.rho0
            )));
        }
        Ok(min)
    }

    /// Flood-fill connectivity check of `Ω_h` over increasing `h`: returns the
    /// first sampled `h` at which `Ω_h` is disconnected or empty, or the last
    /// grid value if none is.
    pub fn connectivity_scan(&self, h_grid: &[f64], cells: usize) -> f64 {
        let (lo, hi) = self.bbox();
        let n = cells.max(8);
        let dx = (hi.x - lo.x) / n as f64;
        let dy = (hi.y - lo.y) / n as f64;
        let dist: Vec<f64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                self.signed_distance(Vec2::new(
                    lo.x + (i as f64 + 0.5) * dx,
                    lo.y + (j as f64 + 0.5) * dy,
                ))
            })
            .collect();
        let mut grid: Vec<f64> = h_grid.to_vec();
        grid.sort_by(|a, b| a.total_cmp(b));
        for &h in &grid {
            if count_components(&dist, n, h) != 1 {
                return h;
            }
        }
        grid.last().copied().unwrap_or(0.0)
    }
}

fn count_components(dist: &[f64], n: usize, h: f64) -> usize {
    let mut seen = vec![false; n * n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..n * n {
        if seen[start] || dist[start] <= h {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k % n, k / n);
            let mut push = |m: usize| {
                if !seen[m] && dist[m] > h {
                    seen[m] = true;
                    queue.push_back(m);
                }
            };
            if i > 0 {
                push(k - 1);
            }
            if i + 1 < n {
                push(k + 1);
            }
            if j > 0 {
                push(k - n);
            }
            if j + 1 < n {
                push(k + n);
            }
        }
    }
    count
}

/// Dumbbell: two squares joined by a neck of the given width.
pub fn dumbbell_spec(neck_width: f64, corner_radius: f64) -> DomainSpec {
    let w = neck_width / 2.0;
    let v = vec![
        [-1.2, -0.5],
        [-0.2, -0.5],
        [-0.2, -w],
        [0.2, -w],
        [0.2, -0.5],
        [1.2, -0.5],
        [1.2, 0.5],
        [0.2, 0.5],
        [0.2, w],
        [-0.2, w],
        [-0.2, 0.5],
        [-1.2, 0.5],
    ];
    DomainSpec::from(DomainShape::RoundedPolygon {
        vertices: v,
        corner_radius,
    })
}

//! Planar regions with exact or adaptive triangle-intersection areas.

use super::curve::{nearest_on_ellipse, polygon_is_simple, polygon_signed_area};
use crate::error::{Error, Result};
use crate::Vec2;
use std::f64::consts::PI;

/// Something that can report `|T ∩ R|` for triangles `T`.
pub trait Region: Sync {
    fn contains(&self, p: Vec2) -> bool;
    /// Area of the intersection with the counterclockwise triangle.
    fn triangle_area(&self, tri: &[Vec2; 3]) -> f64;
    fn bbox(&self) -> (Vec2, Vec2);
    fn area(&self) -> f64 {
        let (lo, hi) = self.bbox();
        if !(hi.x > lo.x && hi.y > lo.y) {
            return 0.0;
        }
        let a = Vec2::new(hi.x, lo.y);
        let b = Vec2::new(lo.x, hi.y);
        self.triangle_area(&[lo, a, hi]) + self.triangle_area(&[lo, hi, b])
    }
}

pub fn triangle_signed_area(t: &[Vec2; 3]) -> f64 {
    0.5 * (t[1] - t[0]).perp(&(t[2] - t[0]))
}

/// Inclusion shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disc {
        center: Vec2,
        radius: f64,
    },
    /// Ellipse with semi-axes `a`, `b`, rotated by `angle` radians.
    Ellipse {
        center: Vec2,
        a: f64,
        b: f64,
        angle: f64,
    },
    /// Simple polygon, stored counterclockwise.
    Polygon {
        vertices: Vec<Vec2>,
    },
}

impl Shape {
    pub fn disc(center: Vec2, radius: f64) -> Result<Shape> {
        if !(radius > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "disc radius {radius} must be positive"
            )));
        }
        Ok(Shape::Disc { center, radius })
    }

    pub fn ellipse(center: Vec2, a: f64, b: f64, angle: f64) -> Result<Shape> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidSpec(
                "ellipse semi-axes must be positive".into(),
            ));
        }
        Ok(Shape::Ellipse {
            center,
            a,
            b,
            angle,
        })
    }

    pub fn polygon(mut vertices: Vec<Vec2>) -> Result<Shape> {
        if vertices.len() < 3 {
            return Err(Error::InvalidSpec(
                "polygon needs at least three vertices".into(),
            ));
        }
        let a = polygon_signed_area(&vertices);
        if a.abs() <= 0.0 || !polygon_is_simple(&vertices) {
            return Err(Error::InvalidSpec(
                "polygon must be simple with nonzero area".into(),
            ));
        }
        if a < 0.0 {
            vertices.reverse();
        }
        Ok(Shape::Polygon { vertices })
    }

    pub fn shape_area(&self) -> f64 {
        match self {
            Shape::Disc { radius, .. } => PI * radius * radius,
            Shape::Ellipse { a, b, .. } => PI * a * b,
            Shape::Polygon { vertices } => polygon_signed_area(vertices),
        }
    }

    /// Maps a point into the unit-disc frame of an ellipse.
    fn ellipse_local(p: Vec2, center: Vec2, a: f64, b: f64, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        let d = p - center;
        Vec2::new((c * d.x + s * d.y) / a, (-s * d.x + c * d.y) / b)
    }

    /// Signed distance to the shape boundary, positive inside.
    pub fn inner_distance(&self, p: Vec2) -> f64 {
        match self {
            Shape::Disc { center, radius } => radius - (p - center).norm(),
            Shape::Ellipse {
                center,
                a,
                b,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                let d = p - center;
                let local = Vec2::new(c * d.x + s * d.y, -s * d.x + c * d.y);
                let t = nearest_on_ellipse(local, *a, *b);
                let dist = (Vec2::new(a * t.cos(), b * t.sin()) - local).norm();
                if (local.x / a).powi(2) + (local.y / b).powi(2) < 1.0 {
                    dist
                } else {
                    -dist
                }
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let ab = b - a;
                    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                    best = best.min((a + ab * t - p).norm());
                }
                if point_in_polygon(p, vertices) {
                    best
                } else {
                    -best
                }
            }
        }
    }

    pub fn shape_bbox(&self) -> (Vec2, Vec2) {
        match self {
            Shape::Disc { center, radius } => (
                center - Vec2::repeat(*radius),
                center + Vec2::repeat(*radius),
            ),
            Shape::Ellipse {
                center,
                a,
                b,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                let ex = ((a * c).powi(2) + (b * s).powi(2)).sqrt();
                let ey = ((a * s).powi(2) + (b * c).powi(2)).sqrt();
                (center - Vec2::new(ex, ey), center + Vec2::new(ex, ey))
            }
            Shape::Polygon { vertices } => {
                let mut lo = Vec2::repeat(f64::INFINITY);
                let mut hi = Vec2::repeat(f64::NEG_INFINITY);
                for v in vertices {
                    lo = lo.inf(v);
                    hi = hi.sup(v);
                }
                (lo, hi)
            }
        }
    }

    /// `n` points on the shape boundary, counterclockwise.
    pub fn boundary_points(&self, n: usize) -> Vec<Vec2> {
        match self {
            Shape::Disc { center, radius } => (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    center + Vec2::new(t.cos(), t.sin()) * *radius
                })
                .collect(),
            Shape::Ellipse {
                center,
                a,
                b,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        let l = Vec2::new(a * t.cos(), b * t.sin());
                        center + Vec2::new(c * l.x - s * l.y, s * l.x + c * l.y)
                    })
                    .collect()
            }
            Shape::Polygon { vertices } => {
                let per = (n / vertices.len()).max(1);
                let m = vertices.len();
                let mut out = Vec::with_capacity(per * m);
                for i in 0..m {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % m];
                    for k in 0..per {
                        out.push(a + (b - a) * (k as f64 / per as f64));
                    }
                }
                out
            }
        }
    }

    /// `{x ∈ D : dist(x, ∂D) > h}`.
    pub fn eroded(&self, h: f64) -> Box<dyn Region + Send> {
        match self {
            Shape::Disc { center, radius } => {
                if h < *radius {
                    Box::new(Shape::Disc {
                        center: *center,
                        radius: radius - h,
                    })
                } else {
                    Box::new(EmptyRegion)
                }
            }
            _ if h <= 0.0 => Box::new(self.clone()),
            _ => {
                let shape = self.clone();
                let (lo, hi) = self.shape_bbox();
                Box::new(LevelSetRegion::new(
                    move |p| shape.inner_distance(p) - h,
                    lo,
                    hi,
                ))
            }
        }
    }
}

fn point_in_polygon(p: Vec2, v: &[Vec2]) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Signed area of `disc(0, r) ∩ triangle(0, a, b)`.
fn disc_wedge_area(a: Vec2, b: Vec2, r: f64) -> f64 {
    let d = b - a;
    let qa = d.norm_squared();
    if qa == 0.0 {
        return 0.0;
    }
    let qb = 2.0 * a.dot(&d);
    let qc = a.norm_squared() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    let mut ts = vec![0.0];
    if disc > 0.0 {
        let sq = disc.sqrt();
        for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.push(1.0);
    let mut total = 0.0;
    for w in ts.windows(2) {
        let p = a + d * w[0];
        let q = a + d * w[1];
        let mid = a + d * (0.5 * (w[0] + w[1]));
        if mid.norm_squared() <= r * r {
            total += 0.5 * p.perp(&q);
        } else {
            total += 0.5 * r * r * p.perp(&q).atan2(p.dot(&q));
        }
    }
    total
}

/// Exact area of the intersection of a disc and a triangle.
pub fn disc_triangle_area(center: Vec2, radius: f64, tri: &[Vec2; 3]) -> f64 {
    let mut total = 0.0;
    for i in 0..3 {
        total += disc_wedge_area(tri[i] - center, tri[(i + 1) % 3] - center, radius);
    }
    total.abs()
}

/// Sutherland–Hodgman clip of `subject` by a convex counterclockwise polygon.
pub fn clip_polygon(subject: &[Vec2], clipper: &[Vec2]) -> Vec<Vec2> {
    let mut out = subject.to_vec();
    let m = clipper.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let a = clipper[i];
        let b = clipper[(i + 1) % m];
        let side = |p: Vec2| (b - a).perp(&(p - a));
        let input = std::mem::take(&mut out);
        let n = input.len();
        for k in 0..n {
            let cur = input[k];
            let prev = input[(k + n - 1) % n];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    out.push(prev + (cur - prev) * (sp / (sp - sc)));
                }
                out.push(cur);
            } else if sp >= 0.0 {
                out.push(prev + (cur - prev) * (sp / (sp - sc)));
            }
        }
    }
    out
}

impl Region for Shape {
    fn contains(&self, p: Vec2) -> bool {
        match self {
            Shape::Disc { center, radius } => (p - center).norm() < *radius,
            Shape::Ellipse {
                center,
                a,
                b,
                angle,
            } => Shape::ellipse_local(p, *center, *a, *b, *angle).norm_squared() < 1.0,
            Shape::Polygon { vertices } => point_in_polygon(p, vertices),
        }
    }

    fn triangle_area(&self, tri: &[Vec2; 3]) -> f64 {
        match self {
            Shape::Disc { center, radius } => disc_triangle_area(*center, *radius, tri),
            Shape::Ellipse {
                center,
                a,
                b,
                angle,
            } => {
                let t = tri.map(|p| Shape::ellipse_local(p, *center, *a, *b, *angle));
                a * b * disc_triangle_area(Vec2::zeros(), 1.0, &t)
            }
            Shape::Polygon { vertices } => {
                let mut clip = tri.to_vec();
                if triangle_signed_area(tri) < 0.0 {
                    clip.reverse();
                }
                polygon_signed_area(&clip_polygon(vertices, &clip)).abs()
            }
        }
    }

    fn bbox(&self) -> (Vec2, Vec2) {
        self.shape_bbox()
    }

    fn area(&self) -> f64 {
        self.shape_area()
    }
}

/// The empty set.
#[derive(Debug, Clone, Copy)]
pub struct EmptyRegion;

impl Region for EmptyRegion {
    fn contains(&self, _: Vec2) -> bool {
        false
    }
    fn triangle_area(&self, _: &[Vec2; 3]) -> f64 {
        0.0
    }
    fn bbox(&self) -> (Vec2, Vec2) {
        (Vec2::zeros(), Vec2::zeros())
    }
    fn area(&self) -> f64 {
        0.0
    }
}

/// `{φ > 0}` for a 1-Lipschitz function `φ`, with triangle areas computed by
/// adaptive subdivision and linear interpolation on the finest cells.
pub struct LevelSetRegion<F> {
    phi: F,
    lo: Vec2,
    hi: Vec2,
    /// Cells smaller than this are resolved by linear interpolation.
    pub resolution: f64,
}

impl<F: Fn(Vec2) -> f64 + Sync> LevelSetRegion<F> {
    pub fn new(phi: F, lo: Vec2, hi: Vec2) -> Self {
        let diam = (hi - lo).norm().max(f64::MIN_POSITIVE);
        LevelSetRegion {
            phi,
            lo,
            hi,
            resolution: diam * 2f64.powi(-11),
        }
    }

    fn area_rec(&self, t: [Vec2; 3], v: [f64; 3]) -> f64 {
        let diam = (t[0] - t[1])
            .norm()
            .max((t[1] - t[2]).norm())
            .max((t[2] - t[0]).norm());
        let area = triangle_signed_area(&t).abs();
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if min >= diam {
            return area;
        }
        if max <= -diam {
            return 0.0;
        }
        if diam <= self.resolution {
            return linear_positive_area(&t, &v);
        }
        let m = [
            (t[0] + t[1]) * 0.5,
            (t[1] + t[2]) * 0.5,
            (t[2] + t[0]) * 0.5,
        ];
        let mv = [(self.phi)(m[0]), (self.phi)(m[1]), (self.phi)(m[2])];
        self.area_rec([t[0], m[0], m[2]], [v[0], mv[0], mv[2]])
            + self.area_rec([m[0], t[1], m[1]], [mv[0], v[1], mv[1]])
            + self.area_rec([m[2], m[1], t[2]], [mv[2], mv[1], v[2]])
            + self.area_rec([m[0], m[1], m[2]], [mv[0], mv[1], mv[2]])
    }
}

impl<F: Fn(Vec2) -> f64 + Sync> Region for LevelSetRegion<F> {
    fn contains(&self, p: Vec2) -> bool {
        (self.phi)(p) > 0.0
    }

    fn triangle_area(&self, tri: &[Vec2; 3]) -> f64 {
        let v = [(self.phi)(tri[0]), (self.phi)(tri[1]), (self.phi)(tri[2])];
        self.area_rec(*tri, v)
    }

    fn bbox(&self) -> (Vec2, Vec2) {
        (self.lo, self.hi)
    }
}

/// Area of `{ℓ > 0}` on a triangle where `ℓ` is the linear interpolant of `v`.
pub fn linear_positive_area(t: &[Vec2; 3], v: &[f64; 3]) -> f64 {
    let mut poly = Vec::with_capacity(4);
    for i in 0..3 {
        let j = (i + 1) % 3;
        if v[i] > 0.0 {
            poly.push(t[i]);
        }
        if (v[i] > 0.0) != (v[j] > 0.0) {
            let s = v[i] / (v[i] - v[j]);
            poly.push(t[i] + (t[j] - t[i]) * s);
        }
    }
    if poly.len() < 3 {
        return 0.0;
    }
    polygon_signed_area(&poly).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mc_area(r: &dyn Region, tri: &[Vec2; 3], n: usize) -> f64 {
        // deterministic lattice points in barycentric coordinates
        let mut hits = 0usize;
        let mut total = 0usize;
        for i in 0..n {
            for j in 0..n - i {
                let a = (i as f64 + 1.0 / 3.0) / n as f64;
                let b = (j as f64 + 1.0 / 3.0) / n as f64;
                let p = tri[0] + (tri[1] - tri[0]) * a + (tri[2] - tri[0]) * b;
                total += 1;
                if r.contains(p) {
                    hits += 1;
                }
            }
        }
        triangle_signed_area(tri).abs() * hits as f64 / total as f64
    }

    #[test]
    fn disc_triangle_cases() {
        let tri = [
            Vec2::new(-5.0, -5.0),
            Vec2::new(5.0, -5.0),
            Vec2::new(0.0, 6.0),
        ];
        assert!((disc_triangle_area(Vec2::zeros(), 1.0, &tri) - PI).abs() < 1e-13);
        let small = [
            Vec2::new(0.0, 0.0),
            Vec2::new(0.1, 0.0),
            Vec2::new(0.0, 0.1),
        ];
        assert!((disc_triangle_area(Vec2::zeros(), 1.0, &small) - 0.005).abs() < 1e-16);
        let far = [
            Vec2::new(3.0, 3.0),
            Vec2::new(4.0, 3.0),
            Vec2::new(3.0, 4.0),
        ];
        assert_eq!(disc_triangle_area(Vec2::zeros(), 1.0, &far), 0.0);
        // half plane cut through the centre
        let half = [
            Vec2::new(0.0, -3.0),
            Vec2::new(3.0, 0.0),
            Vec2::new(0.0, 3.0),
        ];
        let got = disc_triangle_area(Vec2::zeros(), 1.0, &half);
        assert!((got - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn clipped_areas_match_lattice_counts() {
        let shapes = [
            Shape::disc(Vec2::new(0.1, 0.2), 0.4).unwrap(),
            Shape::ellipse(Vec2::new(0.0, 0.1), 0.5, 0.2, 0.4).unwrap(),
            Shape::polygon(vec![
                Vec2::new(-0.3, -0.3),
                Vec2::new(0.4, -0.2),
                Vec2::new(0.0, 0.0),
                Vec2::new(0.3, 0.4),
                Vec2::new(-0.2, 0.3),
            ])
            .unwrap(),
        ];
        let tri = [
            Vec2::new(-0.2, -0.4),
            Vec2::new(0.6, 0.0),
            Vec2::new(-0.1, 0.5),
        ];
        for s in &shapes {
            let exact = s.triangle_area(&tri);
            let mc = mc_area(s, &tri, 1500);
            assert!(
                (exact - mc).abs() < 2e-3 * triangle_signed_area(&tri).abs(),
                "{s:?} {exact} {mc}"
            );
        }
    }

    #[test]
    fn level_set_area_of_disc() {
        let r = LevelSetRegion::new(
            |p: Vec2| 0.7 - p.norm(),
            Vec2::repeat(-1.0),
            Vec2::repeat(1.0),
        );
        assert!((r.area() - 0.49 * PI).abs() < 1e-6);
    }

    #[test]
    fn erosion() {
        let d = Shape::disc(Vec2::zeros(), 1.0).unwrap();
        assert!((d.eroded(0.25).area() - 0.5625 * PI).abs() < 1e-13);
        assert_eq!(d.eroded(1.5).area(), 0.0);
        let rect = Shape::polygon(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        // (2 − 2h)(1 − 2h)
        let got = rect.eroded(0.1).area();
        assert!((got - 1.8 * 0.8).abs() < 1e-5, "{got}");
    }

    proptest! {
        #[test]
        fn disc_area_additivity(cx in -0.5..0.5f64, cy in -0.5..0.5f64, r in 0.05..1.5f64) {
            // split the square [-1,1]^2 into two triangles: areas add to |disc ∩ square|
            let c = Vec2::new(cx, cy);
            let t1 = [Vec2::new(-1.0, -1.0), Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0)];
            let t2 = [Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0)];
            let a = disc_triangle_area(c, r, &t1) + disc_triangle_area(c, r, &t2);
            prop_assert!(a <= PI * r * r + 1e-12);
            prop_assert!(a <= 4.0 + 1e-12);
            if r + cx.abs().max(cy.abs()) <= 1.0 {
                prop_assert!((a - PI * r * r).abs() < 1e-12);
            }
        }
    }
}

//! Closed boundary curves parametrised by arclength.
//!
//! Curves are traversed counterclockwise. The unit tangent is `τ` and the
//! outward normal is `n = (τ₂, −τ₁)`, so that `τ` is `n` rotated by a right
//! angle counterclockwise.

use crate::error::{Error, Result};
use crate::quad::GaussRule;
use crate::Vec2;
use std::f64::consts::{PI, TAU};

/// A straight segment or circular arc of a piecewise boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    Segment {
        a: Vec2,
        b: Vec2,
    },
    /// Arc `c + r(cos α, sin α)` for `α` from `start` to `start + sweep`.
    Arc {
        center: Vec2,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl Piece {
    fn length(&self) -> f64 {
        match self {
            Piece::Segment { a, b } => (b - a).norm(),
            Piece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Point and unit tangent at local arclength `t`.
    fn eval(&self, t: f64) -> (Vec2, Vec2) {
        match self {
            Piece::Segment { a, b } => {
                let d = (b - a).normalize();
                (a + d * t, d)
            }
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let sg = sweep.signum();
                let ang = start + sg * t / radius;
                let (s, c) = ang.sin_cos();
                (center + Vec2::new(c, s) * *radius, Vec2::new(-s, c) * sg)
            }
        }
    }

    /// Signed curvature (positive for a counterclockwise turn).
    fn curvature(&self) -> f64 {
        match self {
            Piece::Segment { .. } => 0.0,
            Piece::Arc { radius, sweep, .. } => sweep.signum() / radius,
        }
    }

    /// Closest point as local arclength.
    fn nearest(&self, p: Vec2) -> f64 {
        match self {
            Piece::Segment { a, b } => {
                let d = b - a;
                let len = d.norm();
                ((p - a).dot(&d) / len).clamp(0.0, len)
            }
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let v = p - center;
                let len = self.length();
                if v.norm() == 0.0 {
                    return 0.0;
                }
                let ang = v.y.atan2(v.x);
                // local angle measured along the sweep direction
                let rel = (sweep.signum() * (ang - start)).rem_euclid(TAU);
                if rel <= sweep.abs() {
                    rel * radius
                } else {
                    let to_start = (self.eval(0.0).0 - p).norm();
                    let to_end = (self.eval(len).0 - p).norm();
                    if to_start <= to_end {
                        0.0
                    } else {
                        len
                    }
                }
            }
        }
    }

    /// `½∫(x dy − y dx)` along the piece.
    fn green_area(&self) -> f64 {
        match self {
            Piece::Segment { a, b } => 0.5 * (a.x * b.y - b.x * a.y),
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let (a0, a1) = (*start, start + sweep);
                0.5 * (radius * radius * sweep
                    + radius
                        * (center.x * (a1.sin() - a0.sin()) - center.y * (a1.cos() - a0.cos())))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct EllipseTable {
    /// cumulative arclength at θ_k = 2πk/N
    cum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Circle {
        center: Vec2,
        radius: f64,
    },
    Ellipse {
        center: Vec2,
        a: f64,
        b: f64,
        table: EllipseTable,
    },
    Pieces {
        pieces: Vec<Piece>,
        cum: Vec<f64>,
    },
}

/// A closed `C^{1,1}` curve with an exact arclength parametrisation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    kind: Kind,
    length: f64,
}

const ELLIPSE_TABLE: usize = 512;

fn ellipse_speed(a: f64, b: f64, th: f64) -> f64 {
    (a * a * th.sin().powi(2) + b * b * th.cos().powi(2)).sqrt()
}

/// Result of a closest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub s: f64,
    pub point: Vec2,
    pub distance: f64,
    /// Positive inside the curve, negative outside.
    pub signed: f64,
}

impl BoundaryCurve {
    pub fn circle(center: Vec2, radius: f64) -> Result<BoundaryCurve> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "circle radius {radius} must be positive"
            )));
        }
        Ok(BoundaryCurve {
            kind: Kind::Circle { center, radius },
            length: TAU * radius,
        })
    }

    pub fn ellipse(center: Vec2, a: f64, b: f64) -> Result<BoundaryCurve> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "ellipse semi-axes ({a}, {b}) must be positive"
            )));
        }
        let rule = GaussRule::new(16);
        let mut cum = Vec::with_capacity(ELLIPSE_TABLE + 1);
        cum.push(0.0);
        let dth = TAU / ELLIPSE_TABLE as f64;
        for k in 0..ELLIPSE_TABLE {
            let t0 = k as f64 * dth;
            let seg = rule.integrate(t0, t0 + dth, |t| ellipse_speed(a, b, t));
            cum.push(cum[k] + seg);
        }
        let length = cum[ELLIPSE_TABLE];
        Ok(BoundaryCurve {
            kind: Kind::Ellipse {
                center,
                a,
                b,
                table: EllipseTable { cum },
            },
            length,
        })
    }

    /// Polygon with every corner replaced by a tangent circular arc of
    /// radius `corner_radius`. Vertices may be given in either orientation.
    pub fn rounded_polygon(vertices: &[Vec2], corner_radius: f64) -> Result<BoundaryCurve> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidSpec(
                "polygon needs at least three vertices".into(),
            ));
        }
        if !(corner_radius > 0.0) {
            return Err(Error::InvalidSpec("corner radius must be positive".into()));
        }
        let mut v: Vec<Vec2> = vertices.to_vec();
        if polygon_signed_area(&v) < 0.0 {
            v.reverse();
        }
        if !polygon_is_simple(&v) {
            return Err(Error::InvalidSpec(
                "domain boundary must be a simple closed curve".into(),
            ));
        }
        // tangent points and arcs at each corner
        let mut arcs = Vec::with_capacity(n);
        let mut tangent_len = Vec::with_capacity(n);
        for i in 0..n {
            let prev = v[(i + n - 1) % n];
            let cur = v[i];
            let next = v[(i + 1) % n];
            let din = (cur - prev).normalize();
            let dout = (next - cur).normalize();
            let turn = din.perp(&dout).atan2(din.dot(&dout));
            if turn.abs() < 1e-12 {
                return Err(Error::InvalidSpec(format!("collinear vertex {i}")));
            }
            if turn.abs() > PI - 1e-9 {
                return Err(Error::InvalidSpec(format!(
                    "vertex {i} folds back on itself"
                )));
            }
            let t = corner_radius * (turn.abs() / 2.0).tan();
            let left = Vec2::new(-din.y, din.x);
            let p0 = cur - din * t;
            let center = p0 + left * (corner_radius * turn.signum());
            let r0 = p0 - center;
            let start = r0.y.atan2(r0.x);
            arcs.push(Piece::Arc {
                center,
                radius: corner_radius,
                start,
                sweep: turn,
            });
            tangent_len.push(t);
        }
        let mut pieces = Vec::with_capacity(2 * n);
        for i in 0..n {
            let j = (i + 1) % n;
            let edge = (v[j] - v[i]).norm();
            if tangent_len[i] + tangent_len[j] > edge + 1e-12 {
                return Err(Error::InvalidSpec(format!(
                    "corner radius {corner_radius} too large for edge {i}"
                )));
            }
            pieces.push(arcs[i].clone());
            let d = (v[j] - v[i]).normalize();
            let a = v[i] + d * tangent_len[i];
            let b = v[j] - d * tangent_len[j];
            if (b - a).norm() > 1e-14 {
                pieces.push(Piece::Segment { a, b });
            }
        }
        let mut cum = vec![0.0];
        for p in &pieces {
            cum.push(cum.last().unwrap() + p.length());
        }
        let length = *cum.last().unwrap();
        Ok(BoundaryCurve {
            kind: Kind::Pieces { pieces, cum },
            length,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    fn wrap(&self, s: f64) -> f64 {
        let w = s.rem_euclid(self.length);
        if w >= self.length {
            0.0
        } else {
            w
        }
    }

    fn ellipse_theta(&self, s: f64) -> f64 {
        let Kind::Ellipse { a, b, table, .. } = &self.kind else {
            unreachable!()
        };
        let cum = &table.cum;
        let k = match cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(k) => return k as f64 * TAU / ELLIPSE_TABLE as f64,
            Err(k) => k - 1,
        };
        let t0 = k as f64 * TAU / ELLIPSE_TABLE as f64;
        let rule = GaussRule::new(16);
        let mut th = t0 + (s - cum[k]) / ellipse_speed(*a, *b, t0);
        for _ in 0..8 {
            let f = cum[k] + rule.integrate(t0, th, |t| ellipse_speed(*a, *b, t)) - s;
            let step = f / ellipse_speed(*a, *b, th);
            th -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        th
    }

    /// Point and unit tangent at arclength `s`.
    pub fn eval(&self, s: f64) -> (Vec2, Vec2) {
        let s = self.wrap(s);
        match &self.kind {
            Kind::Circle { center, radius } => {
                let ang = s / radius;
                let (sn, cs) = ang.sin_cos();
                (center + Vec2::new(cs, sn) * *radius, Vec2::new(-sn, cs))
            }
            Kind::Ellipse { center, a, b, .. } => {
                let th = self.ellipse_theta(s);
                let (sn, cs) = th.sin_cos();
                let d = Vec2::new(-a * sn, b * cs);
                (center + Vec2::new(a * cs, b * sn), d.normalize())
            }
            Kind::Pieces { pieces, cum } => {
                let i = piece_index(cum, s);
                pieces[i].eval(s - cum[i])
            }
        }
    }

    pub fn point(&self, s: f64) -> Vec2 {
        self.eval(s).0
    }

    pub fn tangent(&self, s: f64) -> Vec2 {
        self.eval(s).1
    }

    /// Outward unit normal.
    pub fn normal(&self, s: f64) -> Vec2 {
        let t = self.tangent(s);
        Vec2::new(t.y, -t.x)
    }

    pub fn curvature(&self, s: f64) -> f64 {
        let s = self.wrap(s);
        match &self.kind {
            Kind::Circle { radius, .. } => 1.0 / radius,
            Kind::Ellipse { a, b, .. } => {
                let th = self.ellipse_theta(s);
                a * b / ellipse_speed(*a, *b, th).powi(3)
            }
            Kind::Pieces { pieces, cum } => pieces[piece_index(cum, s)].curvature(),
        }
    }

    /// Largest absolute curvature.
    pub fn max_curvature(&self) -> f64 {
        match &self.kind {
            Kind::Circle { radius, .. } => 1.0 / radius,
            Kind::Ellipse { a, b, .. } => a.max(*b) / a.min(*b).powi(2),
            Kind::Pieces { pieces, .. } => pieces
                .iter()
                .map(|p| p.curvature().abs())
                .fold(0.0, f64::max),
        }
    }

    /// Arclength positions where the curve changes analytic form.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Pieces { cum, .. } => cum[..cum.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    pub fn area(&self) -> f64 {
        match &self.kind {
            Kind::Circle { radius, .. } => PI * radius * radius,
            Kind::Ellipse { a, b, .. } => PI * a * b,
            Kind::Pieces { pieces, .. } => pieces.iter().map(Piece::green_area).sum(),
        }
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        match &self.kind {
            Kind::Circle { center, radius } => (
                center - Vec2::new(*radius, *radius),
                center + Vec2::new(*radius, *radius),
            ),
            Kind::Ellipse { center, a, b, .. } => {
                (center - Vec2::new(*a, *b), center + Vec2::new(*a, *b))
            }
            Kind::Pieces { .. } => {
                let mut lo = Vec2::repeat(f64::INFINITY);
                let mut hi = Vec2::repeat(f64::NEG_INFINITY);
                let n = 4096;
                for k in 0..n {
                    let p = self.point(self.length * k as f64 / n as f64);
                    lo = lo.inf(&p);
                    hi = hi.sup(&p);
                }
                (lo, hi)
            }
        }
    }

    /// Closest boundary point and signed distance (positive inside).
    pub fn nearest(&self, p: Vec2) -> Nearest {
        let (s, q) = match &self.kind {
            Kind::Circle { center, radius } => {
                let v = p - center;
                let ang = if v.norm() == 0.0 {
                    0.0
                } else {
                    v.y.atan2(v.x).rem_euclid(TAU)
                };
                let s = ang * radius;
                (s, self.point(s))
            }
            Kind::Ellipse {
                center,
                a,
                b,
                table,
            } => {
                let th = nearest_on_ellipse(p - center, *a, *b);
                let s = ellipse_arclength(*a, *b, &table.cum, th);
                let (sn, cs) = th.sin_cos();
                (self.wrap(s), center + Vec2::new(a * cs, b * sn))
            }
            Kind::Pieces { pieces, cum } => {
                let mut best = (f64::INFINITY, 0.0, Vec2::zeros());
                for (i, piece) in pieces.iter().enumerate() {
                    let t = piece.nearest(p);
                    let q = piece.eval(t).0;
                    let d = (q - p).norm();
                    if d < best.0 {
                        best = (d, cum[i] + t, q);
                    }
                }
                (self.wrap(best.1), best.2)
            }
        };
        let distance = (p - q).norm();
        let n = self.normal(s);
        let inside = match &self.kind {
            Kind::Circle { center, radius } => (p - center).norm() < *radius,
            Kind::Ellipse { center, a, b, .. } => {
                let v = p - center;
                (v.x / a).powi(2) + (v.y / b).powi(2) < 1.0
            }
            Kind::Pieces { .. } => (p - q).dot(&n) < 0.0,
        };
        let signed = if inside { distance } else { -distance };
        Nearest {
            s,
            point: q,
            distance,
            signed,
        }
    }

    /// Signed distance to the curve, positive inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        match &self.kind {
            Kind::Circle { center, radius } => radius - (p - center).norm(),
            Kind::Ellipse { center, a, b, .. } => {
                let v = p - center;
                let th = nearest_on_ellipse(v, *a, *b);
                let d = (Vec2::new(a * th.cos(), b * th.sin()) - v).norm();
                if (v.x / a).powi(2) + (v.y / b).powi(2) < 1.0 {
                    d
                } else {
                    -d
                }
            }
            Kind::Pieces { .. } => self.nearest(p).signed,
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.signed_distance(p) > 0.0
    }

    /// `∫ f(point, tangent) ds` over `[s0, s1]` (with `s1 > s0`, possibly
    /// wrapping past the origin), splitting at breakpoints.
    pub fn integrate(
        &self,
        s0: f64,
        s1: f64,
        rule: &GaussRule,
        mut f: impl FnMut(Vec2, Vec2) -> f64,
    ) -> f64 {
        let mut total = 0.0;
        for (a, b) in self.smooth_intervals(s0, s1) {
            total += rule.integrate(a, b, |s| {
                let (p, t) = self.eval(s);
                f(p, t)
            });
        }
        total
    }

    /// Splits `[s0, s1]` at breakpoints (in unwrapped coordinates).
    pub fn smooth_intervals(&self, s0: f64, s1: f64) -> Vec<(f64, f64)> {
        let mut cuts = vec![s0];
        let bps = self.breakpoints();
        if !bps.is_empty() {
            let k0 = (s0 / self.length).floor() as i64;
            let k1 = (s1 / self.length).floor() as i64;
            for k in k0..=k1 {
                for &b in &bps {
                    let x = b + k as f64 * self.length;
                    if x > s0 + 1e-14 && x < s1 - 1e-14 {
                        cuts.push(x);
                    }
                }
            }
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.push(s1);
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Signed area enclosed between the curve from `s0` to `s1` and the
    /// chord back to the start point. Positive when the curve bulges to the
    /// right of the chord direction (outwards on a convex arc).
    pub fn segment_area(&self, s0: f64, s1: f64, rule: &GaussRule) -> f64 {
        // With the origin moved to the start point the closing chord
        // contributes nothing to the Green integral.
        let p0 = self.point(s0);
        self.integrate(s0, s1, rule, |p, t| {
            let q = p - p0;
            0.5 * (q.x * t.y - q.y * t.x)
        })
    }
}

fn piece_index(cum: &[f64], s: f64) -> usize {
    let n = cum.len() - 1;
    match cum.binary_search_by(|c| c.total_cmp(&s)) {
        Ok(k) => k.min(n - 1),
        Err(k) => (k - 1).min(n - 1),
    }
}

fn ellipse_arclength(a: f64, b: f64, cum: &[f64], th: f64) -> f64 {
    let th = th.rem_euclid(TAU);
    let dth = TAU / ELLIPSE_TABLE as f64;
    let k = ((th / dth).floor() as usize).min(ELLIPSE_TABLE - 1);
    let t0 = k as f64 * dth;
    cum[k] + GaussRule::new(16).integrate(t0, th, |t| ellipse_speed(a, b, t))
}

/// Parameter of the closest point on the axis-aligned ellipse centred at the
/// origin.
pub(crate) fn nearest_on_ellipse(p: Vec2, a: f64, b: f64) -> f64 {
    let dist2 = |t: f64| (a * t.cos() - p.x).powi(2) + (b * t.sin() - p.y).powi(2);
    let samples = 64;
    let mut best = 0.0;
    let mut bd = f64::INFINITY;
    for k in 0..samples {
        let t = TAU * k as f64 / samples as f64;
        let d = dist2(t);
        if d < bd {
            bd = d;
            best = t;
        }
    }
    // Newton on g(t) = (P(t) − p)·P'(t), safeguarded to one sample spacing
    let h = TAU / samples as f64;
    let (lo, hi) = (best - h, best + h);
    let mut t = best;
    for _ in 0..50 {
        let (s, c) = t.sin_cos();
        let g = (a * c - p.x) * (-a * s) + (b * s - p.y) * (b * c);
        let dg =
            (a * s).powi(2) + (b * c).powi(2) + (a * c - p.x) * (-a * c) + (b * s - p.y) * (-b * s);
        let next = if dg > 0.0 {
            t - g / dg
        } else {
            t - g.signum() * h * 0.1
        };
        let next = next.clamp(lo, hi);
        if (next - t).abs() < 1e-15 {
            t = next;
            break;
        }
        t = next;
    }
    if dist2(t) <= bd {
        t
    } else {
        best
    }
}

pub fn polygon_signed_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].perp(&v[(i + 1) % n])).sum::<f64>() * 0.5
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let o = |a: Vec2, b: Vec2, c: Vec2| (b - a).perp(&(c - a));
    let d1 = o(q1, q2, p1);
    let d2 = o(q1, q2, p2);
    let d3 = o(p1, p2, q1);
    let d4 = o(p1, p2, q2);
    ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0))
}

pub fn polygon_is_simple(v: &[Vec2]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

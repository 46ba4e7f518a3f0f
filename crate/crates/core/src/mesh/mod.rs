//! Triangular meshes of plate domains.
//!
//! Boundary vertices are placed on the exact curve and tagged with their
//! arclength. Interior vertices come from nested hexagonal lattices whose
//! spacing follows a size field, optionally graded towards an inclusion
//! boundary, then the point set is smoothed and Delaunay-triangulated.

pub mod delaunay;

use crate::error::{Error, Result};
use crate::geometry::{PlateDomain, Shape};
use crate::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const NO_TRI: usize = usize::MAX;

/// A boundary edge with the arclength interval it spans (`s1 > s0`; `s1`
/// may exceed the perimeter on the closing edge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub edge: usize,
    pub tri: usize,
    pub s0: f64,
    pub s1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec2>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Vertex pairs with `a < b`.
    pub edges: Vec<[usize; 2]>,
    /// `tri_edges[t][k]` is the edge opposite local vertex `k`.
    pub tri_edges: Vec<[usize; 3]>,
    /// Adjacent triangles; the second entry is `NO_TRI` on the boundary.
    pub edge_tris: Vec<[usize; 2]>,
    /// Arclength of boundary vertices.
    pub vertex_s: Vec<Option<f64>>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Boundary edge index for each edge, if any.
    pub edge_boundary: Vec<Option<usize>>,
    /// Largest element diameter.
    pub h_mesh: f64,
    pub perimeter: f64,
}

/// Local refinement towards the boundary of a region.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub shape: Shape,
    pub h_fine: f64,
    /// Growth of the size field per unit distance from the shape boundary.
    pub grading: f64,
    /// Place vertices on the shape boundary so that elements do not straddle it.
    pub fit_interface: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshOptions {
    pub h: f64,
    pub refinement: Option<Refinement>,
    pub smoothing_passes: usize,
    pub seed: u64,
}

impl MeshOptions {
    pub fn uniform(h: f64) -> MeshOptions {
        MeshOptions {
            h,
            refinement: None,
            smoothing_passes: 2,
            seed: 0x5eed,
        }
    }
}

struct SizeField<'a> {
    h: f64,
    refinement: Option<&'a Refinement>,
}

impl SizeField<'_> {
    fn at(&self, p: Vec2) -> f64 {
        match self.refinement {
            None => self.h,
            Some(r) => {
                let d = r.shape.inner_distance(p).abs();
                self.h.min(r.h_fine + r.grading * d)
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Boundary(f64),
    Interface,
    Free,
}

/// Generates a mesh of `dom`.
pub fn generate_mesh(dom: &PlateDomain, opts: &MeshOptions) -> Result<Mesh> {
    let h = opts.h;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::MeshFailure(format!(
            "target size {h} must be positive"
        )));
    }
    let (lo, hi) = dom.bbox();
    let cells = ((hi.x - lo.x) * (hi.y - lo.y)) / (h * h);
    if cells > 4e6 {
        return Err(Error::MeshFailure(format!(
            "target size {h} too small for the domain"
        )));
    }
    if let Some(r) = &opts.refinement {
        if !(r.h_fine > 0.0 && r.grading > 0.0) {
            return Err(Error::MeshFailure(
                "refinement needs positive h_fine and grading".into(),
            ));
        }
    }
    let size = SizeField {
        h,
        refinement: opts.refinement.as_ref(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pts: Vec<Vec2> = Vec::new();
    let mut kinds: Vec<Kind> = Vec::new();

    // boundary vertices
    let len = dom.perimeter();
    for s in boundary_positions(dom, &size) {
        pts.push(dom.curve.point(s));
        kinds.push(Kind::Boundary(s));
    }
    let nb = pts.len();
    if nb < 8 {
        return Err(Error::MeshFailure("boundary resolution too coarse".into()));
    }

    // interface vertices
    let mut interface: Option<&Shape> = None;
    if let Some(r) = &opts.refinement {
        if r.fit_interface {
            interface = Some(&r.shape);
            for p in interface_points(&r.shape, &size) {
                if dom.signed_distance(p) > 0.5 * size.at(p) {
                    pts.push(p);
                    kinds.push(Kind::Interface);
                }
            }
        }
    }

    // lattice vertices
    let levels = match &opts.refinement {
        None => 0,
        Some(r) => ((h / r.h_fine).log2().ceil().max(0.0) as usize).min(12),
    };
    for level in 0..=levels {
        let hl = h / 2f64.powi(level as i32);
        let dy = hl * 3f64.sqrt() / 2.0;
        let nj = ((hi.y - lo.y) / dy).ceil() as i64 + 1;
        let ni = ((hi.x - lo.x) / hl).ceil() as i64 + 2;
        for j in 0..nj {
            let y = lo.y + j as f64 * dy;
            let off = if j % 2 == 0 { 0.0 } else { 0.5 * hl };
            for i in -1..ni {
                let p = Vec2::new(lo.x + off + i as f64 * hl, y);
                let local = size.at(p);
                let lvl = (h / local).log2().round().max(0.0) as usize;
                if lvl.min(levels) != level {
                    continue;
                }
                if dom.signed_distance(p) < 0.5 * local {
                    continue;
                }
                if let Some(sh) = interface {
                    if sh.inner_distance(p).abs() < 0.5 * local {
                        continue;
                    }
                }
                let jitter = 1e-6 * hl;
                pts.push(
                    p + Vec2::new(
                        rng.random_range(-jitter..jitter),
                        rng.random_range(-jitter..jitter),
                    ),
                );
                kinds.push(Kind::Free);
            }
        }
    }

    let mut tris = build_triangles(dom, &pts)?;
    for _ in 0..opts.smoothing_passes {
        smooth(dom, &size, &mut pts, &kinds, &tris, 3);
        tris = build_triangles(dom, &pts)?;
    }
    assemble_mesh(pts, kinds, tris, len)
}

/// Arclength positions of boundary vertices, equally spaced when the size
/// field is constant along the boundary.
fn boundary_positions(dom: &PlateDomain, size: &SizeField) -> Vec<f64> {
    let len = dom.perimeter();
    let samples = 4096;
    let dens: Vec<f64> = (0..=samples)
        .map(|k| 1.0 / size.at(dom.curve.point(len * k as f64 / samples as f64)))
        .collect();
    let uniform = dens.iter().all(|&d| (d - dens[0]).abs() <= 1e-12 * d);
    if uniform {
        let n = (len * dens[0]).ceil().max(8.0) as usize;
        return (0..n).map(|k| len * k as f64 / n as f64).collect();
    }
    let mut cum = vec![0.0];
    for k in 0..samples {
        cum.push(cum[k] + 0.5 * (dens[k] + dens[k + 1]) * len / samples as f64);
    }
    let total = cum[samples];
    let n = total.ceil().max(8.0) as usize;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for m in 0..n {
        let target = total * m as f64 / n as f64;
        while seg + 1 < samples && cum[seg + 1] < target {
            seg += 1;
        }
        let f = if cum[seg + 1] > cum[seg] {
            (target - cum[seg]) / (cum[seg + 1] - cum[seg])
        } else {
            0.0
        };
        out.push(len * (seg as f64 + f) / samples as f64);
    }
    out
}

fn interface_points(shape: &Shape, size: &SizeField) -> Vec<Vec2> {
    let dense = shape.boundary_points(8192);
    let mut perim = 0.0;
    for k in 0..dense.len() {
        perim += (dense[(k + 1) % dense.len()] - dense[k]).norm();
    }
    let local = size.at(dense[0]);
    let n = (perim / local).ceil().max(8.0) as usize;
    match shape {
        Shape::Polygon { vertices } => {
            let mut out = Vec::new();
            let m = vertices.len();
            for i in 0..m {
                let a = vertices[i];
                let b = vertices[(i + 1) % m];
                let k = ((b - a).norm() / local).ceil().max(1.0) as usize;
                for j in 0..k {
                    out.push(a + (b - a) * (j as f64 / k as f64));
                }
            }
            out
        }
        _ => {
            // equal arclength spacing along the dense polygon
            let step = perim / n as f64;
            let mut out = Vec::with_capacity(n);
            let mut acc = 0.0;
            let mut next = 0.0;
            for k in 0..dense.len() {
                let a = dense[k];
                let b = dense[(k + 1) % dense.len()];
                let l = (b - a).norm();
                while next < acc + l && out.len() < n {
                    out.push(a + (b - a) * ((next - acc) / l));
                    next += step;
                }
                acc += l;
            }
            out
        }
    }
}

fn build_triangles(dom: &PlateDomain, pts: &[Vec2]) -> Result<Vec<[usize; 3]>> {
    let all = delaunay::triangulate(pts)?;
    Ok(all
        .into_iter()
        .filter(|t| {
            let c = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
            dom.contains(c)
        })
        .collect())
}

fn smooth(
    dom: &PlateDomain,
    size: &SizeField,
    pts: &mut [Vec2],
    kinds: &[Kind],
    tris: &[[usize; 3]],
    iters: usize,
) {
    let n = pts.len();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in tris {
        for k in 0..3 {
            let a = t[k];
            let b = t[(k + 1) % 3];
            nbrs[a].push(b);
            nbrs[b].push(a);
        }
    }
    for l in &mut nbrs {
        l.sort_unstable();
        l.dedup();
    }
    for _ in 0..iters {
        for v in 0..n {
            if kinds[v] != Kind::Free || nbrs[v].is_empty() {
                continue;
            }
            let avg = nbrs[v].iter().map(|&u| pts[u]).sum::<Vec2>() / nbrs[v].len() as f64;
            if dom.signed_distance(avg) > 0.3 * size.at(avg) {
                pts[v] = avg;
            }
        }
    }
}

fn assemble_mesh(
    pts: Vec<Vec2>,
    kinds: Vec<Kind>,
    tris: Vec<[usize; 3]>,
    perimeter: f64,
) -> Result<Mesh> {
    // drop unused vertices
    let mut used = vec![false; pts.len()];
    for t in &tris {
        for &v in t {
            used[v] = true;
        }
    }
    for (v, k) in kinds.iter().enumerate() {
        if matches!(k, Kind::Boundary(_)) && !used[v] {
            return Err(Error::MeshFailure(format!("boundary vertex {v} lost")));
        }
    }
    let mut remap = vec![usize::MAX; pts.len()];
    let mut vertices = Vec::new();
    let mut vertex_s = Vec::new();
    for v in 0..pts.len() {
        if used[v] {
            remap[v] = vertices.len();
            vertices.push(pts[v]);
            vertex_s.push(match kinds[v] {
                Kind::Boundary(s) => Some(s),
                _ => None,
            });
        }
    }
    let triangles: Vec<[usize; 3]> = tris
        .iter()
        .map(|t| [remap[t[0]], remap[t[1]], remap[t[2]]])
        .collect();

    let mut half: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(3 * triangles.len());
    for (ti, t) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = t[(k + 1) % 3];
            let b = t[(k + 2) % 3];
            half.push((a.min(b), a.max(b), ti, k));
        }
    }
    half.sort_unstable();
    let mut edges = Vec::new();
    let mut edge_tris = Vec::new();
    let mut tri_edges = vec![[usize::MAX; 3]; triangles.len()];
    let mut i = 0;
    while i < half.len() {
        let (a, b, t, k) = half[i];
        let id = edges.len();
        edges.push([a, b]);
        tri_edges[t][k] = id;
        let mut pair = [t, NO_TRI];
        if i + 1 < half.len() && half[i + 1].0 == a && half[i + 1].1 == b {
            let (_, _, t2, k2) = half[i + 1];
            tri_edges[t2][k2] = id;
            pair[1] = t2;
            i += 1;
            if i + 1 < half.len() && half[i + 1].0 == a && half[i + 1].1 == b {
                return Err(Error::MeshFailure("non-manifold edge".into()));
            }
        }
        edge_tris.push(pair);
        i += 1;
    }

    let mut boundary_edges = Vec::new();
    let mut edge_boundary = vec![None; edges.len()];
    for (e, pair) in edge_tris.iter().enumerate() {
        if pair[1] != NO_TRI {
            continue;
        }
        let [a, b] = edges[e];
        let (Some(sa), Some(sb)) = (vertex_s[a], vertex_s[b]) else {
            return Err(Error::MeshFailure(format!(
                "boundary edge {e} has an interior vertex"
            )));
        };
        // orient along the counterclockwise boundary
        let t = triangles[pair[0]];
        let k = (0..3).find(|&k| t[k] != a && t[k] != b).unwrap();
        let from = t[(k + 1) % 3];
        let (s0, mut s1) = if from == a { (sa, sb) } else { (sb, sa) };
        if s1 <= s0 {
            s1 += perimeter;
        }
        edge_boundary[e] = Some(boundary_edges.len());
        boundary_edges.push(BoundaryEdge {
            edge: e,
            tri: pair[0],
            s0,
            s1,
        });
    }
    let nbv = vertex_s.iter().filter(|s| s.is_some()).count();
    if boundary_edges.len() != nbv {
        return Err(Error::MeshFailure(format!(
            "boundary not recovered: {} boundary edges for {nbv} boundary vertices",
            boundary_edges.len()
        )));
    }
    let total: f64 = boundary_edges.iter().map(|b| b.s1 - b.s0).sum();
    if (total - perimeter).abs() > 1e-9 * perimeter {
        return Err(Error::MeshFailure(
            "boundary edges do not follow the curve".into(),
        ));
    }
    let h_mesh = triangles
        .iter()
        .map(|t| {
            let p = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            (p[0] - p[1])
                .norm()
                .max((p[1] - p[2]).norm())
                .max((p[2] - p[0]).norm())
        })
        .fold(0.0, f64::max);
    Ok(Mesh {
        vertices,
        triangles,
        edges,
        tri_edges,
        edge_tris,
        vertex_s,
        boundary_edges,
        edge_boundary,
        h_mesh,
        perimeter,
    })
}

impl Mesh {
    pub fn tri_points(&self, t: usize) -> [Vec2; 3] {
        let v = self.triangles[t];
        [
            self.vertices[v[0]],
            self.vertices[v[1]],
            self.vertices[v[2]],
        ]
    }

    pub fn centroid(&self, t: usize) -> Vec2 {
        let p = self.tri_points(t);
        (p[0] + p[1] + p[2]) / 3.0
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut best = 180.0f64;
        for t in 0..self.triangles.len() {
            let p = self.tri_points(t);
            for k in 0..3 {
                let a = p[(k + 1) % 3] - p[k];
                let b = p[(k + 2) % 3] - p[k];
                let ang = a.perp(&b).abs().atan2(a.dot(&b)).to_degrees();
                best = best.min(ang);
            }
        }
        best
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }
}

//! Incremental Bowyer–Watson Delaunay triangulation.

use crate::error::{Error, Result};
use crate::Vec2;
use std::collections::HashMap;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Tri {
    v: [usize; 3],
    /// `n[k]` is the neighbour across the edge opposite `v[k]`.
    n: [usize; 3],
    alive: bool,
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).perp(&(c - a))
}

/// Positive when `p` lies inside the circumcircle of the counterclockwise
/// triangle `abc`.
fn incircle(a: Vec2, b: Vec2, c: Vec2, p: Vec2) -> f64 {
    let (ax, ay) = (a.x - p.x, a.y - p.y);
    let (bx, by) = (b.x - p.x, b.y - p.y);
    let (cx, cy) = (c.x - p.x, c.y - p.y);
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx)
}

/// Order points along a serpentine sweep of a coarse grid for locality.
fn insertion_order(points: &[Vec2]) -> Vec<usize> {
    let n = points.len();
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let cells = ((n as f64).sqrt() / 2.0).ceil().max(1.0) as usize;
    let w = (hi - lo).max().max(f64::MIN_POSITIVE);
    let key = |p: &Vec2| {
        let i = (((p.x - lo.x) / w * cells as f64) as usize).min(cells - 1);
        let j = (((p.y - lo.y) / w * cells as f64) as usize).min(cells - 1);
        let col = if j.is_multiple_of(2) { i } else { cells - 1 - i };
        (j, col, p.y.to_bits(), p.x.to_bits())
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&k| key(&points[k]));
    idx
}

/// Delaunay triangulation of the convex hull of `points`; triangles are
/// counterclockwise index triples.
pub fn triangulate(points: &[Vec2]) -> Result<Vec<[usize; 3]>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::MeshFailure("fewer than three points".into()));
    }
    let mut pts = points.to_vec();
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let c = (lo + hi) * 0.5;
    let r = (hi - lo).norm().max(1e-300) * 20.0;
    pts.push(c + Vec2::new(-r, -r));
    pts.push(c + Vec2::new(r, -r));
    pts.push(c + Vec2::new(0.0, r));
    let mut tris = vec![Tri {
        v: [n, n + 1, n + 2],
        n: [NONE; 3],
        alive: true,
    }];
    let mut last = 0usize;
    let mut bad: Vec<usize> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut mark: Vec<u32> = vec![0];
    let mut stamp = 0u32;
    for &pi in &insertion_order(points) {
        let p = pts[pi];
        let t0 = locate(&pts, &tris, last, p)?;
        stamp += 1;
        bad.clear();
        stack.clear();
        stack.push(t0);
        mark[t0] = stamp;
        while let Some(t) = stack.pop() {
            bad.push(t);
            for k in 0..3 {
                let nb = tris[t].n[k];
                if nb != NONE && mark[nb] != stamp {
                    let v = tris[nb].v;
                    if incircle(pts[v[0]], pts[v[1]], pts[v[2]], p) > 0.0 {
                        mark[nb] = stamp;
                        stack.push(nb);
                    }
                }
            }
        }
        // boundary edges of the cavity, oriented as in the removed triangles
        let mut boundary: Vec<(usize, usize, usize)> = Vec::new();
        for &t in &bad {
            for k in 0..3 {
                let nb = tris[t].n[k];
                if nb == NONE || mark[nb] != stamp {
                    let a = tris[t].v[(k + 1) % 3];
                    let b = tris[t].v[(k + 2) % 3];
                    if orient(pts[a], pts[b], p) <= 0.0 {
                        return Err(Error::MeshFailure(format!(
                            "degenerate cavity while inserting point {pi}"
                        )));
                    }
                    boundary.push((a, b, nb));
                }
            }
        }
        for &t in &bad {
            tris[t].alive = false;
        }
        let mut by_start: HashMap<usize, usize> = HashMap::with_capacity(boundary.len());
        let mut by_end: HashMap<usize, usize> = HashMap::with_capacity(boundary.len());
        let base = tris.len();
        for (i, &(a, b, outer)) in boundary.iter().enumerate() {
            let id = base + i;
            tris.push(Tri {
                v: [a, b, pi],
                n: [NONE, NONE, outer],
                alive: true,
            });
            mark.push(0);
            if outer != NONE {
                for k in 0..3 {
                    let ov = tris[outer].v;
                    if ov[(k + 1) % 3] == b && ov[(k + 2) % 3] == a {
                        tris[outer].n[k] = id;
                    }
                }
            }
            by_start.insert(a, id);
            by_end.insert(b, id);
        }
        for i in 0..boundary.len() {
            let id = base + i;
            let (a, b, _) = boundary[i];
            // edge (b, p) is opposite a: shared with the triangle starting at b
            tris[id].n[0] = by_start[&b];
            // edge (p, a) is opposite b: shared with the triangle ending at a
            tris[id].n[1] = by_end[&a];
        }
        last = base;
    }
    let out: Vec<[usize; 3]> = tris
        .iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| v < n))
        .map(|t| t.v)
        .collect();
    Ok(out)
}

fn locate(pts: &[Vec2], tris: &[Tri], start: usize, p: Vec2) -> Result<usize> {
    let mut t = start;
    let limit = 4 * tris.len() + 100;
    'walk: for _ in 0..limit {
        let v = tris[t].v;
        for k in 0..3 {
            let a = pts[v[(k + 1) % 3]];
            let b = pts[v[(k + 2) % 3]];
            if orient(a, b, p) < 0.0 {
                let nb = tris[t].n[k];
                if nb == NONE {
                    break;
                }
                t = nb;
                continue 'walk;
            }
        }
        return Ok(t);
    }
    // fall back to a scan
    for (i, tri) in tris.iter().enumerate() {
        if !tri.alive {
            continue;
        }
        let v = tri.v;
        if (0..3).all(|k| orient(pts[v[(k + 1) % 3]], pts[v[(k + 2) % 3]], p) >= 0.0) {
            return Ok(i);
        }
    }
    Err(Error::MeshFailure("point location failed".into()))
}

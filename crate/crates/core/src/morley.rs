//! Morley nonconforming plate element on meshes with curved boundary cells.
//!
//! Degrees of freedom are vertex values and normal derivatives at edge
//! midpoints. The normal of edge `(a, b)` with `a < b` is the right-hand
//! normal of `x_b − x_a`. Elements touching `∂Ω` include the thin region
//! between the boundary chord and the exact curve; the element polynomial is
//! extended there, so quadratic fields are reproduced exactly on the true
//! domain.

use crate::geometry::PlateDomain;
use crate::mesh::Mesh;
use crate::quad::GaussRule;
use crate::Vec2;
use nalgebra::{Matrix3, Matrix6};

/// Monomials `[1, ξ, η, ξ², ξη, η²]` in scaled local coordinates.
fn monomials(xi: f64, eta: f64) -> [f64; 6] {
    [1.0, xi, eta, xi * xi, xi * eta, eta * eta]
}

/// Gradients of the monomials with respect to `(ξ, η)`.
fn monomial_grads(xi: f64, eta: f64) -> [[f64; 2]; 6] {
    [
        [0.0, 0.0],
        [1.0, 0.0],
        [0.0, 1.0],
        [2.0 * xi, 0.0],
        [eta, xi],
        [0.0, 2.0 * eta],
    ]
}

/// Curved part of an element: boundary arc `[s0, s1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub s0: f64,
    pub s1: f64,
    pub boundary_edge: usize,
    /// Signed area between chord and arc.
    pub area: f64,
    /// A representative point of the sliver.
    pub centroid: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementBasis {
    pub center: Vec2,
    pub scale: f64,
    /// `coef[m][j]`: coefficient of monomial `m` in basis function `j`.
    pub coef: [[f64; 6]; 6],
    /// Global DOF indices in local order `[v0, v1, v2, e0, e1, e2]`.
    pub dofs: [usize; 6],
    pub straight_area: f64,
    /// Area including curved slivers.
    pub area: f64,
    /// Integrals of the six monomials over the (curved) element.
    pub moments: [f64; 6],
    /// Voigt Hessian `(H11, H22, √2·H12)` of each basis function.
    pub hess: [[f64; 3]; 6],
    pub arcs: Vec<Arc>,
}

impl ElementBasis {
    fn local(&self, p: Vec2) -> (f64, f64) {
        (
            (p.x - self.center.x) / self.scale,
            (p.y - self.center.y) / self.scale,
        )
    }

    pub fn basis_values(&self, p: Vec2) -> [f64; 6] {
        let (xi, eta) = self.local(p);
        let m = monomials(xi, eta);
        let mut out = [0.0; 6];
        for (j, o) in out.iter_mut().enumerate() {
            *o = (0..6).map(|k| self.coef[k][j] * m[k]).sum();
        }
        out
    }

    pub fn basis_gradients(&self, p: Vec2) -> [Vec2; 6] {
        let (xi, eta) = self.local(p);
        let g = monomial_grads(xi, eta);
        let mut out = [Vec2::zeros(); 6];
        for (j, o) in out.iter_mut().enumerate() {
            let mut v = Vec2::zeros();
            for k in 0..6 {
                v += Vec2::new(g[k][0], g[k][1]) * self.coef[k][j];
            }
            *o = v / self.scale;
        }
        out
    }

    pub fn value(&self, u: &[f64; 6], p: Vec2) -> f64 {
        self.basis_values(p).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    pub fn gradient(&self, u: &[f64; 6], p: Vec2) -> Vec2 {
        self.basis_gradients(p)
            .iter()
            .zip(u)
            .map(|(g, c)| g * *c)
            .sum()
    }

    /// Hessian `(H11, H22, H12)` of the local field.
    pub fn hessian(&self, u: &[f64; 6]) -> [f64; 3] {
        let mut h = [0.0; 3];
        for j in 0..6 {
            h[0] += self.hess[j][0] * u[j];
            h[1] += self.hess[j][1] * u[j];
            h[2] += self.hess[j][2] * u[j] / std::f64::consts::SQRT_2;
        }
        h
    }

    /// Integral of `f` over the element, with `Σ w f(x_q)` on the straight
    /// triangle and the sliver value at its representative point.
    pub fn integrate(&self, tri: &[Vec2; 3], f: impl Fn(Vec2) -> f64) -> f64 {
        let mut total = 0.0;
        for (b, w) in DUNAVANT5 {
            let p = tri[0] * b[0] + tri[1] * b[1] + tri[2] * b[2];
            total += w * f(p);
        }
        total *= self.straight_area;
        for a in &self.arcs {
            total += a.area * f(a.centroid);
        }
        total
    }
}

/// Degree-5 seven-point rule: barycentric coordinates and weights.
pub const DUNAVANT5: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W0: f64 = 0.225;
    const W1: f64 = 0.132_394_152_788_506;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], W0),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// The discrete space on a mesh.
#[derive(Debug, Clone)]
pub struct MorleySpace {
    pub mesh: Mesh,
    pub nv: usize,
    pub ne: usize,
    pub edge_normals: Vec<Vec2>,
    pub elements: Vec<ElementBasis>,
    pub area: f64,
}

impl MorleySpace {
    pub fn new(mesh: Mesh, dom: &PlateDomain) -> MorleySpace {
        let nv = mesh.vertices.len();
        let ne = mesh.edges.len();
        let edge_normals: Vec<Vec2> = mesh
            .edges
            .iter()
            .map(|&[a, b]| {
                let d = mesh.vertices[b] - mesh.vertices[a];
                Vec2::new(d.y, -d.x) / d.norm()
            })
            .collect();
        let mut arcs_of: Vec<Vec<Arc>> = vec![Vec::new(); mesh.triangles.len()];
        let rule = GaussRule::new(8);
        for (bi, be) in mesh.boundary_edges.iter().enumerate() {
            let area = dom.curve.segment_area(be.s0, be.s1, &rule);
            let [a, b] = mesh.edges[be.edge];
            let chord_mid = (mesh.vertices[a] + mesh.vertices[b]) * 0.5;
            let arc_mid = dom.curve.point(0.5 * (be.s0 + be.s1));
            arcs_of[be.tri].push(Arc {
                s0: be.s0,
                s1: be.s1,
                boundary_edge: bi,
                area,
                centroid: chord_mid + (arc_mid - chord_mid) * 0.4,
            });
        }
        let elements: Vec<ElementBasis> = (0..mesh.triangles.len())
            .map(|t| {
                build_element(
                    &mesh,
                    &edge_normals,
                    dom,
                    t,
                    std::mem::take(&mut arcs_of[t]),
                    &rule,
                )
            })
            .collect();
        let area = elements.iter().map(|e| e.area).sum();
        MorleySpace {
            mesh,
            nv,
            ne,
            edge_normals,
            elements,
            area,
        }
    }

    pub fn ndof(&self) -> usize {
        self.nv + self.ne
    }

    pub fn local_dofs(&self, t: usize, u: &[f64]) -> [f64; 6] {
        self.elements[t].dofs.map(|d| u[d])
    }

    /// DOF vectors of the affine functions `1`, `x1`, `x2`.
    pub fn affine_kernel(&self) -> [Vec<f64>; 3] {
        let n = self.ndof();
        let mut z = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (v, p) in self.mesh.vertices.iter().enumerate() {
            z[0][v] = 1.0;
            z[1][v] = p.x;
            z[2][v] = p.y;
        }
        for (e, nn) in self.edge_normals.iter().enumerate() {
            z[1][self.nv + e] = nn.x;
            z[2][self.nv + e] = nn.y;
        }
        z
    }

    /// Rows of the normalisation functionals `∫w`, `∫w,1`, `∫w,2`.
    pub fn constraint_rows(&self) -> [Vec<f64>; 3] {
        let n = self.ndof();
        let mut b = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for el in &self.elements {
            let m = el.moments;
            let d = el.scale;
            for j in 0..6 {
                let c = |k: usize| el.coef[k][j];
                let int = (0..6).map(|k| c(k) * m[k]).sum::<f64>();
                let dx = (c(1) * m[0] + 2.0 * c(3) * m[1] + c(4) * m[2]) / d;
                let dy = (c(2) * m[0] + c(4) * m[1] + 2.0 * c(5) * m[2]) / d;
                b[0][el.dofs[j]] += int;
                b[1][el.dofs[j]] += dx;
                b[2][el.dofs[j]] += dy;
            }
        }
        b
    }

    /// Morley interpolant of a smooth function given its value and gradient.
    pub fn interpolate(&self, f: impl Fn(Vec2) -> f64, grad: impl Fn(Vec2) -> Vec2) -> Vec<f64> {
        let mut u = vec![0.0; self.ndof()];
        for (v, p) in self.mesh.vertices.iter().enumerate() {
            u[v] = f(*p);
        }
        for (e, &[a, b]) in self.mesh.edges.iter().enumerate() {
            let m = (self.mesh.vertices[a] + self.mesh.vertices[b]) * 0.5;
            u[self.nv + e] = grad(m).dot(&self.edge_normals[e]);
        }
        u
    }
}

fn build_element(
    mesh: &Mesh,
    normals: &[Vec2],
    dom: &PlateDomain,
    t: usize,
    arcs: Vec<Arc>,
    rule: &GaussRule,
) -> ElementBasis {
    let tri = mesh.tri_points(t);
    let center = (tri[0] + tri[1] + tri[2]) / 3.0;
    let scale = (tri[0] - tri[1])
        .norm()
        .max((tri[1] - tri[2]).norm())
        .max((tri[2] - tri[0]).norm());
    let loc = |p: Vec2| ((p.x - center.x) / scale, (p.y - center.y) / scale);
    let v = mesh.triangles[t];
    let mut dofs = [0usize; 6];
    let mut dof_matrix = Matrix6::<f64>::zeros();
    for k in 0..3 {
        dofs[k] = v[k];
        let (xi, eta) = loc(tri[k]);
        let m = monomials(xi, eta);
        for j in 0..6 {
            dof_matrix[(k, j)] = m[j];
        }
    }
    for k in 0..3 {
        let e = mesh.tri_edges[t][k];
        dofs[3 + k] = mesh.ne_offset() + e;
        let mid = (tri[(k + 1) % 3] + tri[(k + 2) % 3]) * 0.5;
        let (xi, eta) = loc(mid);
        let g = monomial_grads(xi, eta);
        let n = normals[e];
        for j in 0..6 {
            dof_matrix[(3 + k, j)] = (g[j][0] * n.x + g[j][1] * n.y) / scale;
        }
    }
    let inv = dof_matrix.try_inverse().expect("nondegenerate triangle");
    let mut coef = [[0.0; 6]; 6];
    for m in 0..6 {
        for j in 0..6 {
            coef[m][j] = inv[(m, j)];
        }
    }
    let s2 = scale * scale;
    let mut hess = [[0.0; 3]; 6];
    for j in 0..6 {
        hess[j] = [
            2.0 * coef[3][j] / s2,
            2.0 * coef[5][j] / s2,
            std::f64::consts::SQRT_2 * coef[4][j] / s2,
        ];
    }
    let straight_area = 0.5 * (tri[1] - tri[0]).perp(&(tri[2] - tri[0]));
    // edge-midpoint rule is exact for quadratics
    let mut moments = [0.0; 6];
    for k in 0..3 {
        let mid = (tri[(k + 1) % 3] + tri[(k + 2) % 3]) * 0.5;
        let (xi, eta) = loc(mid);
        let m = monomials(xi, eta);
        for i in 0..6 {
            moments[i] += straight_area * m[i] / 3.0;
        }
    }
    let mut area = straight_area;
    for a in &arcs {
        area += a.area;
        let sm = sliver_moments(dom, a, center, scale, rule);
        for i in 0..6 {
            moments[i] += sm[i];
        }
    }
    ElementBasis {
        center,
        scale,
        coef,
        dofs,
        straight_area,
        area,
        moments,
        hess,
        arcs,
    }
}

/// Monomial integrals over the region between the arc and its chord, from
/// `∫ g dA = ∮ G dy` with `∂G/∂x = g`.
fn sliver_moments(
    dom: &PlateDomain,
    arc: &Arc,
    center: Vec2,
    d: f64,
    rule: &GaussRule,
) -> [f64; 6] {
    // antiderivatives in x of [1, ξ, η, ξ², ξη, η²], with dx = d·dξ
    let prim = |p: Vec2| {
        let xi = (p.x - center.x) / d;
        let eta = (p.y - center.y) / d;
        [
            d * xi,
            d * xi * xi / 2.0,
            d * xi * eta,
            d * xi.powi(3) / 3.0,
            d * xi * xi * eta / 2.0,
            d * xi * eta * eta,
        ]
    };
    let mut out = [0.0; 6];
    for (a, b) in dom.curve.smooth_intervals(arc.s0, arc.s1) {
        for (s, w) in rule.on(a, b) {
            let (p, tau) = dom.curve.eval(s);
            let g = prim(p);
            for i in 0..6 {
                out[i] += w * g[i] * tau.y;
            }
        }
    }
    // chord back from the end point to the start point
    let p0 = dom.curve.point(arc.s0);
    let p1 = dom.curve.point(arc.s1);
    for (t, w) in rule.on(0.0, 1.0) {
        let p = p1 + (p0 - p1) * t;
        let g = prim(p);
        for i in 0..6 {
            out[i] += w * g[i] * (p0.y - p1.y);
        }
    }
    out
}

impl Mesh {
    /// Offset of edge DOFs in the global numbering.
    pub fn ne_offset(&self) -> usize {
        self.vertices.len()
    }
}

/// Element stiffness `Gᵀ Q̄ G` for the Voigt Hessians `G` and integrated
/// Voigt tensor `Q̄`.
pub fn element_stiffness(el: &ElementBasis, qbar: &Matrix3<f64>) -> [[f64; 6]; 6] {
    let mut k = [[0.0; 6]; 6];
    for i in 0..6 {
        let gi = nalgebra::Vector3::from(el.hess[i]);
        let qi = qbar * gi;
        for j in 0..6 {
            let gj = nalgebra::Vector3::from(el.hess[j]);
            k[i][j] = qi.dot(&gj);
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_domain, DomainSpec};
    use crate::mesh::{generate_mesh, MeshOptions};

    fn space(h: f64) -> MorleySpace {
        let dom = make_domain(&DomainSpec::unit_disc()).unwrap();
        let mesh = generate_mesh(&dom, &MeshOptions::uniform(h)).unwrap();
        MorleySpace::new(mesh, &dom)
    }

    #[test]
    fn dual_basis() {
        let sp = space(0.3);
        for (t, el) in sp.elements.iter().enumerate() {
            let tri = sp.mesh.tri_points(t);
            for j in 0..6 {
                let vals = el.basis_values(tri[0]);
                assert!((vals[j] - if j == 0 { 1.0 } else { 0.0 }).abs() < 1e-10);
                for k in 0..3 {
                    let e = sp.mesh.tri_edges[t][k];
                    let mid = (tri[(k + 1) % 3] + tri[(k + 2) % 3]) * 0.5;
                    let dn = el.basis_gradients(mid)[j].dot(&sp.edge_normals[e]);
                    assert!((dn - if j == 3 + k { 1.0 } else { 0.0 }).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn curved_area_is_exact() {
        let sp = space(0.1);
        assert!((sp.area - std::f64::consts::PI).abs() < 1e-12);
        let b = sp.constraint_rows();
        // moments of the affine kernel: ∫1 = π, ∫x = 0, ∫x² = π/4
        let z = sp.affine_kernel();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&b[0], &z[0]) - std::f64::consts::PI).abs() < 1e-12);
        assert!(dot(&b[0], &z[1]).abs() < 1e-12);
        assert!((dot(&b[1], &z[1]) - std::f64::consts::PI).abs() < 1e-12);
        assert!(dot(&b[1], &z[2]).abs() < 1e-12);
        // ∫ x1² over the disc through the interpolant of x1²
        let u = sp.interpolate(|p| p.x * p.x, |p| Vec2::new(2.0 * p.x, 0.0));
        assert!((dot(&b[0], &u) - std::f64::consts::PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn quadratics_are_reproduced() {
        let sp = space(0.2);
        let u = sp.interpolate(
            |p| 0.5 * p.x * p.x - p.x * p.y + 2.0 * p.y,
            |p| Vec2::new(p.x - p.y, -p.x + 2.0),
        );
        for t in 0..sp.elements.len() {
            let h = sp.elements[t].hessian(&sp.local_dofs(t, &u));
            assert!((h[0] - 1.0).abs() < 1e-10 && h[1].abs() < 1e-10 && (h[2] + 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn element_stiffness_audit() {
        let sp = space(0.3);
        let q = Matrix3::new(3.0, 1.0, 0.0, 1.0, 3.0, 0.0, 0.0, 0.0, 2.0);
        let el = &sp.elements[0];
        let k = element_stiffness(el, &(q * el.area));
        let m = nalgebra::Matrix6::from_fn(|i, j| k[i][j]);
        assert!((m - m.transpose()).abs().max() < 1e-12 * m.abs().max());
        let ev = m.symmetric_eigen().eigenvalues;
        let mut ev: Vec<f64> = ev.iter().cloned().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        let top = ev[5];
        // the element kernel is the affine functions: exactly three zero modes
        assert!(ev[2].abs() < 1e-10 * top);
        assert!(ev[3] > 1e-6 * top);
    }
}

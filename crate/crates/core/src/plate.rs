//! Neumann plate problems: assembly, normalised solves, works and Hessian
//! integrals.

use crate::couple::{energy_density, CoupleField};
use crate::error::{Error, Result};
use crate::geometry::{PlateDomain, Region, Shape};
use crate::linalg::sym3_eigenvalues;
use crate::morley::{element_stiffness, MorleySpace, DUNAVANT5};
use crate::quad::GaussRule;
use crate::sparse::{nested_dissection, Ldl, SymCsc};
use crate::tensor::PlateTensorField;
use crate::Vec2;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

/// Relative residual accepted from the linear solve.
pub const SOLVE_TOL: f64 = 1e-10;
/// Relative size of the compatibility multipliers' load above which the
/// data is rejected.
pub const COMPAT_TOL: f64 = 1e-8;

/// Piecewise plate tensor: a reference field, optionally replaced inside an
/// inclusion. Elements are assigned by centroid membership.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub reference: PlateTensorField,
    pub inclusion: Option<(Shape, PlateTensorField)>,
}

impl Material {
    pub fn homogeneous(p: PlateTensorField) -> Material {
        Material {
            reference: p,
            inclusion: None,
        }
    }

    pub fn with_inclusion(p: PlateTensorField, shape: Shape, ptilde: PlateTensorField) -> Material {
        Material {
            reference: p,
            inclusion: Some((shape, ptilde)),
        }
    }

    /// Elements whose centroid lies in the inclusion.
    pub fn inclusion_elements(&self, space: &MorleySpace) -> Vec<bool> {
        (0..space.elements.len())
            .map(|t| match &self.inclusion {
                Some((shape, _)) => shape.contains(space.mesh.centroid(t)),
                None => false,
            })
            .collect()
    }
}

/// Assembled operator with the per-element integrated Voigt tensors.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub matrix: SymCsc,
    pub qbar: Vec<Matrix3<f64>>,
    pub in_inclusion: Vec<bool>,
}

fn integrated_voigt(space: &MorleySpace, t: usize, p: &PlateTensorField) -> Result<Matrix3<f64>> {
    let el = &space.elements[t];
    let tri = space.mesh.tri_points(t);
    let check = |x: Vec2, q: &Matrix3<f64>| {
        let lo = sym3_eigenvalues(q)[0];
        if lo > 0.0 {
            Ok(())
        } else {
            Err(Error::NonElliptic {
                x: x.x,
                y: x.y,
                value: lo,
            })
        }
    };
    if p.is_constant() {
        let c = space.mesh.centroid(t);
        let q = p.voigt(c);
        check(c, &q)?;
        return Ok(q * el.area);
    }
    let mut acc = Matrix3::zeros();
    for (b, w) in DUNAVANT5 {
        let x = tri[0] * b[0] + tri[1] * b[1] + tri[2] * b[2];
        let q = p.voigt(x);
        check(x, &q)?;
        acc += q * (w * el.straight_area);
    }
    for a in &el.arcs {
        acc += p.voigt(a.centroid) * a.area;
    }
    Ok(acc)
}

/// `a(u, v) = ∫ P_eff ∇²u : ∇²v` on the Morley space.
pub fn assemble(space: &MorleySpace, material: &Material) -> Result<Assembled> {
    let in_inclusion = material.inclusion_elements(space);
    let locals: Vec<Result<(Matrix3<f64>, [[f64; 6]; 6])>> = (0..space.elements.len())
        .into_par_iter()
        .map(|t| {
            let p = match (&material.inclusion, in_inclusion[t]) {
                (Some((_, pt)), true) => pt,
                _ => &material.reference,
            };
            let q = integrated_voigt(space, t, p)?;
            Ok((q, element_stiffness(&space.elements[t], &q)))
        })
        .collect();
    let mut trips = Vec::with_capacity(21 * space.elements.len());
    let mut qbar = Vec::with_capacity(space.elements.len());
    for (t, r) in locals.into_iter().enumerate() {
        let (q, k) = r?;
        let dofs = space.elements[t].dofs;
        for i in 0..6 {
            for j in 0..6 {
                if dofs[i] >= dofs[j] {
                    trips.push((dofs[i], dofs[j], k[i][j]));
                }
            }
        }
        qbar.push(q);
    }
    Ok(Assembled {
        matrix: SymCsc::from_triplets(space.ndof(), &trips),
        qbar,
        in_inclusion,
    })
}

/// `ℓ(v) = ∫_∂Ω M̂_τ v,s − M̂_n v,n` with each element polynomial extended
/// to its boundary arc; six Gauss points per smooth piece.
pub fn load_functional(space: &MorleySpace, dom: &PlateDomain, field: &CoupleField) -> Vec<f64> {
    let mut ell = vec![0.0; space.ndof()];
    let len = dom.perimeter();
    let rule = GaussRule::new(6);
    let breaks = field.breaks();
    for be in &space.mesh.boundary_edges {
        let el = &space.elements[be.tri];
        let mut cuts: Vec<(f64, f64)> = Vec::new();
        for (a, b) in dom.curve.smooth_intervals(be.s0, be.s1) {
            let mut pts = vec![a];
            for k in [(a / len).floor() as i64, (a / len).floor() as i64 + 1] {
                for &x in &breaks {
                    let x = x + k as f64 * len;
                    if x > a + 1e-14 * len && x < b - 1e-14 * len {
                        pts.push(x);
                    }
                }
            }
            pts.sort_by(|p, q| p.total_cmp(q));
            pts.push(b);
            cuts.extend(pts.windows(2).map(|w| (w[0], w[1])));
        }
        let mut local = [0.0; 6];
        for (a, b) in cuts {
            for (s, w) in rule.on(a, b) {
                let (mn, mt) = field.eval(s);
                if mn == 0.0 && mt == 0.0 {
                    continue;
                }
                let (p, tau) = dom.curve.eval(s);
                let n = Vec2::new(tau.y, -tau.x);
                let g = el.basis_gradients(p);
                for j in 0..6 {
                    local[j] += w * (mt * g[j].dot(&tau) - mn * g[j].dot(&n));
                }
            }
        }
        for j in 0..6 {
            ell[el.dofs[j]] += local[j];
        }
    }
    ell
}

/// Computed displacement normalised by `∫w = 0`, `∫∇w = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub dofs: Vec<f64>,
    /// Per-element `(H11, H22, H12)`.
    pub hessians: Vec<[f64; 3]>,
    pub multipliers: [f64; 3],
    /// `‖A w + Bᵀλ − ℓ‖ / ‖ℓ‖`.
    pub residual: f64,
    /// `‖A w + Bᵀλ − ℓ‖ / (‖ℓ‖ + ‖|A||w|‖)`, the quantity held below
    /// `SOLVE_TOL`. The plain relative residual has a rounding floor that
    /// grows like `h⁻⁴` and passes `1e-10` on very fine meshes.
    pub backward_error: f64,
    /// `∫w, ∫w,1, ∫w,2` after normalisation.
    pub constraints: [f64; 3],
}

impl DiscreteSolution {
    /// Frobenius norm squared of the Hessian on element `t`.
    pub fn hess_sq(&self, t: usize) -> f64 {
        let h = self.hessians[t];
        h[0] * h[0] + h[1] * h[1] + 2.0 * h[2] * h[2]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A w + Bᵀλ = ℓ`, `B w = 0`. The multipliers follow from testing
/// with the affine kernel `Z`: `(BZ)ᵀλ = Zᵀℓ`. The reduced system is then
/// solved with three vertex values pinned and the affine part removed.
pub fn solve_normalized(space: &MorleySpace, a: &SymCsc, ell: &[f64]) -> Result<DiscreteSolution> {
    let n = space.ndof();
    let z = space.affine_kernel();
    let b = space.constraint_rows();
    let bz = Matrix3::from_fn(|i, j| dot(&b[i], &z[j]));
    let zl = Vector3::from_fn(|i, _| dot(&z[i], ell));
    let lambda = bz
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::SolveFailure("singular constraint block".into()))?
        * zl;
    let mut rhs = ell.to_vec();
    for i in 0..3 {
        for (r, bi) in rhs.iter_mut().zip(&b[i]) {
            *r -= lambda[i] * bi;
        }
    }
    let ell_norm = norm(ell);
    let lam = [lambda[0], lambda[1], lambda[2]];
    if norm(&rhs.iter().zip(ell).map(|(r, l)| l - r).collect::<Vec<_>>()) > COMPAT_TOL * ell_norm {
        return Err(Error::IncompatibleLoad(lam));
    }
    let hess_of = |u: &[f64]| -> Vec<[f64; 3]> {
        (0..space.elements.len())
            .map(|t| space.elements[t].hessian(&space.local_dofs(t, u)))
            .collect()
    };
    if ell_norm == 0.0 {
        let dofs = vec![0.0; n];
        return Ok(DiscreteSolution {
            hessians: hess_of(&dofs),
            dofs,
            multipliers: lam,
            residual: 0.0,
            backward_error: 0.0,
            constraints: [0.0; 3],
        });
    }
    let pins = pinned_vertices(space);
    let mut keep = vec![true; n];
    for &p in &pins {
        keep[p] = false;
    }
    let (sub, map) = a.submatrix(&keep);
    let coords: Vec<Vec2> = map
        .iter()
        .map(|&d| {
            if d < space.nv {
                space.mesh.vertices[d]
            } else {
                let [i, j] = space.mesh.edges[d - space.nv];
                (space.mesh.vertices[i] + space.mesh.vertices[j]) * 0.5
            }
        })
        .collect();
    let perm = nested_dissection(&sub, &coords);
    let ldl = Ldl::factor(&sub, perm)?;
    let sub_rhs: Vec<f64> = map.iter().map(|&d| rhs[d]).collect();
    let rhs_norm = norm(&sub_rhs);
    let mut x = ldl.solve(&sub_rhs);
    for _ in 0..6 {
        let ax = sub.mul(&x);
        let r: Vec<f64> = sub_rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        if norm(&r) <= 1e-3 * SOLVE_TOL * rhs_norm {
            break;
        }
        for (xi, di) in x.iter_mut().zip(ldl.solve(&r)) {
            *xi += di;
        }
    }
    let mut u = vec![0.0; n];
    for (k, &d) in map.iter().enumerate() {
        u[d] = x[k];
    }
    // remove the affine part: B(u − Zc) = 0
    let bu = Vector3::from_fn(|i, _| dot(&b[i], &u));
    let c = bz
        .try_inverse()
        .ok_or_else(|| Error::SolveFailure("singular constraint block".into()))?
        * bu;
    for j in 0..3 {
        for (ui, zi) in u.iter_mut().zip(&z[j]) {
            *ui -= c[j] * zi;
        }
    }
    let au = a.mul(&u);
    let res: Vec<f64> = (0..n)
        .map(|i| au[i] + (0..3).map(|k| lambda[k] * b[k][i]).sum::<f64>() - ell[i])
        .collect();
    let residual = norm(&res) / ell_norm;
    let backward_error = norm(&res) / (ell_norm + norm(&a.abs_mul(&u)));
    if !(backward_error <= SOLVE_TOL) {
        return Err(Error::SolveFailure(format!(
            "backward error {backward_error:.3e}"
        )));
    }
    let constraints = [dot(&b[0], &u), dot(&b[1], &u), dot(&b[2], &u)];
    Ok(DiscreteSolution {
        hessians: hess_of(&u),
        dofs: u,
        multipliers: lam,
        residual,
        backward_error,
        constraints,
    })
}

/// Three boundary vertices spread along the curve (never collinear on a
/// strictly convex arc triple of a closed curve).
fn pinned_vertices(space: &MorleySpace) -> [usize; 3] {
    let len = space.mesh.perimeter;
    let mut best = [(f64::INFINITY, 0usize); 3];
    for (v, s) in space.mesh.vertex_s.iter().enumerate() {
        if let Some(s) = s {
            for k in 0..3 {
                let target = k as f64 * len / 3.0;
                let d = (s - target).abs().min(len - (s - target).abs());
                if d < best[k].0 {
                    best[k] = (d, v);
                }
            }
        }
    }
    [best[0].1, best[1].1, best[2].1]
}

/// `W = ℓ(w)`.
pub fn work(ell: &[f64], sol: &DiscreteSolution) -> f64 {
    dot(ell, &sol.dofs)
}

/// `a(w, w)` summed element by element.
pub fn energy(asm: &Assembled, sol: &DiscreteSolution) -> f64 {
    sol.hessians
        .iter()
        .zip(&asm.qbar)
        .map(|(h, q)| energy_density(q, *h))
        .sum()
}

/// Elementwise area of `T ∩ R`, counting each curved sliver when the
/// region contains its representative point.
fn element_region_area(space: &MorleySpace, t: usize, region: &dyn Region) -> f64 {
    let tri = space.mesh.tri_points(t);
    let (lo, hi) = region.bbox();
    let out = tri.iter().all(|p| p.x < lo.x)
        || tri.iter().all(|p| p.x > hi.x)
        || tri.iter().all(|p| p.y < lo.y)
        || tri.iter().all(|p| p.y > hi.y);
    if out {
        return 0.0;
    }
    let mut a = region.triangle_area(&tri);
    if a < 1e-10 * space.elements[t].straight_area {
        a = 0.0;
    }
    for arc in &space.elements[t].arcs {
        if region.contains(arc.centroid) {
            a += arc.area;
        }
    }
    a
}

/// `∫_R |∇²w|²`; `None` integrates over the whole domain.
pub fn hessian_integral(
    space: &MorleySpace,
    sol: &DiscreteSolution,
    region: Option<&dyn Region>,
) -> f64 {
    (0..space.elements.len())
        .into_par_iter()
        .map(|t| {
            let area = match region {
                None => space.elements[t].area,
                Some(r) => element_region_area(space, t, r),
            };
            if area == 0.0 {
                0.0
            } else {
                sol.hess_sq(t) * area
            }
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// `sup_R |∇²w|²` over elements meeting the region.
pub fn hessian_sup(
    space: &MorleySpace,
    sol: &DiscreteSolution,
    region: Option<&dyn Region>,
) -> f64 {
    (0..space.elements.len())
        .filter(|&t| match region {
            None => true,
            Some(r) => element_region_area(space, t, r) > 0.0,
        })
        .map(|t| sol.hess_sq(t))
        .fold(0.0, f64::max)
}

/// Sum of `|∇²w|²` over a set of elements, weighted by element area.
pub fn hessian_integral_elements(
    space: &MorleySpace,
    sol: &DiscreteSolution,
    mask: &[bool],
) -> f64 {
    (0..space.elements.len())
        .filter(|&t| mask[t])
        .map(|t| sol.hess_sq(t) * space.elements[t].area)
        .sum()
}

/// `sup |∇²w|²` over a set of elements.
pub fn hessian_sup_elements(sol: &DiscreteSolution, mask: &[bool]) -> f64 {
    (0..sol.hessians.len())
        .filter(|&t| mask[t])
        .map(|t| sol.hess_sq(t))
        .fold(0.0, f64::max)
}

/// `∫_{B_r(c)} |∇²w|²` for a disc inside the domain.
pub fn hessian_integral_disc(
    space: &MorleySpace,
    dom: &PlateDomain,
    sol: &DiscreteSolution,
    center: Vec2,
    radius: f64,
) -> Result<f64> {
    if dom.signed_distance(center) < radius - 1e-12 * dom.rho0 {
        return Err(Error::RegionOutsideDomain);
    }
    let disc = Shape::Disc { center, radius };
    let mut total = 0.0;
    for (t, el) in space.elements.iter().enumerate() {
        if (el.center - center).norm() > radius + el.scale {
            continue;
        }
        let a = disc.triangle_area(&space.mesh.tri_points(t));
        if a > 1e-10 * el.straight_area {
            total += sol.hess_sq(t) * a;
        }
    }
    Ok(total)
}

/// Works and energies from one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub solution: DiscreteSolution,
    pub work: f64,
    pub energy: f64,
    /// `|W − a(w,w)| / a(w,w)` (0 when both vanish).
    pub identity_residual: f64,
}

/// Assembles, loads and solves one Neumann problem.
pub fn solve_problem(
    space: &MorleySpace,
    dom: &PlateDomain,
    material: &Material,
    field: &CoupleField,
) -> Result<(Assembled, SolveOutcome)> {
    let asm = assemble(space, material)?;
    let ell = load_functional(space, dom, field);
    let solution = solve_normalized(space, &asm.matrix, &ell)?;
    let w = work(&ell, &solution);
    let e = energy(&asm, &solution);
    let identity_residual = if e == 0.0 && w == 0.0 {
        0.0
    } else {
        (w - e).abs() / e.abs().max(w.abs())
    };
    Ok((
        asm,
        SolveOutcome {
            solution,
            work: w,
            energy: e,
            identity_residual,
        },
    ))
}

/// Disc integrals of `|∇²w|²` with elements bucketed on a uniform grid.
pub struct DiscIntegrator<'a> {
    space: &'a MorleySpace,
    dom: &'a PlateDomain,
    sol: &'a DiscreteSolution,
    lo: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
    total: f64,
}

impl<'a> DiscIntegrator<'a> {
    pub fn new(
        space: &'a MorleySpace,
        dom: &'a PlateDomain,
        sol: &'a DiscreteSolution,
    ) -> DiscIntegrator<'a> {
        let (lo, hi) = dom.bbox();
        let cell = space.mesh.h_mesh.max(1e-12);
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..space.elements.len() {
            let tri = space.mesh.tri_points(t);
            let (mut a, mut b) = (tri[0], tri[0]);
            for p in &tri[1..] {
                a = a.inf(p);
                b = b.sup(p);
            }
            let (i0, j0) = Self::index(lo, cell, nx, ny, a);
            let (i1, j1) = Self::index(lo, cell, nx, ny, b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        let total = hessian_integral(space, sol, None);
        DiscIntegrator {
            space,
            dom,
            sol,
            lo,
            cell,
            nx,
            ny,
            buckets,
            total,
        }
    }

    fn index(lo: Vec2, cell: f64, nx: usize, ny: usize, p: Vec2) -> (usize, usize) {
        let i = ((p.x - lo.x) / cell).floor().clamp(0.0, (nx - 1) as f64) as usize;
        let j = ((p.y - lo.y) / cell).floor().clamp(0.0, (ny - 1) as f64) as usize;
        (i, j)
    }

    /// `∫_Ω |∇²w|²`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn integral(&self, center: Vec2, radius: f64) -> Result<f64> {
        if self.dom.signed_distance(center) < radius - 1e-12 * self.dom.rho0 {
            return Err(Error::RegionOutsideDomain);
        }
        let r = Vec2::new(radius, radius);
        let (i0, j0) = Self::index(self.lo, self.cell, self.nx, self.ny, center - r);
        let (i1, j1) = Self::index(self.lo, self.cell, self.nx, self.ny, center + r);
        let mut seen: Vec<usize> = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                seen.extend_from_slice(&self.buckets[j * self.nx + i]);
            }
        }
        seen.sort_unstable();
        seen.dedup();
        let disc = Shape::Disc { center, radius };
        let mut total = 0.0;
        for t in seen {
            let el = &self.space.elements[t];
            if (el.center - center).norm() > radius + el.scale {
                continue;
            }
            let a = disc.triangle_area(&self.space.mesh.tri_points(t));
            if a > 1e-10 * el.straight_area {
                total += self.sol.hess_sq(t) * a;
            }
        }
        Ok(total)
    }
}

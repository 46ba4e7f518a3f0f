//! Sparse symmetric matrices and an up-looking `LDLᵀ` factorisation.

use crate::error::{Error, Result};
use crate::Vec2;

/// Symmetric matrix in compressed-column form with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymCsc {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SymCsc {
    /// Builds from `(row, col, value)` triplets of the lower *or* upper
    /// triangle (diagonal once); duplicates are summed.
    pub fn from_triplets(n: usize, trips: &[(usize, usize, f64)]) -> SymCsc {
        let mut all: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * trips.len());
        for &(i, j, v) in trips {
            all.push((j, i, v));
            if i != j {
                all.push((i, j, v));
            }
        }
        // sort by column then row; stable so summation order is fixed
        all.sort_by_key(|a| (a.0, a.1));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(all.len());
        let mut vals = Vec::with_capacity(all.len());
        let mut last: Option<(usize, usize)> = None;
        for (c, r, v) in all {
            if last == Some((c, r)) {
                *vals.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                vals.push(v);
                col_ptr[c + 1] += 1;
                last = Some((c, r));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        SymCsc {
            n,
            col_ptr,
            row_idx,
            vals,
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let xc = x[c];
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[p]] += self.vals[p] * xc;
            }
        }
        y
    }

    /// `|A|·|x|`, the scale of rounding errors in `A·x`.
    pub fn abs_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let xc = x[c].abs();
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[p]] += self.vals[p].abs() * xc;
            }
        }
        y
    }

    pub fn quad(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Principal submatrix on the kept indices, renumbered in order.
    pub fn submatrix(&self, keep: &[bool]) -> (SymCsc, Vec<usize>) {
        let mut map = vec![usize::MAX; self.n];
        let mut inv = Vec::new();
        for i in 0..self.n {
            if keep[i] {
                map[i] = inv.len();
                inv.push(i);
            }
        }
        let m = inv.len();
        let mut col_ptr = vec![0usize; m + 1];
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        for (cn, &c) in inv.iter().enumerate() {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                if keep[r] {
                    row_idx.push(map[r]);
                    vals.push(self.vals[p]);
                }
            }
            col_ptr[cn + 1] = row_idx.len();
        }
        (
            SymCsc {
                n: m,
                col_ptr,
                row_idx,
                vals,
            },
            inv,
        )
    }
}

/// Fill-reducing ordering by recursive coordinate bisection with vertex
/// separators ordered last.
pub fn nested_dissection(a: &SymCsc, coords: &[Vec2]) -> Vec<usize> {
    let n = a.n;
    let mut part = vec![0u32; n];
    let mut order = Vec::with_capacity(n);
    let nodes: Vec<usize> = (0..n).collect();
    let mut next_id = 1u32;
    dissect(a, coords, nodes, &mut part, &mut next_id, &mut order);
    order
}

fn dissect(
    a: &SymCsc,
    coords: &[Vec2],
    mut nodes: Vec<usize>,
    part: &mut [u32],
    next: &mut u32,
    order: &mut Vec<usize>,
) {
    if nodes.len() <= 48 {
        nodes.sort_by(|&i, &j| {
            coords[i]
                .x
                .total_cmp(&coords[j].x)
                .then(coords[i].y.total_cmp(&coords[j].y))
        });
        order.extend(nodes);
        return;
    }
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for &i in &nodes {
        lo = lo.inf(&coords[i]);
        hi = hi.sup(&coords[i]);
    }
    let axis = if hi.x - lo.x >= hi.y - lo.y { 0 } else { 1 };
    nodes.sort_by(|&i, &j| coords[i][axis].total_cmp(&coords[j][axis]).then(i.cmp(&j)));
    let mid = nodes.len() / 2;
    let right_id = *next;
    *next += 1;
    for &i in &nodes[mid..] {
        part[i] = right_id;
    }
    let mut left = Vec::with_capacity(mid);
    let mut sep = Vec::new();
    for &i in &nodes[..mid] {
        let touches = (a.col_ptr[i]..a.col_ptr[i + 1]).any(|p| part[a.row_idx[p]] == right_id);
        if touches {
            sep.push(i);
        } else {
            left.push(i);
        }
    }
    let right: Vec<usize> = nodes[mid..].to_vec();
    // retire the separator so deeper levels ignore it
    let sep_id = *next;
    *next += 1;
    for &i in &sep {
        part[i] = sep_id;
    }
    let left_id = *next;
    *next += 1;
    for &i in &left {
        part[i] = left_id;
    }
    dissect(a, coords, left, part, next, order);
    dissect(a, coords, right, part, next, order);
    order.extend(sep);
}

/// `P A Pᵀ = L D Lᵀ` with unit lower-triangular `L`.
#[derive(Debug, Clone)]
pub struct Ldl {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    /// Factorises a symmetric positive definite matrix.
    pub fn factor(a: &SymCsc, perm: Vec<usize>) -> Result<Ldl> {
        let n = a.n;
        if perm.len() != n {
            return Err(Error::SolveFailure("permutation length mismatch".into()));
        }
        let mut pinv = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            pinv[p] = k;
        }
        const NONE: usize = usize::MAX;
        // symbolic analysis
        let mut parent = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            let kk = perm[k];
            for p in a.col_ptr[kk]..a.col_ptr[kk + 1] {
                let mut i = pinv[a.row_idx[p]];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        let mut scale = 0.0f64;
        for k in 0..n {
            let kk = perm[k];
            for p in a.col_ptr[kk]..a.col_ptr[kk + 1] {
                if a.row_idx[p] == kk {
                    scale = scale.max(a.vals[p].abs());
                }
            }
        }
        // numeric factorisation
        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            lnz[k] = 0;
            let kk = perm[k];
            for p in a.col_ptr[kk]..a.col_ptr[kk + 1] {
                let mut i = pinv[a.row_idx[p]];
                if i <= k {
                    y[i] += a.vals[p];
                    let mut len = 0;
                    while flag[i] != k {
                        pattern[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        pattern[top] = pattern[len];
                    }
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            while top < n {
                let i = pattern[top];
                let yi = y[i];
                y[i] = 0.0;
                let p2 = lp[i] + lnz[i];
                for p in lp[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lnz[i] += 1;
                top += 1;
            }
            if !(d[k] > 1e-14 * scale) {
                return Err(Error::SolveFailure(format!(
                    "matrix not positive definite (pivot {k}: {:.3e})",
                    d[k]
                )));
            }
        }
        Ok(Ldl {
            n,
            perm,
            lp,
            li,
            lx,
            d,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|k| b[self.perm[k]]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.perm[k]] = x[k];
        }
        out
    }

    /// Solve followed by one step of iterative refinement.
    pub fn solve_refined(&self, a: &SymCsc, b: &[f64]) -> Vec<f64> {
        let mut x = self.solve(b);
        let ax = a.mul(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let dx = self.solve(&r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        x
    }

    pub fn nnz(&self) -> usize {
        self.li.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 2-D Laplacian plus identity on a k×k grid.
    fn grid_matrix(k: usize) -> (SymCsc, Vec<Vec2>) {
        let id = |i: usize, j: usize| i + k * j;
        let mut t = Vec::new();
        let mut coords = Vec::new();
        for j in 0..k {
            for i in 0..k {
                coords.push(Vec2::new(i as f64, j as f64));
                t.push((id(i, j), id(i, j), 5.0));
                if i + 1 < k {
                    t.push((id(i + 1, j), id(i, j), -1.0));
                }
                if j + 1 < k {
                    t.push((id(i, j + 1), id(i, j), -1.0));
                }
            }
        }
        (SymCsc::from_triplets(k * k, &t), coords)
    }

    #[test]
    fn solves_grid_system() {
        let (a, coords) = grid_matrix(30);
        let perm = nested_dissection(&a, &coords);
        let mut seen = perm.clone();
        seen.sort();
        assert_eq!(seen, (0..a.n).collect::<Vec<_>>());
        let ldl = Ldl::factor(&a, perm).unwrap();
        let x_true: Vec<f64> = (0..a.n).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let b = a.mul(&x_true);
        let x = ldl.solve_refined(&a, &b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
        // ordering reduces fill relative to the natural order
        let natural = Ldl::factor(&a, (0..a.n).collect()).unwrap();
        assert!(ldl.nnz() <= natural.nnz());
    }

    #[test]
    fn rejects_indefinite() {
        let a = SymCsc::from_triplets(2, &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(
            Ldl::factor(&a, vec![0, 1]),
            Err(Error::SolveFailure(_))
        ));
    }

    #[test]
    fn submatrix_extraction() {
        let (a, _) = grid_matrix(3);
        let keep: Vec<bool> = (0..9).map(|i| i != 4).collect();
        let (s, inv) = a.submatrix(&keep);
        assert_eq!(s.n, 8);
        assert_eq!(inv, vec![0, 1, 2, 3, 5, 6, 7, 8]);
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let mut full = vec![0.0; 9];
        for (k, &i) in inv.iter().enumerate() {
            full[i] = x[k];
        }
        let y_full = a.mul(&full);
        let y = s.mul(&x);
        for (k, &i) in inv.iter().enumerate() {
            assert!((y[k] - y_full[i]).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn random_spd_solve(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 40;
            let mut t = Vec::new();
            let mut diag = vec![1.0; n];
            for _ in 0..80 {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i != j {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    t.push((i.max(j), i.min(j), v));
                    diag[i] += v.abs();
                    diag[j] += v.abs();
                }
            }
            for (i, d) in diag.iter().enumerate() {
                t.push((i, i, *d));
            }
            let a = SymCsc::from_triplets(n, &t);
            let coords: Vec<Vec2> = (0..n).map(|i| Vec2::new(i as f64, (i * i % 7) as f64)).collect();
            let ldl = Ldl::factor(&a, nested_dissection(&a, &coords)).unwrap();
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let x = ldl.solve_refined(&a, &b);
            let r = a.mul(&x);
            for (ri, bi) in r.iter().zip(&b) {
                prop_assert!((ri - bi).abs() < 1e-11);
            }
        }
    }
}

//! Nonhomogeneous anisotropic elasticity tensors in the plane.
//!
//! A fully symmetric fourth-order tensor in two dimensions has six
//! independent Cartesian components; [`TensorField`] stores them as scalar
//! fields and reconstructs `C_ijkl` on demand. The hypotheses needed by the
//! size estimates (strong convexity, `C^{1,1}` bound, dichotomy of the symbol
//! discriminant, jump comparability) are audited on finite point samples.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{det_full_pivot, generalized_sym3_eigen, sym3_eigenvalues};
use crate::Vec2;
use nalgebra::{Matrix3, SMatrix};
use serde::{Deserialize, Serialize};

/// Default relative tolerance for declaring the dichotomy value zero.
pub const DICHOTOMY_ZERO_TOL: f64 = 1e-10;

const XY: &[&str] = &["x1", "x2"];

/// A scalar coefficient field with analytic first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    Expression {
        expr: Expr,
        grad: [Expr; 2],
        /// (∂11, ∂22, ∂12)
        hess: [Expr; 3],
    },
}

impl ScalarField {
    pub fn parse(src: &str) -> Result<ScalarField> {
        let expr = Expr::parse(src, XY)?;
        if let Some(c) = expr.as_constant() {
            return Ok(ScalarField::Constant(c));
        }
        Ok(ScalarField::from_expr(expr))
    }

    pub fn from_expr(expr: Expr) -> ScalarField {
        let gx = expr.diff(0);
        let gy = expr.diff(1);
        let hxx = gx.diff(0);
        let hyy = gy.diff(1);
        let hxy = gx.diff(1);
        ScalarField::Expression {
            expr,
            grad: [gx, gy],
            hess: [hxx, hyy, hxy],
        }
    }

    #[inline]
    pub fn value(&self, p: Vec2) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Expression { expr, .. } => expr.eval(&[p.x, p.y]),
        }
    }

    pub fn gradient(&self, p: Vec2) -> [f64; 2] {
        match self {
            ScalarField::Constant(_) => [0.0; 2],
            ScalarField::Expression { grad, .. } => {
                [grad[0].eval(&[p.x, p.y]), grad[1].eval(&[p.x, p.y])]
            }
        }
    }

    pub fn hessian(&self, p: Vec2) -> [f64; 3] {
        match self {
            ScalarField::Constant(_) => [0.0; 3],
            ScalarField::Expression { hess, .. } => {
                let v = [p.x, p.y];
                [hess[0].eval(&v), hess[1].eval(&v), hess[2].eval(&v)]
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarField::Constant(_))
    }
}

/// Six-coefficient representation of a symmetric plane elasticity tensor:
/// `C1111 = A0`, `C1122 = B0`, `C1112 = C0`, `C2212 = D0`, `C1212 = E0`,
/// `C2222 = F0` together with all index permutations allowed by the minor
/// and major symmetries.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub a0: ScalarField,
    pub b0: ScalarField,
    pub c0: ScalarField,
    pub d0: ScalarField,
    pub e0: ScalarField,
    pub f0: ScalarField,
}

/// Coefficient values of a tensor at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
    pub d0: f64,
    pub e0: f64,
    pub f0: f64,
}

impl Coefficients {
    /// Reconstructs `C_ijkl` for 0-based indices.
    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let twos = [i, j, k, l].iter().filter(|&&t| t == 1).count();
        match twos {
            0 => self.a0,
            1 => self.c0,
            3 => self.d0,
            4 => self.f0,
            _ if i == j => self.b0,
            _ => self.e0,
        }
    }

    /// Quadratic form of `A ↦ CA·A` in the orthonormal coordinates
    /// `(A11, A22, √2·A12)`.
    pub fn voigt(&self) -> Matrix3<f64> {
        let r2 = std::f64::consts::SQRT_2;
        Matrix3::new(
            self.a0,
            self.b0,
            r2 * self.c0,
            self.b0,
            self.f0,
            r2 * self.d0,
            r2 * self.c0,
            r2 * self.d0,
            2.0 * self.e0,
        )
    }

    pub fn scaled(&self, factor: f64) -> Coefficients {
        Coefficients {
            a0: factor * self.a0,
            b0: factor * self.b0,
            c0: factor * self.c0,
            d0: factor * self.d0,
            e0: factor * self.e0,
            f0: factor * self.f0,
        }
    }

    pub fn symbol_quartic(&self) -> SymbolQuartic {
        SymbolQuartic {
            a0: self.a0,
            a1: 4.0 * self.c0,
            a2: 2.0 * self.b0 + 4.0 * self.e0,
            a3: 4.0 * self.d0,
            a4: self.f0,
        }
    }
}

impl TensorField {
    pub fn constant(c: Coefficients) -> TensorField {
        TensorField {
            a0: ScalarField::Constant(c.a0),
            b0: ScalarField::Constant(c.b0),
            c0: ScalarField::Constant(c.c0),
            d0: ScalarField::Constant(c.d0),
            e0: ScalarField::Constant(c.e0),
            f0: ScalarField::Constant(c.f0),
        }
    }

    /// Isotropic material with Lamé moduli `lambda`, `mu`.
    pub fn isotropic(lambda: f64, mu: f64) -> TensorField {
        TensorField::constant(Coefficients {
            a0: lambda + 2.0 * mu,
            b0: lambda,
            c0: 0.0,
            d0: 0.0,
            e0: mu,
            f0: lambda + 2.0 * mu,
        })
    }

    pub fn orthotropic(a0: f64, b0: f64, c0: f64, d0: f64, e0: f64, f0: f64) -> TensorField {
        TensorField::constant(Coefficients {
            a0,
            b0,
            c0,
            d0,
            e0,
            f0,
        })
    }

    /// Builds a field from six expression strings in `x1`, `x2`.
    pub fn from_expressions(exprs: [&str; 6]) -> Result<TensorField> {
        Ok(TensorField {
            a0: ScalarField::parse(exprs[0])?,
            b0: ScalarField::parse(exprs[1])?,
            c0: ScalarField::parse(exprs[2])?,
            d0: ScalarField::parse(exprs[3])?,
            e0: ScalarField::parse(exprs[4])?,
            f0: ScalarField::parse(exprs[5])?,
        })
    }

    fn fields(&self) -> [&ScalarField; 6] {
        [&self.a0, &self.b0, &self.c0, &self.d0, &self.e0, &self.f0]
    }

    pub fn is_constant(&self) -> bool {
        self.fields().iter().all(|f| f.is_constant())
    }

    pub fn at(&self, p: Vec2) -> Coefficients {
        Coefficients {
            a0: self.a0.value(p),
            b0: self.b0.value(p),
            c0: self.c0.value(p),
            d0: self.d0.value(p),
            e0: self.e0.value(p),
            f0: self.f0.value(p),
        }
    }

    pub fn component(&self, p: Vec2, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.at(p).component(i, j, k, l)
    }
}

/// Voigt-type 3×3 form of `C` at `x`.
pub fn voigt_form(c: &TensorField, x: Vec2) -> Matrix3<f64> {
    c.at(x).voigt()
}

/// Smallest eigenvalue of the Voigt form over the samples.
pub fn ellipticity_gamma(c: &TensorField, samples: &[Vec2]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidSpec("empty sample set".into()));
    }
    let mut best = f64::INFINITY;
    let mut witness = samples[0];
    for &p in samples {
        let lam = sym3_eigenvalues(&voigt_form(c, p))[0];
        if lam < best {
            best = lam;
            witness = p;
        }
    }
    if best <= 0.0 {
        return Err(Error::NonElliptic {
            x: witness.x,
            y: witness.y,
            value: best,
        });
    }
    Ok(best)
}

/// Multiplicity of each of the six coefficients among the 16 components.
const MULTIPLICITY: [f64; 6] = [1.0, 2.0, 4.0, 4.0, 4.0, 1.0];

/// Sampled estimate of `Σ_ijkl Σ_m ρ0^m sup|∇^m C_ijkl|`.
pub fn regularity_m(c: &TensorField, samples: &[Vec2], rho0: f64) -> f64 {
    let mut total = 0.0;
    for (field, mult) in c.fields().iter().zip(MULTIPLICITY) {
        let mut sup = [0.0f64; 3];
        for &p in samples {
            let g = field.gradient(p);
            let h = field.hessian(p);
            sup[0] = sup[0].max(field.value(p).abs());
            sup[1] = sup[1].max((g[0] * g[0] + g[1] * g[1]).sqrt());
            sup[2] = sup[2].max((h[0] * h[0] + h[1] * h[1] + 2.0 * h[2] * h[2]).sqrt());
        }
        total += mult * (sup[0] + rho0 * sup[1] + rho0 * rho0 * sup[2]);
    }
    total
}

/// Coefficients of the characteristic quartic of the plate operator symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolQuartic {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl SymbolQuartic {
    pub fn as_array(&self) -> [f64; 5] {
        [self.a0, self.a1, self.a2, self.a3, self.a4]
    }
}

pub fn symbol_quartic(c: &TensorField, x: Vec2) -> SymbolQuartic {
    c.at(x).symbol_quartic()
}

/// The 7×7 Sylvester-type matrix built from the quartic and its derivative.
pub fn s_matrix(q: &SymbolQuartic) -> SMatrix<f64, 7, 7> {
    let a = q.as_array();
    let d = [4.0 * a[0], 3.0 * a[1], 2.0 * a[2], a[3]];
    let mut s = SMatrix::<f64, 7, 7>::zeros();
    for row in 0..3 {
        for (k, &v) in a.iter().enumerate() {
            s[(row, row + k)] = v;
        }
    }
    for row in 0..4 {
        for (k, &v) in d.iter().enumerate() {
            s[(3 + row, row + k)] = v;
        }
    }
    s
}

/// `|det S| / a0`.
pub fn dichotomy_value(q: &SymbolQuartic) -> Result<f64> {
    if q.a0 == 0.0 {
        return Err(Error::DegenerateLeadingCoefficient);
    }
    let s = s_matrix(q);
    let rows: Vec<Vec<f64>> = (0..7)
        .map(|i| (0..7).map(|j| s[(i, j)]).collect())
        .collect();
    Ok(det_full_pivot(rows).abs() / q.a0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DichotomyClass {
    PositiveEverywhere,
    IdenticallyZero,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: [f64; 2],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub classification: DichotomyClass,
    /// Minimum sampled dichotomy value.
    pub mu: f64,
    /// Normalisation `(max a0)^6` used for the zero tolerance.
    pub scale: f64,
    pub witnesses: Vec<Witness>,
}

/// Classifies the sampled dichotomy values.
pub fn classify_dichotomy(
    c: &TensorField,
    samples: &[Vec2],
    zero_tol: f64,
) -> Result<DichotomyReport> {
    if samples.is_empty() {
        return Err(Error::InvalidSpec("empty sample set".into()));
    }
    let mut values = Vec::with_capacity(samples.len());
    let mut max_a0 = 0.0f64;
    for &p in samples {
        let q = symbol_quartic(c, p);
        max_a0 = max_a0.max(q.a0.abs());
        values.push(dichotomy_value(&q)?);
    }
    let scale = max_a0.powi(6);
    let thresh = zero_tol * scale;
    let mut first_zero = None;
    let mut first_pos = None;
    let mut argmin = 0;
    for (i, &v) in values.iter().enumerate() {
        if v <= thresh {
            first_zero.get_or_insert(i);
        } else {
            first_pos.get_or_insert(i);
        }
        if v < values[argmin] {
            argmin = i;
        }
    }
    let witness = |i: usize| Witness {
        point: [samples[i].x, samples[i].y],
        value: values[i],
    };
    let (classification, witnesses) = match (first_zero, first_pos) {
        (None, Some(_)) => (DichotomyClass::PositiveEverywhere, vec![witness(argmin)]),
        (Some(_), None) => (DichotomyClass::IdenticallyZero, vec![witness(argmin)]),
        (Some(z), Some(p)) => (DichotomyClass::Violated, vec![witness(z), witness(p)]),
        (None, None) => unreachable!("non-empty sample set"),
    };
    Ok(DichotomyReport {
        classification,
        mu: values[argmin],
        scale,
        witnesses,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpSign {
    Plus,
    Minus,
    Neither,
}

impl JumpSign {
    pub fn label(self) -> &'static str {
        match self {
            JumpSign::Plus => "plus",
            JumpSign::Minus => "minus",
            JumpSign::Neither => "neither",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub sign: JumpSign,
    pub eta0: f64,
    pub eta1: f64,
}

/// Tightest jump constants from relative eigenvalues of `C̃ − C` w.r.t. `C`.
pub fn classify_jump(
    c: &TensorField,
    ctilde: &TensorField,
    samples: &[Vec2],
) -> Result<JumpReport> {
    if samples.is_empty() {
        return Err(Error::InvalidSpec("empty sample set".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &p in samples {
        let q = voigt_form(c, p);
        let diff = voigt_form(ctilde, p) - q;
        let ev = generalized_sym3_eigen(&diff, &q).ok_or_else(|| {
            let value = sym3_eigenvalues(&q)[0];
            Error::NonElliptic {
                x: p.x,
                y: p.y,
                value,
            }
        })?;
        lo = lo.min(ev[0]);
        hi = hi.max(ev[2]);
    }
    let report = if lo > 0.0 {
        JumpReport {
            sign: JumpSign::Plus,
            eta0: lo,
            eta1: 1.0 + hi,
        }
    } else if hi < 0.0 && lo > -1.0 {
        JumpReport {
            sign: JumpSign::Minus,
            eta0: -hi,
            eta1: 1.0 + lo,
        }
    } else {
        JumpReport {
            sign: JumpSign::Neither,
            eta0: lo,
            eta1: 1.0 + hi,
        }
    };
    Ok(report)
}

/// `L1 ≤ L2` in the sense of quadratic forms on symmetric matrices.
pub fn tensor_leq(l1: &TensorField, l2: &TensorField, samples: &[Vec2]) -> bool {
    samples.iter().all(|&p| {
        let q1 = voigt_form(l1, p);
        let q2 = voigt_form(l2, p);
        let scale = q1.abs().max().max(q2.abs().max()).max(f64::MIN_POSITIVE);
        sym3_eigenvalues(&(q2 - q1))[0] >= -1e-12 * scale
    })
}

/// Plate tensor `h³/12 · C`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateTensorField {
    pub base: TensorField,
    pub thickness: f64,
    factor: f64,
}

impl PlateTensorField {
    pub fn new(base: TensorField, thickness: f64) -> PlateTensorField {
        let factor = thickness.powi(3) / 12.0;
        PlateTensorField {
            base,
            thickness,
            factor,
        }
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn at(&self, p: Vec2) -> Coefficients {
        self.base.at(p).scaled(self.factor)
    }

    pub fn voigt(&self, p: Vec2) -> Matrix3<f64> {
        self.at(p).voigt()
    }

    pub fn is_constant(&self) -> bool {
        self.base.is_constant()
    }
}

/// Regular grid of `n × n` points covering a box.
pub fn sample_grid(min: Vec2, max: Vec2, n: usize) -> Vec<Vec2> {
    let n = n.max(2);
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let tx = i as f64 / (n - 1) as f64;
            let ty = j as f64 / (n - 1) as f64;
            out.push(Vec2::new(
                min.x + tx * (max.x - min.x),
                min.y + ty * (max.y - min.y),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ortho() -> TensorField {
        TensorField::orthotropic(1.0, 0.5, 0.0, 0.0, 1.0, 4.0)
    }

    fn origin() -> Vec2 {
        Vec2::zeros()
    }

    /// Direct quadruple sum C_ijkl A_kl A_ij.
    fn quad_sum(c: &Coefficients, a: [[f64; 2]; 2]) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        s += c.component(i, j, k, l) * a[k][l] * a[i][j];
                    }
                }
            }
        }
        s
    }

    #[test]
    fn voigt_examples() {
        let q = voigt_form(&TensorField::isotropic(1.0, 1.0), origin());
        assert_eq!(q, Matrix3::new(3.0, 1.0, 0.0, 1.0, 3.0, 0.0, 0.0, 0.0, 2.0));
        let q = voigt_form(
            &TensorField::orthotropic(0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            origin(),
        );
        assert_eq!(q, Matrix3::zeros());
        let q = voigt_form(&ortho(), origin());
        assert_eq!(q, Matrix3::new(1.0, 0.5, 0.0, 0.5, 4.0, 0.0, 0.0, 0.0, 2.0));
    }

    #[test]
    fn component_symmetries() {
        let c = Coefficients {
            a0: 1.0,
            b0: 2.0,
            c0: 3.0,
            d0: 4.0,
            e0: 5.0,
            f0: 6.0,
        };
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let v = c.component(i, j, k, l);
                        assert_eq!(v, c.component(k, l, i, j));
                        assert_eq!(v, c.component(l, k, i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_examples() {
        let pts = [origin()];
        let g = ellipticity_gamma(&TensorField::isotropic(1.0, 1.0), &pts).unwrap();
        assert!((g - 2.0).abs() < 1e-12);
        let g = ellipticity_gamma(&ortho(), &pts).unwrap();
        assert!((g - (5.0 - 10f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((g - 0.919).abs() < 1e-3);
        let bad = TensorField::orthotropic(1.0, 2.0, 0.0, 0.0, 0.0, 1.0);
        match ellipticity_gamma(&bad, &pts) {
            Err(Error::NonElliptic { value, .. }) => assert!((value + 1.0).abs() < 1e-12),
            other => panic!("expected NonElliptic, got {other:?}"),
        }
    }

    #[test]
    fn regularity_examples() {
        let pts = sample_grid(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), 11);
        assert!((regularity_m(&TensorField::isotropic(1.0, 1.0), &pts, 3.0) - 12.0).abs() < 1e-12);
        let zero = TensorField::orthotropic(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(regularity_m(&zero, &pts, 1.0), 0.0);
        let lin = TensorField::from_expressions(["x1", "0", "0", "0", "0", "0"]).unwrap();
        assert!((regularity_m(&lin, &pts, 2.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn symbol_and_s_matrix() {
        let q = symbol_quartic(&TensorField::isotropic(1.0, 1.0), origin());
        assert_eq!(q.as_array(), [3.0, 0.0, 6.0, 0.0, 3.0]);
        let q = symbol_quartic(&ortho(), origin());
        assert_eq!(q.as_array(), [1.0, 0.0, 5.0, 0.0, 4.0]);
        let s = s_matrix(&q);
        let row = |r: usize| (0..7).map(|j| s[(r, j)]).collect::<Vec<_>>();
        assert_eq!(row(0), vec![1.0, 0.0, 5.0, 0.0, 4.0, 0.0, 0.0]);
        assert_eq!(row(3), vec![4.0, 0.0, 10.0, 0.0, 0.0, 0.0, 0.0]);
        let ones = SymbolQuartic {
            a0: 1.0,
            a1: 1.0,
            a2: 1.0,
            a3: 1.0,
            a4: 1.0,
        };
        let s = s_matrix(&ones);
        assert_eq!(
            (0..7).map(|j| s[(6, j)]).collect::<Vec<_>>(),
            vec![0.0, 0.0, 0.0, 4.0, 3.0, 2.0, 1.0]
        );
        assert_eq!(
            s_matrix(&SymbolQuartic {
                a0: 0.0,
                a1: 0.0,
                a2: 0.0,
                a3: 0.0,
                a4: 0.0
            }),
            SMatrix::<f64, 7, 7>::zeros()
        );
    }

    /// Independent oracle: discriminant of a0 z^4 + a2 z^2 + a4 from the
    /// biquadratic closed form.
    fn biquadratic_disc(a0: f64, a2: f64, a4: f64) -> f64 {
        16.0 * a0 * a4 * (a2 * a2 - 4.0 * a0 * a4).powi(2)
    }

    #[test]
    fn dichotomy_examples() {
        let iso = SymbolQuartic {
            a0: 3.0,
            a1: 0.0,
            a2: 6.0,
            a3: 0.0,
            a4: 3.0,
        };
        assert!(dichotomy_value(&iso).unwrap() <= 1e-10 * 3f64.powi(6));
        let q = SymbolQuartic {
            a0: 1.0,
            a1: 0.0,
            a2: 5.0,
            a3: 0.0,
            a4: 4.0,
        };
        let d = dichotomy_value(&q).unwrap();
        assert!((d - 5184.0).abs() <= 1e-9 * 5184.0, "{d}");
        assert!((d - biquadratic_disc(1.0, 5.0, 4.0)).abs() <= 1e-9 * 5184.0);
        let zero = SymbolQuartic {
            a0: 0.0,
            a1: 1.0,
            a2: 1.0,
            a3: 1.0,
            a4: 1.0,
        };
        assert_eq!(
            dichotomy_value(&zero),
            Err(Error::DegenerateLeadingCoefficient)
        );
    }

    #[test]
    fn classify_dichotomy_examples() {
        let pts = sample_grid(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0), 5);
        let r = classify_dichotomy(&TensorField::isotropic(1.0, 1.0), &pts, DICHOTOMY_ZERO_TOL)
            .unwrap();
        assert_eq!(r.classification, DichotomyClass::IdenticallyZero);
        let r = classify_dichotomy(&ortho(), &pts, DICHOTOMY_ZERO_TOL).unwrap();
        assert_eq!(r.classification, DichotomyClass::PositiveEverywhere);
        assert!((r.mu - 5184.0).abs() < 1e-6);
        // blend from isotropic (x1 = -1) to the orthotropic example (x1 = 1)
        let t = "(x1 + 1)/2";
        let blend = TensorField::from_expressions([
            &format!("3 - 2*{t}"),
            &format!("1 - 0.5*{t}"),
            "0",
            "0",
            "1",
            &format!("3 + {t}"),
        ])
        .unwrap();
        let r = classify_dichotomy(&blend, &pts, DICHOTOMY_ZERO_TOL).unwrap();
        assert_eq!(r.classification, DichotomyClass::Violated);
        assert_eq!(r.witnesses.len(), 2);
        assert!(r.witnesses[0].value <= 1e-10 * r.scale);
        assert!(r.witnesses[1].value > 1e-10 * r.scale);
        assert_eq!(r.witnesses[0].point[0], -1.0);
    }

    #[test]
    fn jump_examples() {
        let pts = [origin(), Vec2::new(0.3, 0.2)];
        let c = ortho();
        let two_c = TensorField::orthotropic(2.0, 1.0, 0.0, 0.0, 2.0, 8.0);
        let r = classify_jump(&c, &two_c, &pts).unwrap();
        assert_eq!(r.sign, JumpSign::Plus);
        assert!((r.eta0 - 1.0).abs() < 1e-12 && (r.eta1 - 2.0).abs() < 1e-12);
        let half_c = TensorField::orthotropic(0.5, 0.25, 0.0, 0.0, 0.5, 2.0);
        let r = classify_jump(&c, &half_c, &pts).unwrap();
        assert_eq!(r.sign, JumpSign::Minus);
        assert!((r.eta0 - 0.5).abs() < 1e-12 && (r.eta1 - 0.5).abs() < 1e-12);
        let iso = TensorField::isotropic(1.0, 1.0);
        let bumped = TensorField::orthotropic(3.0, 2.0, 0.0, 0.0, 1.0, 3.0);
        assert_eq!(
            classify_jump(&iso, &bumped, &pts).unwrap().sign,
            JumpSign::Neither
        );
        let zero = TensorField::orthotropic(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            classify_jump(&zero, &iso, &pts),
            Err(Error::NonElliptic { .. })
        ));
    }

    #[test]
    fn tensor_ordering() {
        let pts = [origin()];
        let c = TensorField::isotropic(1.0, 1.0);
        let two_c = TensorField::isotropic(2.0, 2.0);
        assert!(tensor_leq(&c, &two_c, &pts));
        assert!(!tensor_leq(&two_c, &c, &pts));
        // ortho - iso = [[-2,-0.5,0],[-0.5,1,0],[0,0,0]]: indefinite both ways
        assert!(!tensor_leq(&c, &ortho(), &pts));
        assert!(!tensor_leq(&ortho(), &c, &pts));
        // eigenvalue oracle: iso ≤ iso + ortho trivially
        let sum = TensorField::orthotropic(4.0, 1.5, 0.0, 0.0, 2.0, 7.0);
        assert!(tensor_leq(&c, &sum, &pts));
    }

    #[test]
    fn plate_scaling_is_exact() {
        let p = PlateTensorField::new(ortho(), 0.1);
        let f = 0.1f64.powi(3) / 12.0;
        let base = ortho().at(origin());
        let got = p.at(origin());
        assert_eq!(got.a0, f * base.a0);
        assert_eq!(got.b0, f * base.b0);
        assert_eq!(got.e0, f * base.e0);
        assert_eq!(got.f0, f * base.f0);
    }

    fn coeffs() -> impl Strategy<Value = Coefficients> {
        (
            0.5..5.0f64,
            -1.0..1.0f64,
            -1.0..1.0f64,
            -1.0..1.0f64,
            0.2..3.0f64,
            0.5..5.0f64,
        )
            .prop_map(|(a0, b0, c0, d0, e0, f0)| Coefficients {
                a0,
                b0,
                c0,
                d0,
                e0,
                f0,
            })
    }

    proptest! {
        #[test]
        fn voigt_matches_quadruple_sum(c in coeffs(), a11 in -2.0..2.0f64, a22 in -2.0..2.0f64, a12 in -2.0..2.0f64) {
            let a = [[a11, a12], [a12, a22]];
            let v = nalgebra::Vector3::new(a11, a22, std::f64::consts::SQRT_2 * a12);
            let lhs = quad_sum(&c, a);
            let rhs = v.dot(&(c.voigt() * v));
            prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + lhs.abs()) * 10.0);
        }

        #[test]
        fn dichotomy_scales_as_sixth_power(c in coeffs(), k in 0.1..10.0f64) {
            let q = c.symbol_quartic();
            let qs = c.scaled(k).symbol_quartic();
            let d = dichotomy_value(&q).unwrap();
            let ds = dichotomy_value(&qs).unwrap();
            let scale = q.as_array().iter().fold(0.0f64, |m, v| m.max(v.abs())).powi(6) * k.powi(6);
            prop_assert!((ds - k.powi(6) * d).abs() <= 1e-10 * (ds.abs().max(scale * 1e-3)));
        }

        #[test]
        fn isotropic_like_symbols_have_zero_dichotomy(a0 in 0.1..10.0f64) {
            let q = SymbolQuartic { a0, a1: 0.0, a2: 2.0 * a0, a3: 0.0, a4: a0 };
            prop_assert!(dichotomy_value(&q).unwrap() <= DICHOTOMY_ZERO_TOL * a0.powi(6));
        }

        #[test]
        fn scaled_jump_is_plus(c in coeffs(), t in 0.001..10.0f64) {
            let base = TensorField::constant(c);
            // keep the base elliptic
            prop_assume!(sym3_eigenvalues(&c.voigt())[0] > 1e-3);
            let tilde = TensorField::constant(c.scaled(1.0 + t));
            let r = classify_jump(&base, &tilde, &[Vec2::zeros()]).unwrap();
            prop_assert_eq!(r.sign, JumpSign::Plus);
            prop_assert!((r.eta0 - t).abs() <= 1e-12 * (1.0 + t) * 10.0);
            prop_assert!((r.eta1 - 1.0 - t).abs() <= 1e-12 * (1.0 + t) * 10.0);
        }
    }
}

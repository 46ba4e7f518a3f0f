//! Boundary couple fields `(M̂_n, M̂_τ)` as functions of arclength.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::BoundaryCurve;
use crate::quad::GaussRule;
use crate::tensor::Coefficients;
use crate::Vec2;
use nalgebra::{Matrix2, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

/// Polynomial `Σ c·x^i·y^j` with exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub terms: Vec<(u32, u32, f64)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(u32, u32, f64)>) -> Polynomial {
        Polynomial { terms }
    }

    /// `∂^{dx+dy} / ∂x^dx ∂y^dy` at `p`.
    pub fn deriv(&self, p: Vec2, dx: u32, dy: u32) -> f64 {
        let falling = |n: u32, k: u32| (0..k).map(|i| (n - i) as f64).product::<f64>();
        self.terms
            .iter()
            .filter(|&&(i, j, _)| i >= dx && j >= dy)
            .map(|&(i, j, c)| {
                c * falling(i, dx)
                    * falling(j, dy)
                    * p.x.powi((i - dx) as i32)
                    * p.y.powi((j - dy) as i32)
            })
            .sum()
    }

    pub fn value(&self, p: Vec2) -> f64 {
        self.deriv(p, 0, 0)
    }

    pub fn gradient(&self, p: Vec2) -> Vec2 {
        Vec2::new(self.deriv(p, 1, 0), self.deriv(p, 0, 1))
    }

    /// `(w11, w22, w12)`.
    pub fn hessian(&self, p: Vec2) -> [f64; 3] {
        [
            self.deriv(p, 2, 0),
            self.deriv(p, 0, 2),
            self.deriv(p, 1, 1),
        ]
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|&(i, j, _)| i + j).max().unwrap_or(0)
    }
}

/// Bending moment `M = P∇²w` for a constant tensor.
fn moment(p: &Coefficients, h: [f64; 3]) -> Matrix2<f64> {
    let hm = [[h[0], h[2]], [h[2], h[1]]];
    Matrix2::from_fn(|i, j| {
        let mut s = 0.0;
        for k in 0..2 {
            for l in 0..2 {
                s += p.component(i, j, k, l) * hm[k][l];
            }
        }
        s
    })
}

/// Sum of the fourth-order operator applied to a polynomial at `x`.
pub fn plate_operator(p: &Coefficients, w: &Polynomial, x: Vec2) -> f64 {
    let q = p.symbol_quartic().as_array();
    (0..5)
        .map(|k| q[k] * w.deriv(x, 4 - k as u32, k as u32))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoupleKind {
    Zero,
    /// Traction of a constant curvature field `H` under constant `P`.
    PureBending {
        moment: Matrix2<f64>,
    },
    /// Traction of an exact polynomial solution; `twist` tabulates the
    /// cumulative integral of `div M·n` along the curve.
    Manufactured {
        solution: Polynomial,
        tensor: Coefficients,
        nodes: Vec<f64>,
        twist: Vec<f64>,
    },
    /// Expressions in the arclength fraction `t ∈ [0, 1)`, zero outside the support.
    Profile {
        mn: Expr,
        mtau: Expr,
    },
    /// Windowed trigonometric series on the support.
    Fourier {
        mn: Vec<(f64, f64, f64)>,
        mtau: Vec<(f64, f64, f64)>,
    },
}

/// Boundary data on a closed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupleField {
    pub kind: CoupleKind,
    pub curve: BoundaryCurve,
    /// Support as an arclength-fraction interval `[t0, t1]` (`t1` may exceed 1).
    pub support: Option<(f64, f64)>,
    /// Windowed normal correction `c·n` added to `M̂_n` to enforce compatibility.
    pub correction: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CoupleNorms {
    pub l2: f64,
    pub hm12: f64,
    /// `l2 / hm12`, NaN for vanishing data.
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Compatibility {
    pub compatible: bool,
    /// `ℓ(1), ℓ(x1), ℓ(x2)`.
    pub residuals: [f64; 3],
    pub scale: f64,
}

const PANELS: usize = 256;

impl CoupleField {
    fn new(kind: CoupleKind, curve: &BoundaryCurve, support: Option<(f64, f64)>) -> CoupleField {
        CoupleField {
            kind,
            curve: curve.clone(),
            support,
            correction: [0.0; 2],
        }
    }

    pub fn zero(curve: &BoundaryCurve) -> CoupleField {
        CoupleField::new(CoupleKind::Zero, curve, None)
    }

    /// Data whose exact solution has constant Hessian `(H11, H22, H12)`.
    pub fn pure_bending(
        curve: &BoundaryCurve,
        tensor: &Coefficients,
        hessian: [f64; 3],
    ) -> CoupleField {
        CoupleField::new(
            CoupleKind::PureBending {
                moment: moment(tensor, hessian),
            },
            curve,
            None,
        )
    }

    /// Data whose exact solution is the polynomial `w`, which must satisfy the
    /// homogeneous plate equation for the constant tensor.
    pub fn manufactured(
        curve: &BoundaryCurve,
        tensor: &Coefficients,
        w: Polynomial,
    ) -> Result<CoupleField> {
        let (lo, hi) = curve.bbox();
        let scale =
            tensor.voigt().abs().max() * w.terms.iter().map(|t| t.2.abs()).sum::<f64>().max(1e-300);
        for i in 0..5 {
            for j in 0..5 {
                let x = lo + (hi - lo).component_mul(&Vec2::new(i as f64 / 4.0, j as f64 / 4.0));
                if plate_operator(tensor, &w, x).abs()
                    > 1e-9 * scale * (1.0 + x.norm()).powi(w.degree() as i32)
                {
                    return Err(Error::Config(
                        "manufactured solution does not satisfy the plate equation".into(),
                    ));
                }
            }
        }
        let div_n = |p: Vec2, t: Vec2| manufactured_div(tensor, &w, p).dot(&Vec2::new(t.y, -t.x));
        let len = curve.length();
        let rule = GaussRule::new(10);
        let mut nodes = vec![0.0];
        for (a, b) in curve.smooth_intervals(0.0, len) {
            let m = (((b - a) / len * PANELS as f64).ceil() as usize).max(1);
            for k in 1..=m {
                nodes.push(a + (b - a) * k as f64 / m as f64);
            }
        }
        let mut twist = vec![0.0];
        for win in nodes.windows(2) {
            let inc = curve.integrate(win[0], win[1], &rule, div_n);
            twist.push(twist.last().unwrap() + inc);
        }
        Ok(CoupleField::new(
            CoupleKind::Manufactured {
                solution: w,
                tensor: *tensor,
                nodes,
                twist,
            },
            curve,
            None,
        ))
    }

    /// Expressions in `t` (arclength fraction), restricted to `[t0, t1]`.
    pub fn profile(
        curve: &BoundaryCurve,
        mn: &str,
        mtau: &str,
        support: Option<(f64, f64)>,
    ) -> Result<CoupleField> {
        let mn = Expr::parse(mn, &["t"])?;
        let mtau = Expr::parse(mtau, &["t"])?;
        if let Some((t0, t1)) = support {
            if !(t1 > t0 && t1 - t0 <= 1.0) {
                return Err(Error::Config(format!(
                    "invalid support interval [{t0}, {t1}]"
                )));
            }
        }
        Ok(CoupleField::new(
            CoupleKind::Profile { mn, mtau },
            curve,
            support,
        ))
    }

    /// Random smooth data on the support: a `sin²` window times a trigonometric
    /// series with `modes` frequencies and coefficients decaying like `1/k`,
    /// followed by the compatibility correction.
    pub fn random_fourier(
        curve: &BoundaryCurve,
        support: (f64, f64),
        modes: usize,
        seed: u64,
    ) -> Result<CoupleField> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut series = || {
            (1..=modes.max(1))
                .map(|k| {
                    let a: f64 = rng.random_range(-1.0..1.0);
                    let b: f64 = rng.random_range(-1.0..1.0);
                    (k as f64, a / k as f64, b / k as f64)
                })
                .collect::<Vec<_>>()
        };
        let mn = series();
        let mtau = series();
        let mut f = CoupleField::new(CoupleKind::Fourier { mn, mtau }, curve, Some(support));
        f.make_compatible()?;
        Ok(f)
    }

    pub fn perimeter(&self) -> f64 {
        self.curve.length()
    }

    /// Weight of the support window at arclength fraction `t`; 0 outside.
    fn support_window(&self, t: f64, smooth: bool) -> f64 {
        match self.support {
            None => 1.0,
            Some((t0, t1)) => {
                let u = (t - t0).rem_euclid(1.0);
                let w = t1 - t0;
                if u > w {
                    0.0
                } else if smooth {
                    (std::f64::consts::PI * u / w).sin().powi(2)
                } else {
                    1.0
                }
            }
        }
    }

    /// `(M̂_n, M̂_τ)` at arclength `s`.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        let len = self.perimeter();
        let t = (s / len).rem_euclid(1.0);
        let (mut mn, mt) = match &self.kind {
            CoupleKind::Zero => (0.0, 0.0),
            CoupleKind::PureBending { moment } => {
                let tau = self.curve.tangent(s);
                let n = Vec2::new(tau.y, -tau.x);
                let mnv = moment * n;
                (-mnv.dot(&n), mnv.dot(&tau))
            }
            CoupleKind::Manufactured {
                solution,
                tensor,
                nodes,
                twist,
            } => {
                let (p, tau) = self.curve.eval(s);
                let n = Vec2::new(tau.y, -tau.x);
                let mnv = moment(tensor, solution.hessian(p)) * n;
                let sw = t * len;
                let k = match nodes.binary_search_by(|x| x.total_cmp(&sw)) {
                    Ok(k) => k.min(nodes.len() - 2),
                    Err(k) => (k.max(1) - 1).min(nodes.len() - 2),
                };
                let rule = GaussRule::new(10);
                let extra = self.curve.integrate(nodes[k], sw, &rule, |p, t| {
                    let n = Vec2::new(t.y, -t.x);
                    manufactured_div(tensor, solution, p).dot(&n)
                });
                (-mnv.dot(&n), mnv.dot(&tau) + twist[k] + extra)
            }
            CoupleKind::Profile { mn, mtau } => {
                let w = self.support_window(t, false);
                if w == 0.0 {
                    (0.0, 0.0)
                } else {
                    (mn.eval(&[t]), mtau.eval(&[t]))
                }
            }
            CoupleKind::Fourier { mn, mtau } => {
                let w = self.support_window(t, true);
                if w == 0.0 {
                    (0.0, 0.0)
                } else {
                    let u = match self.support {
                        Some((t0, t1)) => (t - t0).rem_euclid(1.0) / (t1 - t0),
                        None => t,
                    };
                    let series = |c: &[(f64, f64, f64)]| {
                        c.iter()
                            .map(|&(k, a, b)| {
                                let (sn, cs) = (std::f64::consts::TAU * k * u).sin_cos();
                                a * cs + b * sn
                            })
                            .sum::<f64>()
                    };
                    (w * series(mn), w * series(mtau))
                }
            }
        };
        if self.correction != [0.0; 2] {
            let n = self.curve.normal(s);
            mn += self.support_window(t, true)
                * (self.correction[0] * n.x + self.correction[1] * n.y);
        }
        (mn, mt)
    }

    /// Arclength positions in `[0, L)` where the data may jump.
    pub fn breaks(&self) -> Vec<f64> {
        let len = self.perimeter();
        let mut b = Vec::new();
        if let Some((t0, t1)) = self.support {
            b.push(t0.rem_euclid(1.0) * len);
            b.push(t1.rem_euclid(1.0) * len);
        }
        b
    }

    /// Arclength panels covering `[0, L]`, split at curve breakpoints and
    /// data breaks, each at most `L/PANELS` long.
    pub fn panels(&self) -> Vec<(f64, f64)> {
        let len = self.perimeter();
        let mut cuts = self.breaks();
        cuts.extend(self.curve.breakpoints());
        cuts.push(0.0);
        cuts.push(len);
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * len);
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let m = (((w[1] - w[0]) / len * PANELS as f64).ceil() as usize).max(1);
            for k in 0..m {
                out.push((
                    w[0] + (w[1] - w[0]) * k as f64 / m as f64,
                    w[0] + (w[1] - w[0]) * (k + 1) as f64 / m as f64,
                ));
            }
        }
        out
    }

    /// `∮ f(s, point, tangent, M̂_n, M̂_τ) ds`.
    pub fn boundary_integral(&self, mut f: impl FnMut(f64, Vec2, Vec2, f64, f64) -> f64) -> f64 {
        let rule = GaussRule::new(8);
        let mut total = 0.0;
        for (a, b) in self.panels() {
            for (s, w) in rule.on(a, b) {
                let (p, t) = self.curve.eval(s);
                let (mn, mt) = self.eval(s);
                total += w * f(s, p, t, mn, mt);
            }
        }
        total
    }

    /// Residuals of the load on the affine functions. The load has no
    /// undifferentiated term, so `ℓ(1)` vanishes identically.
    pub fn check_compatibility(&self, tol: f64) -> Compatibility {
        let mut r = [0.0; 3];
        for a in 0..2 {
            r[a + 1] = self.boundary_integral(|_, _, t, mn, mt| {
                let n = Vec2::new(t.y, -t.x);
                mt * t[a] - mn * n[a]
            });
        }
        let scale = self.boundary_integral(|_, _, _, mn, mt| mn.abs() + mt.abs());
        let compatible = r
            .iter()
            .all(|x| x.abs() <= tol * scale.max(f64::MIN_POSITIVE));
        Compatibility {
            compatible,
            residuals: r,
            scale,
        }
    }

    /// Adds a windowed normal component `φ(s)·(c·n)` to `M̂_n` that cancels the
    /// affine residuals.
    pub fn make_compatible(&mut self) -> Result<()> {
        self.correction = [0.0; 2];
        let res = self.check_compatibility(0.0).residuals;
        let len = self.perimeter();
        let mut g = Matrix2::zeros();
        let rule = GaussRule::new(8);
        for (a, b) in self.panels() {
            for (s, w) in rule.on(a, b) {
                let n = self.curve.normal(s);
                let phi = self.support_window(s / len, true);
                g += n * n.transpose() * (w * phi);
            }
        }
        let c = g
            .try_inverse()
            .ok_or_else(|| Error::Config("support too short to enforce compatibility".into()))?
            * Vec2::new(res[1], res[2]);
        self.correction = [c.x, c.y];
        Ok(())
    }

    /// `L²` and `H^{-1/2}` norms, each carrying the factor `ρ0^{-1/2}`.
    pub fn norms(&self, rho0: f64) -> CoupleNorms {
        let l2 = (self.boundary_integral(|_, _, _, mn, mt| mn * mn + mt * mt) / rho0).sqrt();
        let len = self.perimeter();
        let n = 4096;
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(n);
        let mut buf_n: Vec<Complex<f64>> = Vec::with_capacity(n);
        let mut buf_t: Vec<Complex<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let (a, b) = self.eval(j as f64 * len / n as f64);
            buf_n.push(Complex::new(a, 0.0));
            buf_t.push(Complex::new(b, 0.0));
        }
        fft.process(&mut buf_n);
        fft.process(&mut buf_t);
        let mut sum = 0.0;
        for k in 0..n {
            let freq = if k <= n / 2 {
                k as f64
            } else {
                k as f64 - n as f64
            };
            let weight = (1.0 + (std::f64::consts::TAU * rho0 * freq / len).powi(2)).powf(-0.5);
            let c2 = (buf_n[k].norm_sqr() + buf_t[k].norm_sqr()) / (n * n) as f64;
            sum += weight * c2;
        }
        let hm12 = (len * sum / rho0).sqrt();
        let f = if hm12 > 0.0 { l2 / hm12 } else { f64::NAN };
        CoupleNorms { l2, hm12, f }
    }

    /// `1 − |Γ|/|∂Ω|` for the support arc `Γ`.
    pub fn delta0(&self) -> f64 {
        match self.support {
            Some((t0, t1)) => 1.0 - (t1 - t0),
            None => 0.0,
        }
    }

    /// Scales the data by `c`.
    pub fn scaled(&self, c: f64) -> CoupleField {
        let mut out = self.clone();
        out.correction = [c * self.correction[0], c * self.correction[1]];
        out.kind = match &self.kind {
            CoupleKind::Zero => CoupleKind::Zero,
            CoupleKind::PureBending { moment } => CoupleKind::PureBending { moment: moment * c },
            CoupleKind::Manufactured {
                solution,
                tensor,
                nodes,
                twist,
            } => CoupleKind::Manufactured {
                solution: Polynomial::new(
                    solution
                        .terms
                        .iter()
                        .map(|&(i, j, a)| (i, j, a * c))
                        .collect(),
                ),
                tensor: *tensor,
                nodes: nodes.clone(),
                twist: twist.iter().map(|x| x * c).collect(),
            },
            CoupleKind::Profile { mn, mtau } => CoupleKind::Profile {
                mn: Expr::parse(&format!("({c:e})*({mn})"), &["t"]).expect("scaled expression"),
                mtau: Expr::parse(&format!("({c:e})*({mtau})"), &["t"]).expect("scaled expression"),
            },
            CoupleKind::Fourier { mn, mtau } => CoupleKind::Fourier {
                mn: mn.iter().map(|&(k, a, b)| (k, a * c, b * c)).collect(),
                mtau: mtau.iter().map(|&(k, a, b)| (k, a * c, b * c)).collect(),
            },
        };
        out
    }
}

fn manufactured_div(tensor: &Coefficients, w: &Polynomial, p: Vec2) -> Vec2 {
    let mut d = Vec2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let c = tensor.component(i, j, k, l);
                    if c != 0.0 {
                        let mut o = [0u32; 2];
                        o[j] += 1;
                        o[k] += 1;
                        o[l] += 1;
                        d[i] += c * w.deriv(p, o[0], o[1]);
                    }
                }
            }
        }
    }
    d
}

/// Energy density `P H : H` for a Voigt tensor and `(H11, H22, H12)`.
pub fn energy_density(q: &Matrix3<f64>, h: [f64; 3]) -> f64 {
    let v = nalgebra::Vector3::new(h[0], h[1], std::f64::consts::SQRT_2 * h[2]);
    v.dot(&(q * v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle() -> BoundaryCurve {
        BoundaryCurve::circle(Vec2::zeros(), 1.0).unwrap()
    }

    #[test]
    fn compatibility_examples() {
        let c = circle();
        let f = CoupleField::profile(&c, "cos(4*pi*t)", "0", None).unwrap();
        assert!(f.check_compatibility(1e-10).compatible);
        let f = CoupleField::profile(&c, "1", "0", None).unwrap();
        assert!(f.check_compatibility(1e-10).compatible);
        // M̂_n = n1 = cos(2πt): ℓ(x1) = −∮ n1² = −π
        let f = CoupleField::profile(&c, "cos(2*pi*t)", "0", None).unwrap();
        let r = f.check_compatibility(1e-10);
        assert!(!r.compatible);
        assert!((r.residuals[1] + PI).abs() < 1e-12);
        assert!(r.residuals[2].abs() < 1e-12);
    }

    #[test]
    fn single_mode_frequency_ratio() {
        let c = circle();
        for k in [1.0f64, 3.0, 7.0] {
            let f = CoupleField::profile(&c, &format!("cos(2*pi*{k}*t)"), "0", None).unwrap();
            let n = f.norms(1.0);
            assert!((n.l2 - PI.sqrt()).abs() < 1e-12);
            assert!((n.f - (1.0 + k * k).powf(0.25)).abs() < 1e-10);
        }
        let z = CoupleField::zero(&c).norms(1.0);
        assert!(z.l2 == 0.0 && z.hm12 == 0.0 && z.f.is_nan());
    }

    #[test]
    fn two_mode_series_oracle() {
        let c = circle();
        let f = CoupleField::profile(&c, "2*cos(2*pi*3*t)", "0.5*sin(2*pi*5*t)", None).unwrap();
        let n = f.norms(1.0);
        // direct sum: 2π Σ |c_k|² (1+k²)^{-1/2} over ±k
        let hm =
            (2.0 * PI * (2.0 * 1.0 / (10.0f64).sqrt() + 2.0 * 0.0625 / (26.0f64).sqrt())).sqrt();
        let l2 = (2.0 * PI * (2.0 + 0.125)).sqrt();
        assert!((n.hm12 - hm).abs() < 1e-10 * hm);
        assert!((n.l2 - l2).abs() < 1e-10 * l2);
    }

    #[test]
    fn random_data_is_compatible_and_supported() {
        let c = circle();
        let f = CoupleField::random_fourier(&c, (0.1, 0.8), 6, 11).unwrap();
        assert!(f.check_compatibility(1e-12).compatible);
        assert!((f.delta0() - 0.3).abs() < 1e-12);
        assert_eq!(f.eval(0.9 * 2.0 * PI), (0.0, 0.0));
        let g = CoupleField::random_fourier(&c, (0.1, 0.8), 6, 11).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn manufactured_rejects_non_solutions() {
        let c = circle();
        let p = crate::tensor::TensorField::isotropic(1.0, 1.0).at(Vec2::zeros());
        assert!(CoupleField::manufactured(&c, &p, Polynomial::new(vec![(4, 0, 1.0)])).is_err());
        let w = Polynomial::new(vec![
            (4, 0, 1.0),
            (2, 2, -6.0),
            (0, 4, 1.0),
            (3, 0, 1.0),
            (1, 2, 1.0),
        ]);
        let f = CoupleField::manufactured(&c, &p, w).unwrap();
        assert!(f.check_compatibility(1e-10).compatible);
        let CoupleKind::Manufactured { twist, .. } = &f.kind else {
            unreachable!()
        };
        assert!(twist.last().unwrap().abs() < 1e-10);
    }
}

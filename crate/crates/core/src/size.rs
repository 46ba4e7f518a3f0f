//! Energy-gap inequalities and two-sided area bounds for the inclusion.

use crate::error::{Error, Result};
use crate::tensor::JumpSign;
use serde::{Deserialize, Serialize};

/// `(ξ0, ξ1) = (γh³/12, Mh³/6)`: bounds of the plate tensor as a quadratic
/// form on symmetric matrices.
pub fn xi_bounds(gamma: f64, m: f64, h: f64) -> (f64, f64) {
    let h3 = h * h * h;
    (gamma * h3 / 12.0, m * h3 / 6.0)
}

/// Quantities entering the energy comparison for one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub w: f64,
    pub w0: f64,
    /// `∫_D |∇²w0|²`.
    pub hess_d: f64,
    /// `sup_D |∇²w0|²`.
    pub hess_sup_d: f64,
    pub xi0: f64,
    pub xi1: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub sign: JumpSign,
}

impl EnergyBudget {
    /// Signed gap `W0 − W` (Plus) or `W − W0` (Minus); errors when the
    /// measured works contradict the classification.
    pub fn gap(&self) -> Result<f64> {
        let raw = self.w0 - self.w;
        let g = match self.sign {
            JumpSign::Plus => raw,
            JumpSign::Minus => -raw,
            JumpSign::Neither => {
                return Err(Error::WrongSign {
                    gap: raw,
                    expected: "neither",
                })
            }
        };
        // rounding-level negatives are treated as zero
        if g < -1e-12 * self.w0.abs().max(self.w.abs()) {
            return Err(Error::WrongSign {
                gap: raw,
                expected: self.sign.label(),
            });
        }
        Ok(g.max(0.0))
    }

    /// Relative work gap.
    pub fn rel_gap(&self) -> Result<f64> {
        let g = self.gap()?;
        Ok(if self.w0 == 0.0 { 0.0 } else { g / self.w0 })
    }

    /// `(lower, upper)` coefficients of `hessD` in the energy lemma.
    pub fn lemma_factors(&self) -> (f64, f64) {
        match self.sign {
            JumpSign::Plus => (
                self.eta0 * self.xi0 / self.eta1,
                (self.eta1 - 1.0) * self.xi1,
            ),
            _ => (
                self.eta0 * self.xi0,
                (1.0 - self.eta1) / self.eta1 * self.xi1,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub gap: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    /// `gap / lower`; at least 1 when the left inequality holds exactly.
    pub lower_slack: f64,
    /// `upper / gap`; at least 1 when the right inequality holds exactly.
    pub upper_slack: f64,
}

impl LemmaCheck {
    pub fn holds(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// Checks `lower·hessD ≤ gap ≤ upper·hessD` with relative tolerance `slack`.
pub fn verify_energy_lemma(b: &EnergyBudget, slack: f64) -> Result<LemmaCheck> {
    let gap = b.gap()?;
    let (fl, fu) = b.lemma_factors();
    let lower = fl * b.hess_d;
    let upper = fu * b.hess_d;
    let ratio = |a: f64, c: f64| {
        if c == 0.0 {
            if a == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            a / c
        }
    };
    Ok(LemmaCheck {
        gap,
        lower,
        upper,
        lower_holds: gap >= lower * (1.0 - slack),
        upper_holds: gap <= upper * (1.0 + slack),
        lower_slack: ratio(gap, lower),
        upper_slack: ratio(upper, gap),
    })
}

/// `|D| ≥ gap / (upper factor · sup_D |∇²w0|²)`.
pub fn area_lower_certificate(b: &EnergyBudget) -> Result<f64> {
    let gap = b.gap()?;
    if gap == 0.0 {
        return Err(Error::ZeroWorkGap);
    }
    let (_, fu) = b.lemma_factors();
    Ok(gap / (fu * b.hess_sup_d))
}

/// Upper area bound in two forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperCertificate {
    /// `ρ0²·hessD/(K·W0)`.
    pub from_hessian: f64,
    /// The same with `hessD` bounded through the work gap.
    pub from_gap: f64,
}

pub fn area_upper_certificate(
    b: &EnergyBudget,
    k_emp: Option<f64>,
    rho0: f64,
) -> Result<UpperCertificate> {
    let k = k_emp.ok_or(Error::MissingCalibration)?;
    if !(k > 0.0) {
        return Err(Error::MissingCalibration);
    }
    let gap = b.gap()?;
    let (fl, _) = b.lemma_factors();
    let r2 = rho0 * rho0;
    Ok(UpperCertificate {
        from_hessian: r2 * b.hess_d / (k * b.w0),
        from_gap: r2 * gap / (fl * k * b.w0),
    })
}

/// Covering constant from a propagation-of-smallness ratio `m` at radius
/// `ερ0/2`: `∫_D |∇²w0|² ≥ m/(2ε²ξ1) · |D|/ρ0² · W0` for fat inclusions.
pub fn k_from_lps(min_ratio: f64, eps: f64, xi1: f64) -> f64 {
    min_ratio / (2.0 * eps * eps * xi1)
}

/// Multipliers of `C1ρ0²·relGap` and `C2ρ0²·relGap` in the two-sided bound.
pub fn theorem_factors(sign: JumpSign, eta0: f64, eta1: f64) -> (f64, f64) {
    match sign {
        JumpSign::Plus => (1.0 / (eta1 - 1.0), eta1 / eta0),
        _ => (eta1 / (1.0 - eta1), 1.0 / eta0),
    }
}

/// One solved experiment with known inclusion area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub true_area: f64,
    pub rho0: f64,
    pub budget: EnergyBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignConstants {
    pub c1: f64,
    pub c2: f64,
    pub count: usize,
}

/// Constants enclosing a calibration family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub plus: Option<SignConstants>,
    pub minus: Option<SignConstants>,
    /// Smallest `hessD·ρ0²/(|D|·W0)` over the family.
    pub k_emp: f64,
    /// Least-squares slope of `log relGap` against `log |D|`.
    pub slope: f64,
    pub intercept: f64,
    pub count: usize,
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

/// Fits enclosing theorem constants from at least ten experiments.
pub fn calibrate_constants(records: &[ExperimentRecord]) -> Result<Calibration> {
    if records.len() < 10 {
        return Err(Error::DegenerateFamily(format!(
            "{} experiments, at least 10 required",
            records.len()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut plus: Option<SignConstants> = None;
    let mut minus: Option<SignConstants> = None;
    let mut k_emp = f64::INFINITY;
    for r in records {
        let b = &r.budget;
        let rel = b.rel_gap()?;
        if !(rel > 0.0) || !(r.true_area > 0.0) {
            return Err(Error::DegenerateFamily(
                "experiment with vanishing gap or area".into(),
            ));
        }
        xs.push(r.true_area.ln());
        ys.push(rel.ln());
        let (f1, f2) = theorem_factors(b.sign, b.eta0, b.eta1);
        let base = r.rho0 * r.rho0 * rel;
        let c1 = r.true_area / (f1 * base);
        let c2 = r.true_area / (f2 * base);
        let slot = if b.sign == JumpSign::Plus {
            &mut plus
        } else {
            &mut minus
        };
        *slot = Some(match *slot {
            None => SignConstants { c1, c2, count: 1 },
            Some(s) => SignConstants {
                c1: s.c1.min(c1),
                c2: s.c2.max(c2),
                count: s.count + 1,
            },
        });
        k_emp = k_emp.min(b.hess_d * r.rho0 * r.rho0 / (r.true_area * b.w0));
    }
    let (intercept, slope) = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::DegenerateFamily("all inclusions have the same area".into()))?;
    Ok(Calibration {
        plus,
        minus,
        k_emp,
        slope,
        intercept,
        count: records.len(),
    })
}

/// Calibrated bracket `[f1·C1·ρ0²·relGap, f2·C2·ρ0²·relGap]`.
pub fn theorem_bracket(
    cal: Option<&Calibration>,
    b: &EnergyBudget,
    rho0: f64,
) -> Result<(f64, f64)> {
    let cal = cal.ok_or(Error::MissingCalibration)?;
    let consts = match b.sign {
        JumpSign::Plus => cal.plus,
        JumpSign::Minus => cal.minus,
        JumpSign::Neither => None,
    }
    .ok_or(Error::MissingCalibration)?;
    let rel = b.rel_gap()?;
    let (f1, f2) = theorem_factors(b.sign, b.eta0, b.eta1);
    let base = rho0 * rho0 * rel;
    Ok((f1 * consts.c1 * base, f2 * consts.c2 * base))
}

//! JSON experiment configuration.

use crate::couple::{CoupleField, Polynomial};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, DomainSpec, Shape};
use crate::tensor::{PlateTensorField, TensorField};
use crate::Vec2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TensorFieldSpec {
    Isotropic {
        lambda: f64,
        mu: f64,
    },
    Constant {
        a0: f64,
        b0: f64,
        c0: f64,
        d0: f64,
        e0: f64,
        f0: f64,
    },
    /// Expressions in `x1`, `x2`.
    Expressions {
        a0: String,
        b0: String,
        c0: String,
        d0: String,
        e0: String,
        f0: String,
    },
    /// A multiple of the reference tensor (inclusion only).
    Scaled {
        factor: f64,
    },
}

impl TensorFieldSpec {
    pub fn build(&self, reference: Option<&TensorField>) -> Result<TensorField> {
        Ok(match self {
            TensorFieldSpec::Isotropic { lambda, mu } => TensorField::isotropic(*lambda, *mu),
            TensorFieldSpec::Constant {
                a0,
                b0,
                c0,
                d0,
                e0,
                f0,
            } => TensorField::orthotropic(*a0, *b0, *c0, *d0, *e0, *f0),
            TensorFieldSpec::Expressions {
                a0,
                b0,
                c0,
                d0,
                e0,
                f0,
            } => TensorField::from_expressions([a0, b0, c0, d0, e0, f0].map(String::as_str))?,
            TensorFieldSpec::Scaled { factor } => {
                let r = reference
                    .ok_or_else(|| Error::Config("scaled tensor needs a reference".into()))?;
                scale_field(r, *factor)?
            }
        })
    }
}

fn scale_field(t: &TensorField, factor: f64) -> Result<TensorField> {
    if t.is_constant() {
        let c = t.at(Vec2::zeros()).scaled(factor);
        return Ok(TensorField::orthotropic(c.a0, c.b0, c.c0, c.d0, c.e0, c.f0));
    }
    let parts: Vec<String> = [&t.a0, &t.b0, &t.c0, &t.d0, &t.e0, &t.f0]
        .iter()
        .map(|f| match f {
            crate::tensor::ScalarField::Constant(v) => format!("{:e}", v * factor),
            crate::tensor::ScalarField::Expression { expr, .. } => format!("({factor:e})*({expr})"),
        })
        .collect();
    TensorField::from_expressions(
        [
            &parts[0], &parts[1], &parts[2], &parts[3], &parts[4], &parts[5],
        ]
        .map(|s| s.as_str()),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorSpec {
    pub thickness: f64,
    pub reference: TensorFieldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusion: Option<TensorFieldSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Disc {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default)]
        angle: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

impl ShapeSpec {
    pub fn build(&self) -> Result<Shape> {
        match self {
            ShapeSpec::Disc { center, radius } => Shape::disc(Vec2::from(*center), *radius),
            ShapeSpec::Ellipse {
                center,
                a,
                b,
                angle,
            } => Shape::ellipse(Vec2::from(*center), *a, *b, *angle),
            ShapeSpec::Polygon { vertices } => {
                Shape::polygon(vertices.iter().map(|v| Vec2::from(*v)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionSpec {
    pub shape: ShapeSpec,
    #[serde(default = "default_d0")]
    pub d0: f64,
    #[serde(default = "default_h1")]
    pub h1: f64,
}

fn default_d0() -> f64 {
    0.1
}
fn default_h1() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoupleSpec {
    Zero,
    /// Boundary data of a field with constant Hessian `(H11, H22, H12)`.
    PureBending {
        hessian: [f64; 3],
    },
    /// `M̂_n`, `M̂_τ` as expressions of the arclength fraction `t`.
    Profile {
        mn: String,
        #[serde(default = "zero_expr")]
        mtau: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<[f64; 2]>,
        #[serde(default)]
        enforce_compatibility: bool,
    },
    RandomFourier {
        support: [f64; 2],
        #[serde(default = "default_modes")]
        modes: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Data of an exact polynomial solution given as `[i, j, c]` terms of `c x^i y^j`.
    Manufactured {
        terms: Vec<(u32, u32, f64)>,
    },
}

fn zero_expr() -> String {
    "0".into()
}
fn default_modes() -> usize {
    6
}

impl CoupleSpec {
    pub fn build(
        &self,
        curve: &BoundaryCurve,
        p: &PlateTensorField,
        seed: u64,
    ) -> Result<CoupleField> {
        match self {
            CoupleSpec::Zero => Ok(CoupleField::zero(curve)),
            CoupleSpec::PureBending { hessian } => {
                if !p.is_constant() {
                    return Err(Error::Config(
                        "pure bending data requires a constant tensor".into(),
                    ));
                }
                Ok(CoupleField::pure_bending(
                    curve,
                    &p.at(Vec2::zeros()),
                    *hessian,
                ))
            }
            CoupleSpec::Profile {
                mn,
                mtau,
                support,
                enforce_compatibility,
            } => {
                let mut f = CoupleField::profile(curve, mn, mtau, support.map(|s| (s[0], s[1])))?;
                if *enforce_compatibility {
                    f.make_compatible()?;
                }
                Ok(f)
            }
            CoupleSpec::RandomFourier {
                support,
                modes,
                seed: s,
            } => CoupleField::random_fourier(
                curve,
                (support[0], support[1]),
                *modes,
                s.unwrap_or(seed),
            ),
            CoupleSpec::Manufactured { terms } => {
                if !p.is_constant() {
                    return Err(Error::Config(
                        "manufactured data requires a constant tensor".into(),
                    ));
                }
                CoupleField::manufactured(
                    curve,
                    &p.at(Vec2::zeros()),
                    Polynomial::new(terms.clone()),
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSpec {
    /// Target element size of the coarsest level.
    pub h: f64,
    /// Number of uniform levels, each halving `h`.
    pub levels: usize,
    /// Graded refinement towards the inclusion boundary.
    pub refine_inclusion: bool,
    /// Element size at the inclusion boundary relative to `h`.
    pub fine_factor: f64,
    pub grading: f64,
    pub fit_interface: bool,
    pub smoothing_passes: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec {
            h: 0.1,
            levels: 1,
            refine_inclusion: true,
            fine_factor: 0.5,
            grading: 0.5,
            fit_interface: true,
            smoothing_passes: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsSpec {
    /// Connectivity scale; scanned from the domain when absent.
    pub h0: Option<f64>,
    /// Minimum admissible `1 − |Γ|/|∂Ω|`.
    pub delta0: Option<f64>,
    /// Cap on the frequency ratio `F`.
    pub f_cap: Option<f64>,
    pub rho_star: Option<f64>,
    pub delta: Option<f64>,
    pub delta_chi: Option<f64>,
    pub a1: Option<f64>,
    pub b1: Option<f64>,
    /// Relative tolerance of the energy-lemma check.
    pub slack: f64,
    /// Relative tolerance of the compatibility test.
    pub compat_tol: f64,
    /// Points per side of the tensor sampling grid.
    pub tensor_grid: usize,
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        ConstantsSpec {
            h0: None,
            delta0: None,
            f_cap: None,
            rho_star: None,
            delta: None,
            delta_chi: None,
            a1: None,
            b1: None,
            slack: 0.02,
            compat_tol: 1e-8,
            tensor_grid: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignSpec {
    /// Radii of the disc-inclusion family used for calibration.
    pub inclusion_radii: Vec<f64>,
    pub family_center: [f64; 2],
    /// Every `holdout_every`-th member is held out of the fit.
    pub holdout_every: usize,
    /// Radii of the propagation-of-smallness scan; geometric with ratio √2 when absent.
    pub rho_grid: Option<Vec<f64>>,
    pub r_grid: Vec<f64>,
    pub three_spheres_radii: [f64; 3],
    /// Lattice spacing of three-spheres centres.
    pub three_spheres_spacing: f64,
    /// Size of the random data family for the boundary-data ratio.
    pub random_family: usize,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        CampaignSpec {
            inclusion_radii: (0..15)
                .map(|i| 0.08 * 10f64.powf(0.5 * i as f64 / 14.0))
                .collect(),
            family_center: [0.0, 0.0],
            holdout_every: 3,
            rho_grid: None,
            r_grid: (0..=25).map(|i| i as f64 * 0.02).collect(),
            three_spheres_radii: [0.05, 0.1, 0.2],
            three_spheres_spacing: 0.2,
            random_family: 10,
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub tensor: TensorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusion: Option<InclusionSpec>,
    pub couple: CoupleSpec,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub constants: ConstantsSpec,
    #[serde(default)]
    pub campaign: CampaignSpec,
    #[serde(default)]
    pub seed: u64,
    /// Require calibrated theorem constants in the bounds table.
    #[serde(default)]
    pub theorem_form: bool,
    /// Per-experiment overrides merged onto this configuration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub experiments: Vec<Value>,
}

impl ExperimentConfig {
    /// Parses JSON, reporting the line and column of syntax or schema errors.
    pub fn from_json(src: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(src).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
            Error::Config(format!("line {} column {}: {msg}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.tensor.thickness > 0.0) {
            return bad(format!(
                "thickness {} must be positive",
                self.tensor.thickness
            ));
        }
        if !(self.mesh.h > 0.0) {
            return bad(format!("mesh.h {} must be positive", self.mesh.h));
        }
        if self.mesh.levels == 0 {
            return bad("mesh.levels must be at least 1".into());
        }
        if self.campaign.holdout_every < 2 {
            return bad("campaign.holdout_every must be at least 2".into());
        }
        if matches!(self.tensor.reference, TensorFieldSpec::Scaled { .. }) {
            return bad("the reference tensor cannot be scaled".into());
        }
        if self.tensor.inclusion.is_some() != self.inclusion.is_some() {
            return bad("inclusion geometry and inclusion tensor must be given together".into());
        }
        Ok(())
    }

    /// The base configuration followed by each override, merged recursively.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>> {
        if self.experiments.is_empty() {
            return Ok(vec![self.clone()]);
        }
        let mut base = self.clone();
        base.experiments.clear();
        let base_json = serde_json::to_value(&base)?;
        self.experiments
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let mut v = base_json.clone();
                merge(&mut v, o);
                let cfg: ExperimentConfig = serde_json::from_value(v)
                    .map_err(|e| Error::Config(format!("experiment {i}: {e}")))?;
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    // a new "kind" replaces the whole tagged object
                    Some(slot) if slot.is_object() && v.is_object() && v.get("kind").is_none() => {
                        merge(slot, v)
                    }
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

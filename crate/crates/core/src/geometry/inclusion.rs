//! Inclusions, the fatness condition and square coverings.

use super::region::Shape;
use crate::error::{Error, Result};
use crate::Vec2;
use serde::{Deserialize, Serialize};

/// An inclusion `D ⊂ Ω` with its a-priori constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Inclusion {
    pub shape: Shape,
    pub d0: f64,
    pub h1: f64,
}

impl Inclusion {
    pub fn area(&self) -> f64 {
        self.shape.shape_area()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatnessReport {
    pub fat: bool,
    pub area: f64,
    pub eroded_area: f64,
}

/// `|D_{h1ρ0}| ≥ |D|/2`.
pub fn check_fatness(d: &Inclusion, rho0: f64) -> FatnessReport {
    let area = d.area();
    let eroded_area = d.shape.eroded(d.h1 * rho0).area();
    FatnessReport {
        fat: eroded_area >= 0.5 * area,
        area,
        eroded_area,
    }
}

/// Closed axis-aligned square `[x, x+side] × [y, y+side]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub corner: [f64; 2],
    pub side: f64,
}

impl Square {
    pub fn center(&self) -> Vec2 {
        Vec2::new(
            self.corner[0] + 0.5 * self.side,
            self.corner[1] + 0.5 * self.side,
        )
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let [x, y] = self.corner;
        let s = self.side;
        [
            Vec2::new(x, y),
            Vec2::new(x + s, y),
            Vec2::new(x + s, y + s),
            Vec2::new(x, y + s),
        ]
    }
}

/// Grid squares of the given side meeting `D_h = {x ∈ D : dist(x, ∂D) > h}`.
///
/// A square can meet `D_h` only if its centre lies deeper than
/// `h − side/√2`; every such square is returned, so the union covers `D_h`.
/// When `side ≤ h/√2` each returned square lies inside `D`.
pub fn cover_with_squares(shape: &Shape, h: f64, side: f64) -> Result<Vec<Square>> {
    if !(side > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "square side {side} must be positive"
        )));
    }
    let (lo, hi) = shape.shape_bbox();
    let half_diag = side * std::f64::consts::FRAC_1_SQRT_2;
    let nx = ((hi.x - lo.x) / side).ceil() as usize + 1;
    let ny = ((hi.y - lo.y) / side).ceil() as usize + 1;
    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let sq = Square {
                corner: [lo.x + i as f64 * side, lo.y + j as f64 * side],
                side,
            };
            if shape.inner_distance(sq.center()) > h - half_diag {
                out.push(sq);
            }
        }
    }
    if out.is_empty() || shape.eroded(h).area() <= 0.0 {
        return Err(Error::EmptyCover);
    }
    Ok(out)
}

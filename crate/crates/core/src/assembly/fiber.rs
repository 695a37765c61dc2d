use serde::{Deserialize, Serialize};

use super::basis::{Basis, WALL_DOMINANCE};
use crate::error::{invariant, Result};
use crate::linalg::SymTridiagonal;
use crate::model::{eval_wall, ModelParams, WallSide};

/// Which confining walls enter an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WallSet {
    pub left: bool,
    pub right: bool,
}

impl WallSet {
    pub const BOTH: Self = Self {
        left: true,
        right: true,
    };
    pub const NONE: Self = Self {
        left: false,
        right: false,
    };
    pub const LEFT: Self = Self {
        left: true,
        right: false,
    };
    pub const RIGHT: Self = Self {
        left: false,
        right: true,
    };

    pub fn only(side: WallSide) -> Self {
        match side {
            WallSide::Left => Self::LEFT,
            WallSide::Right => Self::RIGHT,
        }
    }

    pub fn potential(&self, params: &ModelParams, x: f64) -> f64 {
        let mut u = 0.0;
        if self.left {
            u += eval_wall(x, &params.wall_left, params.length);
        }
        if self.right {
            u += eval_wall(x, &params.wall_right, params.length);
        }
        u
    }
}

/// Every active wall whose junction lies on the grid must reach
/// `10·e_ref` at the corresponding grid end.
pub fn check_wall_dominance(basis: &Basis, params: &ModelParams, walls: WallSet) -> Result<()> {
    let required = WALL_DOMINANCE * basis.e_ref;
    let half = 0.5 * params.length;
    if walls.left && -half > basis.x_min() {
        let u = eval_wall(basis.x_min(), &params.wall_left, params.length);
        if u < required {
            return invariant(format!(
                "left wall reaches {u:.4} at x_min={:.4}; >= {required:.4} (10x top window energy) required",
                basis.x_min()
            ));
        }
    }
    if walls.right && half < basis.x_max() {
        let u = eval_wall(basis.x_max(), &params.wall_right, params.length);
        if u < required {
            return invariant(format!(
                "right wall reaches {u:.4} at x_max={:.4}; >= {required:.4} (10x top window energy) required",
                basis.x_max()
            ));
        }
    }
    Ok(())
}

/// Three-point discretization of
/// `-d²/dx² + (k - 2π·flux/L - Bx)² + U(x) [+ extra]` with Dirichlet ends.
pub fn build_fiber(
    k: f64,
    basis: &Basis,
    params: &ModelParams,
    walls: WallSet,
    extra_potential: Option<&[f64]>,
) -> Result<SymTridiagonal> {
    check_wall_dominance(basis, params, walls)?;
    if let Some(extra) = extra_potential {
        if extra.len() != basis.n_x() {
            return invariant(format!(
                "extra potential has {} samples for {} grid points",
                extra.len(),
                basis.n_x()
            ));
        }
    }
    Ok(fiber_unchecked(k, basis, params, walls, extra_potential))
}

pub(crate) fn fiber_unchecked(
    k: f64,
    basis: &Basis,
    params: &ModelParams,
    walls: WallSet,
    extra_potential: Option<&[f64]>,
) -> SymTridiagonal {
    let n = basis.n_x();
    let inv_dx2 = 1.0 / (basis.dx * basis.dx);
    let q = k - params.flux_shift();
    let diag = basis
        .x
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let p = q - params.b_field * x;
            let mut d = 2.0 * inv_dx2 + p * p + walls.potential(params, x);
            if let Some(extra) = extra_potential {
                d += extra[i];
            }
            d
        })
        .collect();
    SymTridiagonal::new(diag, vec![-inv_dx2; n - 1])
}

/// Diagonal of the velocity `2(k - 2π·flux/L - Bx)` for one mode.
pub fn fiber_velocity(k: f64, basis: &Basis, params: &ModelParams) -> Vec<f64> {
    let q = k - params.flux_shift();
    basis
        .x
        .iter()
        .map(|&x| 2.0 * (q - params.b_field * x))
        .collect()
}

//! Discretized operators in the mixed Fourier/grid representation.

pub mod basis;
pub mod fiber;
pub mod operator;
pub mod quadrature;

pub use basis::{default_dx, default_j_max, Basis, BasisOptions, MIN_GRID_POINTS, MIN_MODES, WALL_DOMINANCE};
pub use fiber::{build_fiber, check_wall_dominance, fiber_velocity, WallSet};
pub use operator::{
    assemble_full, assemble_velocity, bump_row_transform, disorder_couplings, AssembledOperator,
    MixedHamiltonian, RowCoupling, FOURIER_QUADRATURE_ORDER,
};
pub use quadrature::gauss_legendre;

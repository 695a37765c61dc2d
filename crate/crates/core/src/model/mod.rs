//! Physical ingredients of the confined magnetic cylinder.

pub mod disorder;
pub mod lattice;
pub mod params;

pub use disorder::{
    eval_bump, eval_disorder_potential, minimal_image, sample_realization, CouplingOrigin,
    DisorderRealization, BUMP_RADIUS, GENERATOR,
};
pub use lattice::{build_lattice, y_sites, LatticeSpec, LatticeVariant};
pub use params::{eval_wall, ModelParams, WallProfile, WallSide};

pub mod block_ldl;
pub mod lanczos;
pub mod tridiag;

pub use block_ldl::ShiftedFactorization;
pub use lanczos::{fix_phase, window_eigenpairs, LanczosOptions, RitzPair};
pub use tridiag::SymTridiagonal;

//! Accelerant reconstruction from a continuous potential.

mod pipeline;
mod semiseparable;
mod similarity;

pub use pipeline::{
    accelerant_from_potential, build_e0, reconstruct, st_kernel_check, Diagnostics, NormalizedE0, Reconstruction,
    StResiduals, DEFAULT_TOL,
};
pub use semiseparable::{build_l, monomials, SemiSepOperator};
pub use similarity::{
    ea_le_residual, g_from_kernel, g_from_u1, similarity_e, similarity_e_general, similarity_kernel_direct,
    u1_oracle_residual, Rho, SimilarityData, Triangle, MAX_NEUMANN_TERMS,
};

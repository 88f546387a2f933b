//! Design of orthonormal compactly supported wavelet filters with maximal
//! Sobolev regularity.
//!
//! The pipeline: prescribe double roots of the scaling filter on
//! (pi/2, pi), solve a linear system for the squared magnitude |m0|^2,
//! factor out the zero at pi to get the residual polynomial r, compute the
//! exact Sobolev exponent s0 = M - log4 rho(T_r) from the transfer-operator
//! matrix, optimize the root locations, and finally produce validated
//! filter coefficients by spectral factorization.

pub mod design;
pub mod error;
pub mod optimize;
pub mod prec;
pub mod refine;
pub mod regularity;
pub mod synthesis;
pub mod trigpoly;

pub use design::{
    check_cohen, check_orthonormality, extract_r, extract_r_capped, solve_by_roots, solve_by_v,
    DesignParams, Factorization, SqMagnitude,
};
pub use error::{Error, Result};
pub use optimize::{objective, optimize_roots, optimize_v_2dof, scan, OptimizationResult, StartSpec};
pub use refine::{refine_roots, s0_mp, spectral_radius_mp};
pub use regularity::{
    regularity, regularity_capped, spectral_radius, transfer_matrix, RegularityReport,
    TransferMatrix,
};
pub use synthesis::{
    phi_samples, phihat_product, spectral_factorize, spectral_factorize_ladder,
    spectral_factorize_ladder_with_phase, spectral_factorize_with_phase, wavelet_filter,
    PhaseConvention, ScalingFilter,
};
pub use trigpoly::CosinePoly;

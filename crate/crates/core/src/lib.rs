//! Forward and inverse spectral problems for
//!
//! ```text
//! y''' + lambda p1 y'' + lambda^2 p2 y' + lambda^3 p3 y = 0,
//! U_i(y) = sum_k a_ik y^(k-1)(0) + a_i,k+3 y^(k-1)(1) = 0   (i = 1, 2, 3)
//! ```
//!
//! The forward direction computes eigenvalues for a given 3x6 boundary matrix
//! `A`. The inverse direction recovers the row span of `A` from 19 or more
//! eigenvalues via the third-order minors of `A`.

pub mod charode;
pub mod complexalg;
mod error;
pub mod forward;
pub mod inverse;
pub mod pluecker;

pub use charode::{
    boundary_minors, boundary_values, characteristic_roots, check_theorem1, BoundaryValues,
    CharacteristicRoots, ConditionReport, FundamentalSystem, ProblemCoefficients, SignedSubset,
};
pub use complexalg::{CMatrix, Complex};
pub use error::{Error, Result};
pub use forward::{char_det, char_det_direct, find_eigenvalues, SearchRegion, Spectrum};
pub use inverse::{
    assemble_system, invert_spectrum, perturbation_study, InversionSettings, PerturbationRecord,
    ReconstructionReport,
};
pub use pluecker::{
    minors_of, reconstruct, span_distance, BoundaryMatrix, MinorVector, TripleIndex,
};

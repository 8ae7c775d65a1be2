//! Numerics for generalized theta series: the one-dimensional sum whose
//! phase is a polynomial with one complex parameter per degree.
//!
//! The crate provides
//! * certified evaluation of the series, its summation-shifted variants,
//!   and its parameter derivatives, each with a proven tail bound,
//! * the extended Heisenberg-type symmetry group acting on the parameters,
//!   with a finite-dimensional matrix model of that action,
//! * rational characteristics, the level embedding into projective space,
//!   and the induced finite group action on embedded families,
//! * a catalog of exact differential identities in the parameters, checked
//!   both symbolically and numerically, with an independent
//!   finite-difference cross-check.
//!
//! Conventions: a parameter vector (tau_1, ..., tau_N) requires even N
//! with Im tau_N > 0; the term of index n carries the phase
//! 2 pi i sum_k tau_k n^k / k!.

pub mod characteristics;
pub mod dd;
pub mod error;
pub mod heisenberg;
pub mod params;
pub mod pde;
pub mod series;

pub use characteristics::{
    chain_project, embed, embedding_params, enumerate_chars, group_action_on_family,
    projective_equal, theta_char_eval, Characteristic, FamilyActionReport, ProjectivePoint,
    PROJECTIVE_FLOOR,
};
pub use dd::theta_reference_sum;
pub use error::GtfError;
pub use heisenberg::{
    apply_s, apply_t, commutation_phase, group_multiply, inverse, matrix_apply, matrix_rep,
    GroupElement, RepMatrix,
};
pub use params::{
    phase_derivative, phase_eval, shifted_params, validate_domain, ParameterVector,
    PhasePolynomial, MAX_PARAMS,
};
pub use pde::{
    builtin_pdes, finite_difference, finite_difference_richardson, pde_residual,
    symbolic_annihilation, PdeSpec, PdeTerm, SymCoeff,
};
pub use series::{
    theta_derivative, theta_eval, theta_eval_offset, truncation_bound, EvalResult, MultiIndex,
    DEFAULT_RANGE_CAP,
};

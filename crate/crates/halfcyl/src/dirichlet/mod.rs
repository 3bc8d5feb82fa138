//! Masked Dirichlet problem on a truncated band [w_lo, w_hi] × T³.
//!
//! The correction u solves −Δu = φ on the Ω nodes with u = 0 elsewhere
//! (staircase Dirichlet condition), φ = Δf, so that f + u is harmonic on Ω
//! up to discretization. The stencil is the 9-point second-difference
//! Laplacian in 4-D, periodic in y, eliminated rows at the w end slices.
//!
//! Two solver paths:
//!  - unscaled conjugate gradient with Jacobi scaling (SPD M-matrix); fine
//!    while e^{−w^{4/3}} is representable, i.e. bands below w ≈ 137;
//!  - an envelope-scaled path for the decay profile: conjugating by
//!    D = diag(e^{w^{4/3}}) turns −Δ into the nonsymmetric operator
//!    −Δ + (8/3)w^{1/3}∂_w − ((16/9)w^{2/3} − (4/9)w^{−2/3}) whose discrete
//!    matrix is exactly DAD⁻¹; BiCGStab solves it matrix-free with the same
//!    spectrum, and the right side is lap_f_scaled directly. This keeps every
//!    slab of the solution at unit scale, which the unscaled CG cannot do
//!    once the band spans many e-foldings of the envelope.

mod checks;
mod grid;
mod solve;

pub use checks::{
    decay_profile_check, energy, friedrichs_ratio, mean_value_inequality_check,
    positivity_check, symmetry_defect, truncation_interior_diff, DecayReport,
};
pub use grid::MaskedGrid;
pub use solve::{assemble_rhs, assemble_rhs_custom, solve, solve_scaled, RhsMode, SolveReport};

//! Variational solver for competitive nonlinear Schrödinger systems whose
//! components are pairwise rotations of one another ("pinwheel" tuples).
//!
//! The system
//!
//! ```text
//! -Δu_i + V(|x|) u_i = |u_i|^{2p-2} u_i + β Σ_{j≠i} |u_j|^p |u_i|^{p-2} u_i,
//! u_i ∈ H¹(ℝ^N),  u_i > 0,  i = 1,…,ℓ,  β < 0,
//! ```
//!
//! is reduced by the symmetry ansatz
//!
//! ```text
//! u_1(e^{2πi/n} z, θy) = u_1(z, y),    u_{j+1}(z, y) = u_1(e^{2πij/ℓn} z, y),
//! ```
//!
//! so that only the first component on one angular period [0, 2π/n) needs to
//! be stored; every other component is an exact index shift of it. Energy
//! minimization runs on the Nehari manifold by projected gradient descent.
//!
//! Modules:
//! - [`symmetry`]: the cyclic group action and index-shift arithmetic.
//! - [`grid`]: polar discretization, quadrature, Laplacian stencil.
//! - [`potential`]: radial trapping potentials and admissibility checks.
//! - [`scalar`]: radial ground states, cutoff profiles, test tuples.
//! - [`functional`]: the coupled energy, its gradient and Nehari algebra.
//! - [`solver`]: projected descent in the ⟨·,·⟩_V metric, β-continuation.
//! - [`precond`]: exact (-Δ+V) solves via per-angular-mode tridiagonals.
//! - [`partition`]: segregation diagnostics in the β → -∞ regime.
//! - [`io`]: binary field dumps, PGM heatmaps, CSV tables.

pub mod error;
pub mod functional;
pub mod grid;
pub mod io;
pub mod partition;
pub mod potential;
pub mod precond;
pub mod scalar;
pub mod solver;
pub mod symmetry;
pub mod util;

pub use error::Error;
pub use functional::{EnergyBreakdown, EnergyModel};
pub use grid::{ComponentField, GridParams, PolarGrid};
pub use potential::RadialPotential;
pub use scalar::GroundState;
pub use solver::{SolveOptions, SolveReport, SolveStatus};
pub use symmetry::PinwheelConfig;

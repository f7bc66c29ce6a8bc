//! Radial numerical laboratory for normalized ground states of coupled
//! Choquard systems with an upper-critical nonlocal term.
//!
//! The system under study, posed on ℝ^N with N ≥ 3, couples two unknowns
//! (u, v) through a Riesz-potential convolution:
//!
//! ```text
//!   -Δu + λ₁u = (I_μ ∗ |u|^{2*_μ}) |u|^{2*_μ−2} u + νp (I_μ ∗ |v|^q) |u|^{p−2} u
//!   -Δv + λ₂v = (I_μ ∗ |v|^{2*_μ}) |v|^{2*_μ−2} v + νq (I_μ ∗ |u|^p) |v|^{q−2} v
//!   ∫u² = a²,  ∫v² = b²
//! ```
//!
//! where 2*_μ = (2N−μ)/(N−2) is the upper critical exponent of the
//! Hardy–Littlewood–Sobolev inequality and λ₁, λ₂ arise as Lagrange
//! multipliers of the mass constraints.  The crate provides:
//!
//! * sharp Γ-function constants and the explicit coupling thresholds
//!   ([`params`], [`constants`]);
//! * a graded radial grid with product quadrature, the L²-invariant dilation
//!   and decreasing rearrangement ([`grid`], [`field`]);
//! * the dense radial realization of f ↦ I_μ ∗ f with singularity-aware
//!   entries ([`kernel`]);
//! * energies, the Pohozaev functional, the dilation fiber map and its root
//!   structure, multipliers, and bubble families ([`energy`], [`bubble`]);
//! * sharp Gagliardo–Nirenberg constants by Weinstein-ratio ascent ([`gn`]);
//! * ground-state solves by tangent-projected descent of the fiber-reduced
//!   functional ([`solve`]);
//! * batch experiments: threshold scans, asymptotic rate fits, bubble
//!   concentration checks, the ν ≤ 0 probe, and reproducible run records
//!   ([`experiments`]).
//!
//! All state lives on one-dimensional radial meshes; solutions of the system
//! in the regimes covered here are radial, so the ansatz is faithful for
//! ground-state work.  Everything is `f64`: the advertised tolerances
//! (1e−10 … 1e−13) and the dense kernel storage are double-precision
//! commitments, so no scalar genericity is exposed.

pub mod bubble;
pub mod constants;
pub mod energy;
// pub mod experiments;
pub mod field;
pub mod gn;
pub mod grid;
pub mod kernel;
pub mod params;
pub mod solve;

mod scalar;

pub use constants::ConstantsTable;
pub use energy::{EnergyBreakdown, FiberReport};
pub use field::RadialField;
pub use grid::RadialGrid;
pub use kernel::RieszKernel;
pub use params::{DerivedExponents, MassClass, ProblemParams};
pub use solve::{SolveConfig, SolveReport};

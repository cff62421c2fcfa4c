//! Numerical laboratory for the one-phase cavitation problem
//!
//! ```text
//!     J(u) = ∫ ω |∇u|² + ε β(u)      (β = χ_{u>0} by default)
//! ```
//!
//! with singular Muckenhoupt A₂ weights ω. The crate computes discrete local
//! minimizers by exact nodewise coordinate descent and measures the geometry
//! of their free boundaries: growth rate `1 + |α|/2` at singular points,
//! nondegeneracy, positive density, blow-up limits and the weighted elliptic
//! estimates (Harnack, Poincaré, Hölder) that support them.

pub mod analysis;
pub mod blowup;
pub mod error;
pub mod grid;
pub mod io;
pub mod quadrature;
pub mod scenario;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{BoundaryData, EnergyBreakdown, FaceWeightField, Grid, ScalarField};
pub use solver::{JumpProfile, Ordering, SolveConfig, SolveResult};
pub use weights::{WeightKind, WeightSpec};

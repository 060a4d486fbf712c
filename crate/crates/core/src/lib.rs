//! Mixed finite elements for the singularly perturbed fourth-order problem
//!
//! ```text
//! ε² u⁗ − b u″ + c u + d u(x−1) = f   on (0,2),   u = Φ on (−1,0),
//! u(0) = u(2) = 0,   u⁽ᵐ⁾(0) = u⁽ᵐ⁾(2) = 0,   m ∈ {1,2},
//! ```
//!
//! discretised in the variables `(u, w = εu″)` with continuous piecewise
//! polynomials of degree `q` on layer-adapted meshes. Besides the solver the
//! crate carries the tooling needed to verify it: error norms against fine
//! reference solutions, the local interpolation operator used to measure
//! supercloseness, macro-mesh postprocessing, the leading terms of the
//! asymptotic solution decomposition and the constant-coefficient Green's
//! function computations behind the stability estimate.

pub mod asymptotics;
pub mod banded;
pub mod config;
pub mod errors;
pub mod fem;
pub mod greens;
pub mod interp;
pub mod mesh;
pub mod problem;
pub mod run;
pub mod quadrature;

mod error;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::errors::{eoc, ErrorReport, ReferenceSolution};
    pub use crate::fem::{assemble, solve, DiscreteSpace, PairField};
    pub use crate::mesh::{InnerMesh, LayerFamily, Mesh1D, MeshParams, MeshSpec};
    pub use crate::problem::{BcOrder, Coefficient, ProblemSpec};
    pub use crate::{Error, Result};
}

//! Numerical toolkit for one-dimensional Dirac operators `B y' + P y = λ y` on
//! [0, π] with regular two-point boundary conditions and integrable potentials.

pub mod boundary;
pub mod config;
pub mod error;
pub mod expansions;
pub mod functions;
pub mod green;
pub mod grid;
pub mod harness;
pub mod mat2;
pub mod mesh;
pub mod ode;
pub mod potentials;
pub mod quadrature;
pub mod spectrum;

pub use boundary::BoundaryMatrixPair;
pub use error::{DiracError, Result};
pub use functions::ScalarFunction;
pub use grid::GridFunction2;
pub use mat2::{Mat2, Vec2, C64};
pub use mesh::{Mesh, MeshBuilder, MeshParams};
pub use potentials::{PotentialMatrix, PotentialSpec};

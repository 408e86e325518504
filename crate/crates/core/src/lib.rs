//! Finite element simulation of a p-Laplacian thermistor: a nonlinear
//! potential equation coupled to a heat equation through Joule heating.

pub mod boundary;
pub mod config;
pub mod constitutive;
pub mod coupling;
pub mod error;
pub mod estimates;
pub mod expr;
pub mod fem;
pub mod heat;
pub mod io;
pub mod mesh;
pub mod pipeline;
pub mod potential;
pub mod studies;
pub mod suites;

pub use error::{Error, Result};
pub use fem::ScalarField;
pub use mesh::{build_rect_mesh, Mesh, Side};

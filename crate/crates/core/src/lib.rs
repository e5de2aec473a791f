//! Geometrically nonlinear 6-parameter resultant shell model.
//!
//! The deformation of a shell is described by two independent fields on a
//! reference surface: a translation `y` and a rotation `R` in SO(3). This
//! crate evaluates the associated elastic strain and curvature measures,
//! the quadratic energy densities of the isotropic, general isotropic,
//! orthotropic, and composite constitutive families, validates their
//! positivity, and minimizes the total potential energy over a structured
//! grid with mixed boundary conditions.
//!
//! All numerics are generic over the scalar type via [`num::Real`]
//! (`f32` or `f64`); `f64` aliases for the main types live at the crate
//! root. File formats and the problem-definition config are `f64`.

pub mod config;
pub mod constitutive;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kinematics;
pub mod linalg;
pub mod num;
pub mod solver;

pub use error::{Result, ShellError};
pub use num::{real, Real};

/// `f64` aliases for the generic core types.
pub type SurfaceGeometry64 = geometry::SurfaceGeometry<f64>;
pub type Grid64 = geometry::Grid<f64>;
pub type Domain64 = geometry::Domain<f64>;
pub type FramePoint64 = geometry::FramePoint<f64>;
pub type ShellConfiguration64 = kinematics::ShellConfiguration<f64>;
pub type ReferenceConfiguration64 = kinematics::ReferenceConfiguration<f64>;
pub type StrainState64 = kinematics::StrainState<f64>;
pub type MaterialModel64 = constitutive::MaterialModel<f64>;
pub type PositivityReport64 = constitutive::PositivityReport<f64>;
pub type ShellProblem64 = solver::ShellProblem<f64>;
pub type SolveOptions64 = solver::SolveOptions<f64>;
pub type MinimizeResult64 = solver::MinimizeResult<f64>;

/// `f32` aliases.
pub type SurfaceGeometry32 = geometry::SurfaceGeometry<f32>;
pub type Grid32 = geometry::Grid<f32>;
pub type ShellConfiguration32 = kinematics::ShellConfiguration<f32>;
pub type MaterialModel32 = constitutive::MaterialModel<f32>;
pub type ShellProblem32 = solver::ShellProblem<f32>;

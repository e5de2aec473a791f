//! Error type shared by all modules.

use std::fmt;

/// Errors produced by geometry evaluation, strain assembly, material
/// validation, the solver, and file I/O.
#[derive(Debug)]
pub enum ShellError {
    /// Evaluation point lies outside the parameter domain.
    OutOfDomain { x: [f64; 2] },
    /// `a1 x a2` vanishes at the evaluation point.
    DegenerateParametrization { x: [f64; 2], cross_norm: f64 },
    /// Polar decomposition input has `det <= tol`.
    SingularMatrix { det: f64, tol: f64 },
    /// An iteration failed to converge.
    NonConvergence { what: &'static str, iterations: usize },
    /// Matrix passed to `axl` is not skew-symmetric within tolerance.
    NotSkew { deviation: f64, tol: f64 },
    /// A finite-difference stencil does not fit inside the domain.
    BoundaryStencil { x: [f64; 2] },
    /// Configuration grid does not match the problem grid.
    GridMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// Relative rotation between element nodes exceeds a quarter turn;
    /// the bilinear rotation interpolant is unreliable past that point.
    MeshResolution { cell: (usize, usize), angle: f64 },
    /// Operation requires a different constitutive family.
    InvalidFamily {
        expected: &'static str,
        got: &'static str,
    },
    /// Inadmissible bulk moduli in coefficient identification.
    InvalidModuli(String),
    /// Semantic validation failure (material positivity, regularity,
    /// boundary partition, ...).
    Validation(String),
    /// Through-thickness coordinate outside `(-h/2, h/2)`.
    OutOfThickness { x3: f64, h: f64 },
    /// Backtracking line search could not find a decreasing step.
    LineSearchFailure {
        iteration: usize,
        energy: f64,
        grad_norm: f64,
    },
    /// Energy evaluated to a non-finite value.
    NonFiniteEnergy { iteration: usize },
    /// Problem definition file could not be parsed.
    Config(String),
    /// Field file import failure.
    Import(String),
    Io(std::io::Error),
}

impl fmt::Display for ShellError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShellError::OutOfDomain { x } => {
                write!(f, "point ({}, {}) is outside the parameter domain", x[0], x[1])
            }
            ShellError::DegenerateParametrization { x, cross_norm } => write!(
                f,
                "degenerate parametrization at ({}, {}): |a1 x a2| = {:.3e}",
                x[0], x[1], cross_norm
            ),
            ShellError::SingularMatrix { det, tol } => {
                write!(f, "polar decomposition needs det > {tol:.3e}, got {det:.3e}")
            }
            ShellError::NonConvergence { what, iterations } => {
                write!(f, "{what} did not converge within {iterations} iterations")
            }
            ShellError::NotSkew { deviation, tol } => write!(
                f,
                "matrix is not skew-symmetric: deviation {deviation:.3e} exceeds {tol:.3e}"
            ),
            ShellError::BoundaryStencil { x } => write!(
                f,
                "finite-difference stencil at ({}, {}) does not fit inside the domain",
                x[0], x[1]
            ),
            ShellError::GridMismatch { expected, got } => write!(
                f,
                "grid mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            ShellError::MeshResolution { cell, angle } => write!(
                f,
                "inter-node rotation angle {angle:.3} rad in cell ({}, {}) exceeds pi/2; refine the grid",
                cell.0, cell.1
            ),
            ShellError::InvalidFamily { expected, got } => {
                write!(f, "operation requires a {expected} material, got {got}")
            }
            ShellError::InvalidModuli(msg) => write!(f, "inadmissible moduli: {msg}"),
            ShellError::Validation(msg) => write!(f, "validation failed: {msg}"),
            ShellError::OutOfThickness { x3, h } => {
                write!(f, "x3 = {x3} outside thickness interval (-{0}/2, {0}/2)", h)
            }
            ShellError::LineSearchFailure {
                iteration,
                energy,
                grad_norm,
            } => write!(
                f,
                "line search failed at iteration {iteration} (energy {energy:.6e}, |grad| {grad_norm:.3e})"
            ),
            ShellError::NonFiniteEnergy { iteration } => {
                write!(f, "energy became non-finite at iteration {iteration}")
            }
            ShellError::Config(msg) => write!(f, "config error: {msg}"),
            ShellError::Import(msg) => write!(f, "field import error: {msg}"),
            ShellError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for ShellError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ShellError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for ShellError {
    fn from(e: std::io::Error) -> Self {
        ShellError::Io(e)
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, ShellError>;

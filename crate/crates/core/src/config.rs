//! Problem definition files: TOML sections mirroring the problem builder,
//! with unknown keys rejected and semantic validation routed through the
//! constitutive and geometry checks.

use std::path::Path;

use serde::Deserialize;

use crate::constitutive::{
    Composite, IsotropicGeneral, IsotropicSimple, MaterialModel, Orthotropic,
};
use crate::error::{Result, ShellError};
use crate::geometry::{Chart, DerivativeMode, Domain, SurfaceGeometry};
use crate::linalg::{Mat2, Mat3, Mat4, UnitQuat, Vec3};
use crate::solver::{
    AffineMap, BoundarySpec, EdgeCondition, EdgeKind, LoadField, Loads, Optimizer, ProblemOptions,
    RigidMotion, ShellProblem, SolveOptions,
};

/// Parsed problem definition.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub surface: SurfaceSection,
    pub grid: GridSection,
    pub material: MaterialSection,
    #[serde(default)]
    pub boundary: BoundarySection,
    #[serde(default)]
    pub loads: LoadsSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    /// `plane`, `cylinder`, `sphere`, or `graph`.
    pub chart: String,
    pub radius: Option<f64>,
    /// Graph chart coefficients `c0 + c1 x1 + c2 x2 + c3 x1^2 + c4 x1 x2 + c5 x2^2`.
    pub coeffs: Option<[f64; 6]>,
    pub domain: DomainSection,
    /// `analytic` (default) or `central-difference`.
    pub derivatives: Option<String>,
    /// Step for the central-difference mode; defaults to `1e-5` times the
    /// larger domain extent.
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    /// `isotropic-simple`, `isotropic-general`, `orthotropic`, `composite`.
    pub family: String,
    pub thickness: f64,
    // isotropic-simple
    pub young: Option<f64>,
    pub poisson: Option<f64>,
    pub alpha_s: Option<f64>,
    pub alpha_t: Option<f64>,
    // isotropic-general
    pub alpha: Option<[f64; 4]>,
    pub beta: Option<[f64; 4]>,
    // orthotropic
    pub c_e: Option<[[f64; 4]; 4]>,
    pub c_k: Option<[[f64; 4]; 4]>,
    pub d_e: Option<[[f64; 2]; 2]>,
    pub d_k: Option<[[f64; 2]; 2]>,
    // composite
    pub a: Option<[[f64; 4]; 4]>,
    pub b: Option<[[f64; 4]; 4]>,
    pub d: Option<[[f64; 4]; 4]>,
    pub s: Option<[[f64; 2]; 2]>,
    pub g: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub left: Option<EdgeSection>,
    pub right: Option<EdgeSection>,
    pub bottom: Option<EdgeSection>,
    pub top: Option<EdgeSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSection {
    /// `free`, `clamped`, or `pinned`.
    pub kind: String,
    /// Rigid motion applied to the reference data of the edge.
    pub motion: Option<MotionSection>,
    /// Position data affine in `(x1, x2)`.
    pub y_affine: Option<AffineSection>,
    /// Constant prescribed rotation quaternion `[w, x, y, z]`.
    pub rotation: Option<[f64; 4]>,
    /// Boundary force density on a free edge.
    pub traction: Option<[f64; 3]>,
    /// Boundary rotation load matrix on a free edge (rows).
    pub rotation_load: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSection {
    pub axis: [f64; 3],
    pub angle: f64,
    #[serde(default)]
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSection {
    #[serde(default)]
    pub origin: [f64; 3],
    #[serde(default)]
    pub d1: [f64; 3],
    #[serde(default)]
    pub d2: [f64; 3],
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadsSection {
    /// Constant surface force density.
    pub force: Option<[f64; 3]>,
    /// Surface rotation load matrix (rows).
    pub rotation_load: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    /// `lbfgs` (default) or `gradient-descent`.
    pub optimizer: String,
    pub memory: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub multi_start: usize,
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            optimizer: "lbfgs".into(),
            memory: 10,
            max_iter: 500,
            grad_tol: 1e-8,
            multi_start: 0,
            perturbation: 1e-2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<String>,
    /// `csv` (default) or `vtk`.
    pub format: String,
    pub reconstruct_layers: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            format: "csv".into(),
            reconstruct_layers: 3,
        }
    }
}

/// Parses a problem definition file; syntax errors carry the line/column of
/// the offending key.
pub fn parse_config(path: &Path) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ShellError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| match e {
        ShellError::Config(msg) => ShellError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses a problem definition from a TOML string.
pub fn parse_config_str(text: &str) -> Result<ProblemConfig> {
    toml::from_str::<ProblemConfig>(text).map_err(|e| ShellError::Config(e.to_string()))
}

impl ProblemConfig {
    /// Builds the surface described by the `[surface]` section.
    pub fn build_surface(&self) -> Result<SurfaceGeometry<f64>> {
        let s = &self.surface;
        let domain = Domain::new(s.domain.x1, s.domain.x2)?;
        let chart = match s.chart.as_str() {
            "plane" => Chart::Plane,
            "cylinder" => Chart::Cylinder {
                radius: require(s.radius, "surface.radius (cylinder)")?,
            },
            "sphere" => Chart::Sphere {
                radius: require(s.radius, "surface.radius (sphere)")?,
            },
            "graph" => Chart::Graph {
                coeffs: require(s.coeffs, "surface.coeffs (graph)")?,
            },
            other => {
                return Err(ShellError::Config(format!(
                    "unknown chart kind '{other}' (expected plane, cylinder, sphere, or graph)"
                )))
            }
        };
        let mode = match s.derivatives.as_deref().unwrap_or("analytic") {
            "analytic" => DerivativeMode::Analytic,
            "central-difference" => match s.fd_step {
                Some(step) => DerivativeMode::CentralDifference { step },
                None => DerivativeMode::central_default(&domain),
            },
            other => {
                return Err(ShellError::Config(format!(
                    "unknown derivative mode '{other}' (expected analytic or central-difference)"
                )))
            }
        };
        SurfaceGeometry::new(chart, domain, mode)
    }

    /// Builds the material described by the `[material]` section.
    pub fn build_material(&self) -> Result<MaterialModel<f64>> {
        let m = &self.material;
        let reject = |cond: bool, key: &str| -> Result<()> {
            if cond {
                Err(ShellError::Config(format!(
                    "key '{key}' does not belong to material family '{}'",
                    m.family
                )))
            } else {
                Ok(())
            }
        };
        match m.family.as_str() {
            "isotropic-simple" => {
                reject(m.alpha.is_some() || m.beta.is_some(), "alpha/beta")?;
                reject(m.c_e.is_some() || m.c_k.is_some() || m.d_e.is_some() || m.d_k.is_some(), "c_e/c_k/d_e/d_k")?;
                reject(m.a.is_some() || m.b.is_some() || m.d.is_some() || m.s.is_some() || m.g.is_some(), "a/b/d/s/g")?;
                let mut iso = IsotropicSimple::new(
                    require(m.young, "material.young")?,
                    require(m.poisson, "material.poisson")?,
                    m.thickness,
                );
                if let Some(a) = m.alpha_s {
                    iso.alpha_s = a;
                }
                if let Some(a) = m.alpha_t {
                    iso.alpha_t = a;
                }
                Ok(MaterialModel::IsotropicSimple(iso))
            }
            "isotropic-general" => {
                reject(m.young.is_some() || m.poisson.is_some() || m.alpha_s.is_some() || m.alpha_t.is_some(), "young/poisson/alpha_s/alpha_t")?;
                reject(m.c_e.is_some() || m.c_k.is_some() || m.d_e.is_some() || m.d_k.is_some(), "c_e/c_k/d_e/d_k")?;
                reject(m.a.is_some() || m.b.is_some() || m.d.is_some() || m.s.is_some() || m.g.is_some(), "a/b/d/s/g")?;
                Ok(MaterialModel::IsotropicGeneral(IsotropicGeneral {
                    alpha: require(m.alpha, "material.alpha")?,
                    beta: require(m.beta, "material.beta")?,
                }))
            }
            "orthotropic" => {
                reject(m.young.is_some() || m.poisson.is_some() || m.alpha_s.is_some() || m.alpha_t.is_some(), "young/poisson/alpha_s/alpha_t")?;
                reject(m.alpha.is_some() || m.beta.is_some(), "alpha/beta")?;
                reject(m.a.is_some() || m.b.is_some() || m.d.is_some() || m.s.is_some() || m.g.is_some(), "a/b/d/s/g")?;
                Ok(MaterialModel::Orthotropic(Orthotropic {
                    c_e: mat4(require(m.c_e, "material.c_e")?),
                    c_k: mat4(require(m.c_k, "material.c_k")?),
                    d_e: mat2(require(m.d_e, "material.d_e")?),
                    d_k: mat2(require(m.d_k, "material.d_k")?),
                }))
            }
            "composite" => {
                reject(m.young.is_some() || m.poisson.is_some() || m.alpha_s.is_some() || m.alpha_t.is_some(), "young/poisson/alpha_s/alpha_t")?;
                reject(m.alpha.is_some() || m.beta.is_some(), "alpha/beta")?;
                reject(m.c_e.is_some() || m.c_k.is_some() || m.d_e.is_some() || m.d_k.is_some(), "c_e/c_k/d_e/d_k")?;
                Ok(MaterialModel::Composite(Composite {
                    a: mat4(require(m.a, "material.a")?),
                    b: mat4(require(m.b, "material.b")?),
                    d: mat4(require(m.d, "material.d")?),
                    s: mat2(require(m.s, "material.s")?),
                    g: mat2(require(m.g, "material.g")?),
                }))
            }
            other => Err(ShellError::Config(format!(
                "unknown material family '{other}'"
            ))),
        }
    }

    fn build_boundary(&self) -> Result<BoundarySpec<f64>> {
        let build_edge = |section: &Option<EdgeSection>| -> Result<EdgeCondition<f64>> {
            let Some(e) = section else {
                return Ok(EdgeCondition::free());
            };
            let kind = match e.kind.as_str() {
                "free" => EdgeKind::Free,
                "clamped" => EdgeKind::Clamped,
                "pinned" => EdgeKind::Pinned,
                other => {
                    return Err(ShellError::Config(format!(
                        "unknown edge kind '{other}' (expected free, clamped, or pinned)"
                    )))
                }
            };
            if kind == EdgeKind::Free && (e.motion.is_some() || e.y_affine.is_some() || e.rotation.is_some()) {
                return Err(ShellError::Config(
                    "free edges cannot prescribe motion, y_affine, or rotation".into(),
                ));
            }
            if kind != EdgeKind::Free && (e.traction.is_some() || e.rotation_load.is_some()) {
                return Err(ShellError::Config(
                    "traction and rotation_load apply to free edges only".into(),
                ));
            }
            Ok(EdgeCondition {
                kind,
                motion: e.motion.as_ref().map(|m| RigidMotion {
                    rotation: UnitQuat::from_scaled_axis(
                        Vec3::from_column_slice(&m.axis).normalize() * m.angle,
                    ),
                    translation: Vec3::from_column_slice(&m.translation),
                }),
                y_affine: e.y_affine.as_ref().map(|a| AffineMap {
                    origin: Vec3::from_column_slice(&a.origin),
                    d1: Vec3::from_column_slice(&a.d1),
                    d2: Vec3::from_column_slice(&a.d2),
                }),
                rotation: match &e.rotation {
                    Some(q) => {
                        let quat = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
                        if (quat.norm() - 1.0).abs() > 1e-6 {
                            return Err(ShellError::Config(
                                "prescribed rotation quaternion must have unit norm".into(),
                            ));
                        }
                        Some(UnitQuat::new_normalize(quat))
                    }
                    None => None,
                },
                traction: e.traction.map(|t| Vec3::from_column_slice(&t)),
                rotation_load: e.rotation_load.map(mat3),
            })
        };
        Ok(BoundarySpec {
            left: build_edge(&self.boundary.left)?,
            right: build_edge(&self.boundary.right)?,
            bottom: build_edge(&self.boundary.bottom)?,
            top: build_edge(&self.boundary.top)?,
        })
    }

    fn build_loads(&self) -> Loads<f64> {
        Loads {
            force: match self.loads.force {
                Some(f) => LoadField::Constant(Vec3::from_column_slice(&f)),
                None => LoadField::None,
            },
            rotation_load: self.loads.rotation_load.map(mat3),
        }
    }

    /// Solver options from the `[solver]` section.
    pub fn solve_options(&self) -> Result<SolveOptions<f64>> {
        let s = &self.solver;
        let optimizer = match s.optimizer.as_str() {
            "lbfgs" => Optimizer::LBfgs { memory: s.memory },
            "gradient-descent" => Optimizer::GradientDescent,
            other => {
                return Err(ShellError::Config(format!(
                    "unknown optimizer '{other}' (expected lbfgs or gradient-descent)"
                )))
            }
        };
        Ok(SolveOptions {
            max_iter: s.max_iter,
            grad_tol: s.grad_tol,
            optimizer,
            multi_start: s.multi_start,
            perturbation: s.perturbation,
            seed: s.seed,
            initial: None,
        })
    }

    /// Builds the full validated problem. `strict` gates the material
    /// positivity validation.
    pub fn build_problem(&self, strict: bool) -> Result<ShellProblem<f64>> {
        let surface = self.build_surface()?;
        let material = self.build_material()?;
        let boundary = self.build_boundary()?;
        let loads = self.build_loads();
        ShellProblem::new(
            surface,
            material,
            (self.grid.n1, self.grid.n2),
            self.material.thickness,
            boundary,
            loads,
            ProblemOptions {
                strict,
                ..ProblemOptions::default()
            },
        )
    }
}

fn require<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| ShellError::Config(format!("missing required key '{key}'")))
}

fn mat2(rows: [[f64; 2]; 2]) -> Mat2<f64> {
    Mat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
}

fn mat3(rows: [[f64; 3]; 3]) -> Mat3<f64> {
    Mat3::from_fn(|i, j| rows[i][j])
}

fn mat4(rows: [[f64; 4]; 4]) -> Mat4<f64> {
    Mat4::from_fn(|i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_PLATE: &str = r#"
        [surface]
        chart = "plane"
        domain = { x1 = [0.0, 1.0], x2 = [0.0, 1.0] }

        [grid]
        n1 = 5
        n2 = 5

        [material]
        family = "isotropic-simple"
        young = 1.0
        poisson = 0.3
        thickness = 0.1

        [boundary.left]
        kind = "clamped"
    "#;

    #[test]
    fn minimal_plate_parses_and_builds() {
        let config = parse_config_str(MINIMAL_PLATE).unwrap();
        let problem = config.build_problem(true).unwrap();
        assert_eq!(problem.grid.n1, 5);
        assert!(problem.material_report.pass);
    }

    #[test]
    fn invalid_poisson_ratio_names_the_condition() {
        let text = MINIMAL_PLATE.replace("poisson = 0.3", "poisson = 0.6");
        let config = parse_config_str(&text).unwrap();
        let err = config.build_problem(true).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nu < 1/2"), "got: {msg}");
        // lenient mode lets exploration proceed
        assert!(config.build_problem(false).is_ok());
    }

    #[test]
    fn empty_dirichlet_set_rejected() {
        let text = MINIMAL_PLATE.replace("kind = \"clamped\"", "kind = \"free\"");
        let config = parse_config_str(&text).unwrap();
        let err = config.build_problem(true).unwrap_err();
        assert!(err.to_string().contains("nonempty"), "got: {err}");
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let text = format!("{MINIMAL_PLATE}\n[solver]\nmax_iters = 3\n");
        let err = parse_config_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("max_iters"), "got: {msg}");
        assert!(msg.contains("line"), "expected a line-anchored diagnostic, got: {msg}");
    }

    #[test]
    fn family_foreign_keys_rejected() {
        let text = MINIMAL_PLATE.replace(
            "thickness = 0.1",
            "thickness = 0.1\nalpha = [1.0, 1.0, 2.0, 1.0]",
        );
        let config = parse_config_str(&text).unwrap();
        assert!(matches!(
            config.build_material(),
            Err(ShellError::Config(_))
        ));
    }

    #[test]
    fn cylinder_and_graph_charts_build() {
        let text = r#"
            [surface]
            chart = "cylinder"
            radius = 2.0
            domain = { x1 = [0.0, 3.0], x2 = [0.0, 1.0] }
            derivatives = "central-difference"

            [grid]
            n1 = 9
            n2 = 9

            [material]
            family = "isotropic-general"
            thickness = 0.05
            alpha = [1.0, 1.0, 2.0, 1.0]
            beta = [0.1, 0.1, 0.2, 0.1]

            [boundary.left]
            kind = "clamped"
            [boundary.right]
            kind = "free"
            traction = [0.0, 0.0, 0.01]
        "#;
        let config = parse_config_str(text).unwrap();
        let problem = config.build_problem(true).unwrap();
        assert_eq!(problem.material.family_name(), "isotropic-general");
    }
}

//! Discretized total potential energy and its minimization over the
//! translation and rotation fields with mixed boundary conditions.

pub(crate) mod assembly;
mod lbfgs;
#[cfg(test)]
mod tests;

use crate::constitutive::{MaterialModel, PositivityReport};
use crate::error::{Result, ShellError};
use crate::geometry::{Edge, Grid, RegularityReport, SurfaceGeometry};
use crate::kinematics::{interp, ReferenceConfiguration, ShellConfiguration};
use crate::linalg::{Mat3, UnitQuat, Vec3};
use crate::num::{real, to_f64, Real};

use assembly::{assemble, BoundarySegment, QuadPoint};

/// Kind of condition applied along one named edge of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Natural boundary; may carry a traction and a rotation load.
    Free,
    /// Position and rotation prescribed.
    Clamped,
    /// Position prescribed, rotation free (relaxed admissible set).
    Pinned,
}

/// Rigid motion applied to the reference data of an edge.
#[derive(Debug, Clone, Copy)]
pub struct RigidMotion<T: Real> {
    pub rotation: UnitQuat<T>,
    pub translation: Vec3<T>,
}

/// Position data affine in the surface coordinates:
/// `y*(x1, x2) = origin + d1 x1 + d2 x2`.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap<T: Real> {
    pub origin: Vec3<T>,
    pub d1: Vec3<T>,
    pub d2: Vec3<T>,
}

impl<T: Real> AffineMap<T> {
    pub fn eval(&self, x: [T; 2]) -> Vec3<T> {
        self.origin + self.d1 * x[0] + self.d2 * x[1]
    }
}

/// Condition on one edge. Prescribed data default to the reference values;
/// `motion` transforms them rigidly, `y_affine`/`rotation` override them.
#[derive(Debug, Clone)]
pub struct EdgeCondition<T: Real> {
    pub kind: EdgeKind,
    pub motion: Option<RigidMotion<T>>,
    pub y_affine: Option<AffineMap<T>>,
    pub rotation: Option<UnitQuat<T>>,
    /// Boundary force density (per unit reference boundary length).
    pub traction: Option<Vec3<T>>,
    /// Boundary rotation load matrix.
    pub rotation_load: Option<Mat3<T>>,
}

impl<T: Real> EdgeCondition<T> {
    pub fn free() -> Self {
        EdgeCondition {
            kind: EdgeKind::Free,
            motion: None,
            y_affine: None,
            rotation: None,
            traction: None,
            rotation_load: None,
        }
    }

    pub fn clamped() -> Self {
        EdgeCondition {
            kind: EdgeKind::Clamped,
            ..EdgeCondition::free()
        }
    }

    pub fn pinned() -> Self {
        EdgeCondition {
            kind: EdgeKind::Pinned,
            ..EdgeCondition::free()
        }
    }
}

/// Conditions on the four named edges.
#[derive(Debug, Clone)]
pub struct BoundarySpec<T: Real> {
    pub left: EdgeCondition<T>,
    pub right: EdgeCondition<T>,
    pub bottom: EdgeCondition<T>,
    pub top: EdgeCondition<T>,
}

impl<T: Real> BoundarySpec<T> {
    pub fn all_clamped() -> Self {
        BoundarySpec {
            left: EdgeCondition::clamped(),
            right: EdgeCondition::clamped(),
            bottom: EdgeCondition::clamped(),
            top: EdgeCondition::clamped(),
        }
    }

    pub fn edge(&self, e: Edge) -> &EdgeCondition<T> {
        match e {
            Edge::Left => &self.left,
            Edge::Right => &self.right,
            Edge::Bottom => &self.bottom,
            Edge::Top => &self.top,
        }
    }
}

/// Surface force density: absent, constant, or per node.
#[derive(Debug, Clone)]
pub enum LoadField<T: Real> {
    None,
    Constant(Vec3<T>),
    PerNode(Vec<Vec3<T>>),
}

/// Surface loads entering the load potential.
#[derive(Debug, Clone)]
pub struct Loads<T: Real> {
    pub force: LoadField<T>,
    /// Dead rotation load: the potential contains `<C, R>` integrated over
    /// the reference surface.
    pub rotation_load: Option<Mat3<T>>,
}

impl<T: Real> Loads<T> {
    pub fn none() -> Self {
        Loads {
            force: LoadField::None,
            rotation_load: None,
        }
    }
}

/// Per-node Dirichlet data after resolving the edge conditions.
#[derive(Debug, Clone)]
pub struct NodeConstraint<T: Real> {
    pub y: Option<Vec3<T>>,
    pub r: Option<UnitQuat<T>>,
}

impl<T: Real> Default for NodeConstraint<T> {
    fn default() -> Self {
        NodeConstraint { y: None, r: None }
    }
}

/// Problem construction switches.
#[derive(Debug, Clone, Copy)]
pub struct ProblemOptions<T: Real> {
    /// Reject materials that fail positivity validation.
    pub strict: bool,
    /// Threshold on the minimal area density `a0`.
    pub regularity_threshold: T,
}

impl<T: Real> Default for ProblemOptions<T> {
    fn default() -> Self {
        ProblemOptions {
            strict: true,
            regularity_threshold: real::<T>(1e-8),
        }
    }
}

/// A fully validated minimization problem on a structured grid.
#[derive(Debug, Clone)]
pub struct ShellProblem<T: Real> {
    pub surface: SurfaceGeometry<T>,
    pub material: MaterialModel<T>,
    pub grid: Grid<T>,
    pub thickness: T,
    pub loads: Loads<T>,
    pub constraints: Vec<NodeConstraint<T>>,
    pub material_report: PositivityReport<T>,
    pub regularity: RegularityReport<T>,
    pub(crate) reference: ReferenceConfiguration<T>,
    pub(crate) quad: Vec<QuadPoint<T>>,
    pub(crate) segments: Vec<BoundarySegment<T>>,
}

impl<T: Real> ShellProblem<T> {
    pub fn new(
        surface: SurfaceGeometry<T>,
        material: MaterialModel<T>,
        resolution: (usize, usize),
        thickness: T,
        boundary: BoundarySpec<T>,
        loads: Loads<T>,
        options: ProblemOptions<T>,
    ) -> Result<Self> {
        if thickness <= T::zero() {
            return Err(ShellError::Validation("thickness must be positive".into()));
        }
        let grid = Grid::new(resolution.0, resolution.1, *surface.domain())?;

        let material_report = material.validate();
        if options.strict && !material_report.pass {
            return Err(ShellError::Validation(format!(
                "{} material fails positivity: {}",
                material.family_name(),
                material_report.failed_conditions.join("; ")
            )));
        }

        let regularity = surface.regularity_report(&grid, options.regularity_threshold)?;
        if !regularity.pass {
            return Err(ShellError::Validation(format!(
                "regularity failed: a0 = {:.3e} not above threshold {:.3e}",
                to_f64(regularity.a0),
                to_f64(regularity.threshold)
            )));
        }
        let reference = ReferenceConfiguration::new(&surface, &grid)?;
        let discrete_regularity = reference.regularity_report(options.regularity_threshold)?;
        if !discrete_regularity.pass {
            return Err(ShellError::Validation(
                "regularity failed on the interpolated reference surface".into(),
            ));
        }

        if let LoadField::PerNode(f) = &loads.force {
            if f.len() != grid.node_count() {
                return Err(ShellError::Validation(format!(
                    "per-node force table has {} entries for {} nodes",
                    f.len(),
                    grid.node_count()
                )));
            }
        }

        let constraints = resolve_constraints(&grid, &boundary, &reference)?;
        if !constraints.iter().any(|c| c.y.is_some()) {
            return Err(ShellError::Validation(
                "the position-constrained boundary part must be nonempty".into(),
            ));
        }

        let quad = build_quadrature(&grid, &reference)?;
        let segments = build_segments(&grid, &boundary, &reference);

        Ok(ShellProblem {
            surface,
            material,
            grid,
            thickness,
            loads,
            constraints,
            material_report,
            regularity,
            reference,
            quad,
            segments,
        })
    }

    pub fn reference(&self) -> &ReferenceConfiguration<T> {
        &self.reference
    }

    /// Initial guess: reference configuration with the prescribed data
    /// imposed on the constrained nodes.
    pub fn initial_configuration(&self) -> ShellConfiguration<T> {
        let mut config = self.reference.nodes.clone();
        self.apply_constraints(&mut config);
        config
    }

    /// Overwrites constrained nodes with their prescribed data.
    pub fn apply_constraints(&self, config: &mut ShellConfiguration<T>) {
        for (n, c) in self.constraints.iter().enumerate() {
            if let Some(y) = c.y {
                config.y[n] = y;
            }
            if let Some(r) = c.r {
                config.q[n] = r;
            }
        }
    }

    fn check_config(&self, config: &ShellConfiguration<T>) -> Result<()> {
        if config.grid.n1 != self.grid.n1
            || config.grid.n2 != self.grid.n2
            || config.grid.domain != self.grid.domain
        {
            return Err(ShellError::GridMismatch {
                expected: (self.grid.n1, self.grid.n2),
                got: (config.grid.n1, config.grid.n2),
            });
        }
        Ok(())
    }

    pub(crate) fn force_at(&self, shape: &interp::Shape<T>, nodes: &[usize; 4]) -> Vec3<T> {
        match &self.loads.force {
            LoadField::None => Vec3::zeros(),
            LoadField::Constant(f) => *f,
            LoadField::PerNode(table) => {
                let mut f = Vec3::zeros();
                for m in 0..4 {
                    f += table[nodes[m]] * shape.n[m];
                }
                f
            }
        }
    }
}

fn resolve_constraints<T: Real>(
    grid: &Grid<T>,
    boundary: &BoundarySpec<T>,
    reference: &ReferenceConfiguration<T>,
) -> Result<Vec<NodeConstraint<T>>> {
    let mut constraints: Vec<NodeConstraint<T>> = vec![NodeConstraint::default(); grid.node_count()];
    let mut strength = vec![0u8; grid.node_count()];
    for edge in Edge::ALL {
        let cond = boundary.edge(edge);
        let rank = match cond.kind {
            EdgeKind::Free => 0,
            EdgeKind::Pinned => 1,
            EdgeKind::Clamped => 2,
        };
        if rank == 0 {
            continue;
        }
        for (i, j) in grid.edge_nodes(edge) {
            let n = grid.index(i, j);
            // at corners the stronger condition wins; equal ranks are
            // overwritten in edge order (left, right, bottom, top)
            if rank < strength[n] {
                continue;
            }
            strength[n] = rank;
            let x = grid.node(i, j);
            let y0 = reference.nodes.y[n];
            let q0 = reference.nodes.q[n];
            let y_star = if let Some(m) = &cond.motion {
                m.rotation.transform_vector(&y0) + m.translation
            } else if let Some(a) = &cond.y_affine {
                a.eval(x)
            } else {
                y0
            };
            constraints[n].y = Some(y_star);
            constraints[n].r = match cond.kind {
                EdgeKind::Pinned => None,
                _ => Some(if let Some(m) = &cond.motion {
                    m.rotation * q0
                } else if let Some(r) = &cond.rotation {
                    *r
                } else {
                    q0
                }),
            };
        }
    }
    Ok(constraints)
}

fn build_quadrature<T: Real>(
    grid: &Grid<T>,
    reference: &ReferenceConfiguration<T>,
) -> Result<Vec<QuadPoint<T>>> {
    let (h1, h2) = grid.spacing();
    let weight = h1 * h2 * real::<T>(0.25);
    let half = real::<T>(0.5);
    let g = half / real::<T>(3.0).sqrt();
    let locs = [
        (half - g, half - g),
        (half + g, half - g),
        (half - g, half + g),
        (half + g, half + g),
    ];
    let mut quad = Vec::with_capacity((grid.n1 - 1) * (grid.n2 - 1) * 4);
    for cj in 0..grid.n2 - 1 {
        for ci in 0..grid.n1 - 1 {
            for (s, t) in locs {
                let rp = reference.eval(ci, cj, s, t)?;
                quad.push(QuadPoint {
                    cell: (ci, cj),
                    local: (s, t),
                    nodes: interp::cell_nodes(grid, ci, cj),
                    shape: interp::shape(grid, s, t),
                    wa: weight * rp.area,
                    rp,
                });
            }
        }
    }
    Ok(quad)
}

fn build_segments<T: Real>(
    grid: &Grid<T>,
    boundary: &BoundarySpec<T>,
    reference: &ReferenceConfiguration<T>,
) -> Vec<BoundarySegment<T>> {
    let mut segments = Vec::new();
    for edge in Edge::ALL {
        let cond = boundary.edge(edge);
        if cond.kind != EdgeKind::Free {
            continue;
        }
        if cond.traction.is_none() && cond.rotation_load.is_none() {
            continue;
        }
        let nodes = grid.edge_nodes(edge);
        for pair in nodes.windows(2) {
            let a = grid.index(pair[0].0, pair[0].1);
            let b = grid.index(pair[1].0, pair[1].1);
            let length = (reference.nodes.y[b] - reference.nodes.y[a]).norm();
            segments.push(BoundarySegment {
                nodes: [a, b],
                length,
                traction: cond.traction,
                rotation_load: cond.rotation_load,
            });
        }
    }
    segments
}

/// Gauss-quadrature approximation of the strain energy over the surface.
pub fn total_strain_energy<T: Real>(
    problem: &ShellProblem<T>,
    config: &ShellConfiguration<T>,
) -> Result<T> {
    problem.check_config(config)?;
    Ok(assemble(problem, config, false)?.strain_energy)
}

/// Load potential: surface force work, surface rotation load, boundary
/// force work, boundary rotation load.
pub fn load_potential<T: Real>(
    problem: &ShellProblem<T>,
    config: &ShellConfiguration<T>,
) -> Result<T> {
    problem.check_config(config)?;
    Ok(assemble(problem, config, false)?.load_potential())
}

/// Total functional `I = strain energy - load potential`.
pub fn total_functional<T: Real>(
    problem: &ShellProblem<T>,
    config: &ShellConfiguration<T>,
) -> Result<T> {
    problem.check_config(config)?;
    Ok(assemble(problem, config, false)?.functional())
}

/// Gradient of the functional with Dirichlet entries zeroed: per-node
/// translation gradient and right-trivialized rotation gradient.
pub fn gradient<T: Real>(
    problem: &ShellProblem<T>,
    config: &ShellConfiguration<T>,
) -> Result<(Vec<Vec3<T>>, Vec<Vec3<T>>)> {
    let (mut gy, mut gr) = gradient_raw(problem, config)?;
    for (n, c) in problem.constraints.iter().enumerate() {
        if c.y.is_some() {
            gy[n] = Vec3::zeros();
        }
        if c.r.is_some() {
            gr[n] = Vec3::zeros();
        }
    }
    Ok((gy, gr))
}

/// Gradient without the Dirichlet projection.
pub fn gradient_raw<T: Real>(
    problem: &ShellProblem<T>,
    config: &ShellConfiguration<T>,
) -> Result<(Vec<Vec3<T>>, Vec<Vec3<T>>)> {
    problem.check_config(config)?;
    let asm = assemble(problem, config, true)?;
    Ok((asm.grad_y, asm.grad_r))
}

pub use lbfgs::{minimize, MinimizeResult, Optimizer, SolveOptions};

/// Energy decomposition and projected gradient norm of a configuration.
#[derive(Debug, Clone, Copy)]
pub struct OptimalityReport<T: Real> {
    pub grad_norm: T,
    pub energy: T,
    pub strain_energy: T,
    pub load_potential: T,
    pub load_surface_force: T,
    pub load_surface_rotation: T,
    pub load_boundary_force: T,
    pub load_boundary_rotation: T,
}

/// Recomputes the projected gradient norm and the energy decomposition.
pub fn optimality_report<T: Real>(
    problem: &ShellProblem<T>,
    config: &ShellConfiguration<T>,
) -> Result<OptimalityReport<T>> {
    problem.check_config(config)?;
    let asm = assemble(problem, config, true)?;
    let mut sq = T::zero();
    for (n, c) in problem.constraints.iter().enumerate() {
        if c.y.is_none() {
            sq += asm.grad_y[n].norm_squared();
        }
        if c.r.is_none() {
            sq += asm.grad_r[n].norm_squared();
        }
    }
    Ok(OptimalityReport {
        grad_norm: sq.sqrt(),
        energy: asm.functional(),
        strain_energy: asm.strain_energy,
        load_potential: asm.load_potential(),
        load_surface_force: asm.load_surface_force,
        load_surface_rotation: asm.load_surface_rotation,
        load_boundary_force: asm.load_boundary_force,
        load_boundary_rotation: asm.load_boundary_rotation,
    })
}

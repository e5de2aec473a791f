//! Result bundles and field export/import.
//!
//! Numbers are serialized with 17 significant digits, which round-trips
//! `f64` exactly, so re-importing an exported configuration reproduces its
//! energies. Exports are byte-stable for identical inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Result, ShellError};
use crate::geometry::Grid;
use crate::kinematics::{
    elastic_strain, reconstruct_deformed, ReferenceConfiguration, ShellConfiguration,
};
use crate::linalg::{UnitQuat, Vec3};
use crate::solver::{optimality_report, MinimizeResult, ShellProblem};

/// Exact CSV header of the nodal field file.
pub const FIELDS_HEADER: &str = "i,j,x1,x2,y1,y2,y3,q0,q1,q2,q3,u1,u2,u3";

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Per-quadrature-point strain record.
#[derive(Debug, Clone, Serialize)]
pub struct StrainRecord {
    pub cell: (usize, usize),
    pub gauss_index: usize,
    pub x1: f64,
    pub x2: f64,
    pub norm_e: f64,
    pub norm_k: f64,
    /// Director-frame components `(11, 12, 21, 22, 31, 32)`.
    pub e_frame: [f64; 6],
    pub k_frame: [f64; 6],
}

/// Energy summary of a minimization run.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub final_energy: f64,
    pub strain_energy: f64,
    pub load_potential: f64,
    pub load_surface_force: f64,
    pub load_surface_rotation: f64,
    pub load_boundary_force: f64,
    pub load_boundary_rotation: f64,
    pub optimality_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nodal fields, quadrature strain data, energy report, and optional
/// through-thickness reconstruction of a result.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub grid: Grid<f64>,
    pub config: ShellConfiguration<f64>,
    /// Displacements `u = y - y0`.
    pub u: Vec<Vec3<f64>>,
    /// Director triads `d_i = R e_i` per node.
    pub directors: Vec<[Vec3<f64>; 3]>,
    pub strains: Vec<StrainRecord>,
    pub energy: EnergyReport,
    /// Reconstructed 3D points per thickness layer, when requested.
    pub reconstruction: Option<Vec<ReconstructionLayer>>,
}

#[derive(Debug, Clone)]
pub struct ReconstructionLayer {
    pub x3: f64,
    pub points: Vec<Vec3<f64>>,
}

impl ResultBundle {
    /// Assembles the bundle from a finished run; every value is checked to
    /// be finite.
    pub fn new(
        problem: &ShellProblem<f64>,
        result: &MinimizeResult<f64>,
        reconstruct_layers: Option<usize>,
    ) -> Result<Self> {
        let config = result.config.clone();
        let reference = problem.reference();
        let n = config.grid.node_count();
        let mut u = Vec::with_capacity(n);
        let mut directors = Vec::with_capacity(n);
        for k in 0..n {
            u.push(config.y[k] - reference.nodes.y[k]);
            let r = config.q[k].to_rotation_matrix().into_inner();
            directors.push([
                r.column(0).into_owned(),
                r.column(1).into_owned(),
                r.column(2).into_owned(),
            ]);
        }

        let mut strains = Vec::new();
        let (h1, h2) = config.grid.spacing();
        let g = 0.5 / 3.0_f64.sqrt();
        let locs = [
            (0.5 - g, 0.5 - g),
            (0.5 + g, 0.5 - g),
            (0.5 - g, 0.5 + g),
            (0.5 + g, 0.5 + g),
        ];
        for cj in 0..config.grid.n2 - 1 {
            for ci in 0..config.grid.n1 - 1 {
                let base = config.grid.node(ci, cj);
                for (gi, (s, t)) in locs.iter().enumerate() {
                    let x = [base[0] + s * h1, base[1] + t * h2];
                    let st = elastic_strain(&config, reference, x)?;
                    strains.push(StrainRecord {
                        cell: (ci, cj),
                        gauss_index: gi,
                        x1: x[0],
                        x2: x[1],
                        norm_e: st.e.norm(),
                        norm_k: st.k.norm(),
                        e_frame: frame_components(&st.e_frame),
                        k_frame: frame_components(&st.k_frame),
                    });
                }
            }
        }

        let report = optimality_report(problem, &config)?;
        let energy = EnergyReport {
            final_energy: result.final_energy,
            strain_energy: result.final_strain_energy,
            load_potential: result.final_load_potential,
            load_surface_force: report.load_surface_force,
            load_surface_rotation: report.load_surface_rotation,
            load_boundary_force: report.load_boundary_force,
            load_boundary_rotation: report.load_boundary_rotation,
            optimality_residual: result.optimality_residual,
            iterations: result.iterations,
            converged: result.converged,
        };

        let reconstruction = match reconstruct_layers {
            Some(layers) => Some(build_reconstruction(problem, &config, layers)?),
            None => None,
        };

        let bundle = ResultBundle {
            grid: config.grid.clone(),
            config,
            u,
            directors,
            strains,
            energy,
            reconstruction,
        };
        bundle.check_finite()?;
        Ok(bundle)
    }

    fn check_finite(&self) -> Result<()> {
        let finite3 = |v: &Vec3<f64>| v.iter().all(|x| x.is_finite());
        let all = self.config.y.iter().all(finite3)
            && self.u.iter().all(finite3)
            && self.config.q.iter().all(|q| q.coords.iter().all(|x| x.is_finite()))
            && self.strains.iter().all(|s| s.norm_e.is_finite() && s.norm_k.is_finite())
            && self.energy.final_energy.is_finite();
        if all {
            Ok(())
        } else {
            Err(ShellError::Validation("result bundle contains non-finite values".into()))
        }
    }
}

fn frame_components(m: &crate::linalg::Mat3<f64>) -> [f64; 6] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)], m[(2, 0)], m[(2, 1)]]
}

fn build_reconstruction(
    problem: &ShellProblem<f64>,
    config: &ShellConfiguration<f64>,
    layers: usize,
) -> Result<Vec<ReconstructionLayer>> {
    let layers = layers.max(2);
    let h = problem.thickness;
    let grid = &config.grid;
    let reference = problem.reference();
    let mut out = Vec::with_capacity(layers);
    for l in 0..layers {
        let x3 = -h / 2.0 + h * (l as f64) / ((layers - 1) as f64);
        let mut points = Vec::with_capacity(grid.node_count());
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                points.push(reconstruct_deformed(config, reference, grid.node(i, j), x3, h)?);
            }
        }
        out.push(ReconstructionLayer { x3, points });
    }
    Ok(out)
}

/// Writes the nodal fields as CSV, one row per node with the `x1` index
/// running fastest.
pub fn export_fields_csv(
    path: &Path,
    config: &ShellConfiguration<f64>,
    reference: &ReferenceConfiguration<f64>,
) -> Result<()> {
    let grid = &config.grid;
    let mut text = String::new();
    text.push_str(FIELDS_HEADER);
    text.push('\n');
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let n = grid.index(i, j);
            let x = grid.node(i, j);
            let y = config.y[n];
            let q = config.q[n];
            let u = y - reference.nodes.y[n];
            let _ = writeln!(
                text,
                "{i},{j},{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt(x[0]),
                fmt(x[1]),
                fmt(y[0]),
                fmt(y[1]),
                fmt(y[2]),
                fmt(q.w),
                fmt(q.i),
                fmt(q.j),
                fmt(q.k),
                fmt(u[0]),
                fmt(u[1]),
                fmt(u[2]),
            );
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Reads a nodal field file back into a configuration on the given grid.
pub fn import_fields_csv(path: &Path, grid: &Grid<f64>) -> Result<ShellConfiguration<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| ShellError::Import(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().trim();
    if header != FIELDS_HEADER {
        return Err(ShellError::Import(format!(
            "unexpected header '{header}', expected '{FIELDS_HEADER}'"
        )));
    }
    let mut y = vec![Vec3::zeros(); grid.node_count()];
    let mut q = vec![UnitQuat::identity(); grid.node_count()];
    let mut seen = vec![false; grid.node_count()];
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 14 {
            return Err(ShellError::Import(format!(
                "line {}: expected 14 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_usize = |s: &str| {
            s.trim().parse::<usize>().map_err(|e| {
                ShellError::Import(format!("line {}: bad index '{s}': {e}", lineno + 2))
            })
        };
        let parse_f64 = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| {
                ShellError::Import(format!("line {}: bad number '{s}': {e}", lineno + 2))
            })
        };
        let i = parse_usize(fields[0])?;
        let j = parse_usize(fields[1])?;
        if i >= grid.n1 || j >= grid.n2 {
            return Err(ShellError::Import(format!(
                "line {}: node ({i}, {j}) outside a {}x{} grid",
                lineno + 2,
                grid.n1,
                grid.n2
            )));
        }
        let n = grid.index(i, j);
        y[n] = Vec3::new(parse_f64(fields[4])?, parse_f64(fields[5])?, parse_f64(fields[6])?);
        let quat = nalgebra::Quaternion::new(
            parse_f64(fields[7])?,
            parse_f64(fields[8])?,
            parse_f64(fields[9])?,
            parse_f64(fields[10])?,
        );
        if (quat.norm() - 1.0).abs() > 1e-6 {
            return Err(ShellError::Import(format!(
                "line {}: quaternion norm {} too far from one",
                lineno + 2,
                quat.norm()
            )));
        }
        q[n] = UnitQuat::new_normalize(quat);
        seen[n] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(ShellError::Import(format!(
            "node with flat index {missing} missing from the field file"
        )));
    }
    Ok(ShellConfiguration {
        grid: grid.clone(),
        y,
        q,
    })
}

/// Writes the deformed configuration as a legacy ASCII structured-grid VTK
/// file with point vectors for the displacement and the three directors and
/// cell scalars for the average strain/curvature norms.
pub fn export_vtk(path: &Path, bundle: &ResultBundle) -> Result<()> {
    let grid = &bundle.grid;
    let n = grid.node_count();
    let mut text = String::new();
    text.push_str("# vtk DataFile Version 3.0\n");
    text.push_str("resultant shell fields\n");
    text.push_str("ASCII\n");
    text.push_str("DATASET STRUCTURED_GRID\n");
    let _ = writeln!(text, "DIMENSIONS {} {} 1", grid.n1, grid.n2);
    let _ = writeln!(text, "POINTS {n} double");
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let y = bundle.config.y[grid.index(i, j)];
            let _ = writeln!(text, "{} {} {}", fmt(y[0]), fmt(y[1]), fmt(y[2]));
        }
    }
    let _ = writeln!(text, "POINT_DATA {n}");
    let vector_field = |text: &mut String, name: &str, get: &dyn Fn(usize) -> Vec3<f64>| {
        let _ = writeln!(text, "VECTORS {name} double");
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                let v = get(grid.index(i, j));
                let _ = writeln!(text, "{} {} {}", fmt(v[0]), fmt(v[1]), fmt(v[2]));
            }
        }
    };
    vector_field(&mut text, "displacement", &|k| bundle.u[k]);
    vector_field(&mut text, "director_1", &|k| bundle.directors[k][0]);
    vector_field(&mut text, "director_2", &|k| bundle.directors[k][1]);
    vector_field(&mut text, "director_3", &|k| bundle.directors[k][2]);

    let (c1, c2) = grid.cell_count();
    let _ = writeln!(text, "CELL_DATA {}", c1 * c2);
    for (name, pick) in [
        ("strain_norm", 0usize),
        ("curvature_norm", 1usize),
    ] {
        let _ = writeln!(text, "SCALARS {name} double 1");
        text.push_str("LOOKUP_TABLE default\n");
        for cj in 0..c2 {
            for ci in 0..c1 {
                let mut sum = 0.0;
                for rec in bundle
                    .strains
                    .iter()
                    .filter(|r| r.cell == (ci, cj))
                {
                    sum += if pick == 0 { rec.norm_e } else { rec.norm_k };
                }
                let _ = writeln!(text, "{}", fmt(sum / 4.0));
            }
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Writes the per-quadrature-point strain records as CSV.
pub fn export_strains_csv(path: &Path, bundle: &ResultBundle) -> Result<()> {
    let mut text = String::from(
        "cell_i,cell_j,gauss,x1,x2,norm_e,norm_k,e11,e12,e21,e22,e31,e32,k11,k12,k21,k22,k31,k32\n",
    );
    for r in &bundle.strains {
        let _ = write!(
            text,
            "{},{},{},{},{},{},{}",
            r.cell.0,
            r.cell.1,
            r.gauss_index,
            fmt(r.x1),
            fmt(r.x2),
            fmt(r.norm_e),
            fmt(r.norm_k)
        );
        for v in r.e_frame.iter().chain(r.k_frame.iter()) {
            let _ = write!(text, ",{}", fmt(*v));
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Writes the reconstructed through-thickness point cloud as CSV.
pub fn export_reconstruction_csv(path: &Path, bundle: &ResultBundle) -> Result<()> {
    let layers = bundle.reconstruction.as_ref().ok_or_else(|| {
        ShellError::Validation("bundle carries no reconstruction layers".into())
    })?;
    let grid = &bundle.grid;
    let mut text = String::from("i,j,layer,x1,x2,x3,phi1,phi2,phi3\n");
    for (l, layer) in layers.iter().enumerate() {
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                let x = grid.node(i, j);
                let p = layer.points[grid.index(i, j)];
                let _ = writeln!(
                    text,
                    "{i},{j},{l},{},{},{},{},{},{}",
                    fmt(x[0]),
                    fmt(x[1]),
                    fmt(layer.x3),
                    fmt(p[0]),
                    fmt(p[1]),
                    fmt(p[2])
                );
            }
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Writes the reconstructed volume as a legacy VTK structured grid with one
/// layer of points per thickness sample.
pub fn export_reconstruction_vtk(path: &Path, bundle: &ResultBundle) -> Result<()> {
    let layers = bundle.reconstruction.as_ref().ok_or_else(|| {
        ShellError::Validation("bundle carries no reconstruction layers".into())
    })?;
    let grid = &bundle.grid;
    let total = grid.node_count() * layers.len();
    let mut text = String::new();
    text.push_str("# vtk DataFile Version 3.0\n");
    text.push_str("reconstructed shell volume\n");
    text.push_str("ASCII\n");
    text.push_str("DATASET STRUCTURED_GRID\n");
    let _ = writeln!(text, "DIMENSIONS {} {} {}", grid.n1, grid.n2, layers.len());
    let _ = writeln!(text, "POINTS {total} double");
    for layer in layers {
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                let p = layer.points[grid.index(i, j)];
                let _ = writeln!(text, "{} {} {}", fmt(p[0]), fmt(p[1]), fmt(p[2]));
            }
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Serializes any report as pretty JSON.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| ShellError::Io(std::io::Error::other(e)))?;
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;
    use crate::solver::{minimize, total_functional, SolveOptions};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    const PLATE: &str = r#"
        [surface]
        chart = "plane"
        domain = { x1 = [0.0, 1.0], x2 = [0.0, 1.0] }

        [grid]
        n1 = 4
        n2 = 4

        [material]
        family = "isotropic-simple"
        young = 1.0
        poisson = 0.3
        thickness = 0.1

        [boundary.left]
        kind = "clamped"

        [loads]
        force = [0.0, 0.0, -0.001]
    "#;

    #[test]
    fn csv_round_trip_preserves_energy() {
        let config = parse_config_str(PLATE).unwrap();
        let problem = config.build_problem(true).unwrap();
        let mut rng = StdRng::seed_from_u64(4);
        let state = problem.initial_configuration().perturbed(&mut rng, 0.05, 0.1);
        let e0 = total_functional(&problem, &state).unwrap();

        let dir = std::env::temp_dir().join(format!("shellmin-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("fields.csv");
        export_fields_csv(&path, &state, problem.reference()).unwrap();
        let back = import_fields_csv(&path, &problem.grid).unwrap();
        let e1 = total_functional(&problem, &back).unwrap();
        assert!((e0 - e1).abs() <= 1e-12 * (1.0 + e0.abs()), "{e0} vs {e1}");
        // exported displacements of the undeformed state are zero
        let ref_path = dir.join("reference.csv");
        export_fields_csv(&ref_path, &problem.reference().nodes, problem.reference()).unwrap();
        let text = fs::read_to_string(&ref_path).unwrap();
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            for u in &fields[11..14] {
                assert_eq!(u.parse::<f64>().unwrap(), 0.0);
            }
        }
        // 4x4 grid: exactly 16 data rows
        assert_eq!(text.lines().count(), 17);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn exports_are_byte_stable() {
        let config = parse_config_str(PLATE).unwrap();
        let problem = config.build_problem(true).unwrap();
        let options = SolveOptions {
            max_iter: 40,
            ..config.solve_options().unwrap()
        };
        let dir = std::env::temp_dir().join(format!("shellmin-io2-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let mut outputs = Vec::new();
        for run in 0..2 {
            let result = minimize(&problem, &options).unwrap();
            let bundle = ResultBundle::new(&problem, &result, Some(3)).unwrap();
            let fields = dir.join(format!("fields-{run}.csv"));
            let vtk = dir.join(format!("fields-{run}.vtk"));
            export_fields_csv(&fields, &result.config, problem.reference()).unwrap();
            export_vtk(&vtk, &bundle).unwrap();
            outputs.push((fs::read(&fields).unwrap(), fs::read(&vtk).unwrap()));
        }
        assert_eq!(outputs[0].0, outputs[1].0);
        assert_eq!(outputs[0].1, outputs[1].1);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn reconstruction_layers() {
        let config = parse_config_str(PLATE).unwrap();
        let problem = config.build_problem(true).unwrap();
        let result = minimize(
            &problem,
            &SolveOptions {
                max_iter: 0,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let bundle = ResultBundle::new(&problem, &result, Some(3)).unwrap();
        let layers = bundle.reconstruction.as_ref().unwrap();
        assert_eq!(layers.len(), 3);
        assert_eq!(layers[0].x3, -problem.thickness / 2.0);
        assert_eq!(layers[2].x3, problem.thickness / 2.0);
        // middle layer equals the nodal positions
        for (p, y) in layers[1].points.iter().zip(&bundle.config.y) {
            assert!((p - y).norm() <= 1e-14);
        }
    }

    #[test]
    fn import_rejects_malformed_files() {
        let dir = std::env::temp_dir().join(format!("shellmin-io3-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let grid = Grid::new(3, 3, crate::geometry::Domain::new([0.0, 1.0], [0.0, 1.0]).unwrap()).unwrap();
        let bad_header = dir.join("bad1.csv");
        fs::write(&bad_header, "i,j,x1\n").unwrap();
        assert!(matches!(
            import_fields_csv(&bad_header, &grid),
            Err(ShellError::Import(_))
        ));
        let missing = dir.join("bad2.csv");
        fs::write(&missing, format!("{FIELDS_HEADER}\n")).unwrap();
        assert!(matches!(
            import_fields_csv(&missing, &grid),
            Err(ShellError::Import(_))
        ));
        fs::remove_dir_all(&dir).ok();
    }
}

use super::*;
use crate::constitutive::{IsotropicGeneral, IsotropicSimple};
use crate::geometry::{Chart, DerivativeMode, Domain};
use crate::kinematics::ShellConfiguration;
use crate::solver::lbfgs::{minimize, SolveOptions};
use approx::assert_relative_eq;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::FRAC_PI_2;

fn cylinder_surface() -> SurfaceGeometry<f64> {
    SurfaceGeometry::new(
        Chart::Cylinder { radius: 1.0 },
        Domain::new([0.0, FRAC_PI_2], [0.0, 1.0]).unwrap(),
        DerivativeMode::Analytic,
    )
    .unwrap()
}

fn plane_surface() -> SurfaceGeometry<f64> {
    SurfaceGeometry::new(
        Chart::Plane,
        Domain::new([0.0, 1.0], [0.0, 1.0]).unwrap(),
        DerivativeMode::Analytic,
    )
    .unwrap()
}

fn simple_material() -> MaterialModel<f64> {
    MaterialModel::IsotropicSimple(IsotropicSimple::new(1.0, 0.3, 0.1))
}

/// Cylinder problem exercising every load path: surface force, surface
/// rotation load, boundary traction, boundary rotation load, mixed
/// clamped/pinned/free edges.
fn loaded_cylinder_problem(n: usize) -> ShellProblem<f64> {
    let mut boundary = BoundarySpec {
        left: EdgeCondition::clamped(),
        right: EdgeCondition::free(),
        bottom: EdgeCondition::pinned(),
        top: EdgeCondition::free(),
    };
    boundary.right.traction = Some(Vec3::new(0.002, -0.001, 0.003));
    boundary.right.rotation_load = Some(Mat3::new(
        0.001, 0.0, 0.002, -0.001, 0.0005, 0.0, 0.0, 0.0015, -0.002,
    ));
    boundary.top.traction = Some(Vec3::new(0.0, 0.001, 0.0005));
    let loads = Loads {
        force: LoadField::Constant(Vec3::new(0.001, 0.002, -0.005)),
        rotation_load: Some(Mat3::new(
            0.002, -0.001, 0.0, 0.001, 0.003, 0.0005, -0.002, 0.0, 0.001,
        )),
    };
    ShellProblem::new(
        cylinder_surface(),
        simple_material(),
        (n, n),
        0.1,
        boundary,
        loads,
        ProblemOptions::default(),
    )
    .unwrap()
}

fn fd_gradient(
    problem: &ShellProblem<f64>,
    config: &ShellConfiguration<f64>,
    h: f64,
) -> (Vec<Vec3<f64>>, Vec<Vec3<f64>>) {
    let n = config.grid.node_count();
    let mut gy = vec![Vec3::zeros(); n];
    let mut gr = vec![Vec3::zeros(); n];
    for node in 0..n {
        for k in 0..3 {
            let mut plus = config.clone();
            let mut minus = config.clone();
            plus.y[node][k] += h;
            minus.y[node][k] -= h;
            gy[node][k] = (total_functional(problem, &plus).unwrap()
                - total_functional(problem, &minus).unwrap())
                / (2.0 * h);
            let mut axis = Vec3::zeros();
            axis[k] = h;
            let mut plus = config.clone();
            let mut minus = config.clone();
            plus.q[node] = plus.q[node] * UnitQuat::from_scaled_axis(axis);
            minus.q[node] = minus.q[node] * UnitQuat::from_scaled_axis(-axis);
            gr[node][k] = (total_functional(problem, &plus).unwrap()
                - total_functional(problem, &minus).unwrap())
                / (2.0 * h);
        }
    }
    (gy, gr)
}

#[test]
fn gradient_matches_finite_differences() {
    let problem = loaded_cylinder_problem(5);
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..3 {
        let config = problem
            .initial_configuration()
            .perturbed(&mut rng, 0.05, 0.15);
        let (gy, gr) = gradient_raw(&problem, &config).unwrap();
        let (fy, fr) = fd_gradient(&problem, &config, 1e-6);
        let mut num = 0.0;
        let mut den = 0.0;
        for n in 0..config.grid.node_count() {
            num += (gy[n] - fy[n]).norm_squared() + (gr[n] - fr[n]).norm_squared();
            den += fy[n].norm_squared() + fr[n].norm_squared();
        }
        let rel = (num / den).sqrt();
        assert!(rel <= 1e-6, "gradient relative error {rel:.3e}");
    }
}

#[test]
fn gradient_vanishes_at_unloaded_reference() {
    let problem = ShellProblem::new(
        cylinder_surface(),
        simple_material(),
        (5, 5),
        0.1,
        BoundarySpec::all_clamped(),
        Loads::none(),
        ProblemOptions::default(),
    )
    .unwrap();
    let config = problem.initial_configuration();
    let (gy, gr) = gradient(&problem, &config).unwrap();
    let total: f64 = gy.iter().map(|v| v.norm()).sum::<f64>() + gr.iter().map(|v| v.norm()).sum::<f64>();
    assert!(total <= 1e-10, "gradient at the minimum: {total:.3e}");
}

#[test]
fn raw_translation_gradient_sums_to_zero() {
    // no surface/boundary forces: the functional is invariant under uniform
    // translations, so the raw translation gradient has zero resultant
    let problem = ShellProblem::new(
        cylinder_surface(),
        simple_material(),
        (5, 5),
        0.1,
        BoundarySpec::all_clamped(),
        Loads {
            force: LoadField::None,
            rotation_load: Some(Mat3::new(0.02, 0.0, 0.01, 0.0, -0.01, 0.0, 0.03, 0.0, 0.02)),
        },
        ProblemOptions::default(),
    )
    .unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    let config = problem
        .initial_configuration()
        .perturbed(&mut rng, 0.1, 0.2);
    let (gy, _) = gradient_raw(&problem, &config).unwrap();
    let sum: Vec3<f64> = gy.iter().fold(Vec3::zeros(), |a, b| a + b);
    assert!(sum.norm() <= 1e-12 * gy.len() as f64);
}

#[test]
fn strain_energy_examples() {
    // undeformed state carries no energy
    let problem = ShellProblem::new(
        plane_surface(),
        MaterialModel::IsotropicSimple(IsotropicSimple::new(1.0, 0.0, 1.0)),
        (5, 5),
        1.0,
        BoundarySpec::all_clamped(),
        Loads::none(),
        ProblemOptions::default(),
    )
    .unwrap();
    let reference = problem.initial_configuration();
    assert_eq!(total_strain_energy(&problem, &reference).unwrap(), 0.0);

    // uniform in-plane stretch of the unit plate, nu = 0, C = 1:
    // energy C eps^2 integrated over the unit square
    let eps = 0.05;
    let mut stretched = reference.clone();
    for (n, y) in stretched.y.iter_mut().enumerate() {
        let _ = n;
        *y *= 1.0 + eps;
    }
    let e = total_strain_energy(&problem, &stretched).unwrap();
    assert_relative_eq!(e, eps * eps, max_relative = 1e-12);
}

#[test]
fn load_potential_examples() {
    let problem_no_loads = ShellProblem::new(
        plane_surface(),
        simple_material(),
        (4, 4),
        0.1,
        BoundarySpec::all_clamped(),
        Loads::none(),
        ProblemOptions::default(),
    )
    .unwrap();
    let reference = problem_no_loads.initial_configuration();
    assert_eq!(load_potential(&problem_no_loads, &reference).unwrap(), 0.0);

    // constant force, constant displacement on the unit plate: f . u
    let f = Vec3::new(0.3, -0.2, 0.7);
    let u0 = Vec3::new(0.05, 0.02, -0.04);
    let c_load = Mat3::new(0.1, 0.02, 0.0, 0.0, -0.05, 0.01, 0.03, 0.0, 0.2);
    let problem = ShellProblem::new(
        plane_surface(),
        simple_material(),
        (4, 4),
        0.1,
        BoundarySpec::all_clamped(),
        Loads {
            force: LoadField::Constant(f),
            rotation_load: Some(c_load),
        },
        ProblemOptions::default(),
    )
    .unwrap();
    let mut moved = reference.clone();
    for y in moved.y.iter_mut() {
        *y += u0;
    }
    let lp = load_potential(&problem, &moved).unwrap();
    // rotation part: R = I on the plane, unit area
    let expect = f.dot(&u0) + c_load.trace();
    assert_relative_eq!(lp, expect, max_relative = 1e-12);
    // boundedness of the rotation term on SO(3): |<C, R>| <= sqrt(3) |C|
    assert!(c_load.trace().abs() <= 3.0_f64.sqrt() * c_load.norm() + 1e-15);

    // total functional is their difference
    let i = total_functional(&problem, &moved).unwrap();
    let w = total_strain_energy(&problem, &moved).unwrap();
    assert_relative_eq!(i, w - lp, epsilon = 1e-14);
}

#[test]
fn functional_is_objective_under_rigid_motions() {
    let problem = ShellProblem::new(
        cylinder_surface(),
        simple_material(),
        (6, 6),
        0.1,
        BoundarySpec::all_clamped(),
        Loads::none(),
        ProblemOptions::default(),
    )
    .unwrap();
    let mut rng = StdRng::seed_from_u64(21);
    for _ in 0..10 {
        let config = problem
            .initial_configuration()
            .perturbed(&mut rng, 0.1, 0.2);
        let i0 = total_functional(&problem, &config).unwrap();
        let rot = UnitQuat::from_scaled_axis(Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ));
        let shift = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let moved = config.rigidly_transformed(&rot, &shift);
        let i1 = total_functional(&problem, &moved).unwrap();
        assert!((i0 - i1).abs() <= 1e-10 * (1.0 + i0.abs()));
    }
}

#[test]
fn minimize_rigid_boundary_recovers_rigid_mode() {
    // prescribe a rigid motion on the whole boundary with zero loads: the
    // global minimum is the rigid motion with zero energy
    let rot = UnitQuat::from_scaled_axis(Vec3::new(0.3, -0.2, 0.4));
    let shift = Vec3::new(0.1, 0.2, -0.3);
    let motion = RigidMotion {
        rotation: rot,
        translation: shift,
    };
    let mut boundary = BoundarySpec::all_clamped();
    for e in [
        &mut boundary.left,
        &mut boundary.right,
        &mut boundary.bottom,
        &mut boundary.top,
    ] {
        e.motion = Some(motion);
    }
    let problem = ShellProblem::new(
        cylinder_surface(),
        simple_material(),
        (5, 5),
        0.1,
        boundary,
        Loads::none(),
        ProblemOptions::default(),
    )
    .unwrap();
    let rigid = problem.reference().nodes.rigidly_transformed(&rot, &shift);
    let mut rng = StdRng::seed_from_u64(3);
    let initial = rigid.perturbed(&mut rng, 0.02, 0.05);
    let options = SolveOptions {
        grad_tol: 1e-10,
        max_iter: 400,
        initial: Some(initial),
        ..SolveOptions::default()
    };
    let result = minimize(&problem, &options).unwrap();
    assert!(result.converged, "residual {:.3e}", result.optimality_residual);
    assert!(result.final_energy <= 1e-10, "energy {:.3e}", result.final_energy);
    // configuration within 1e-5 of the rigid mode
    let mut worst: f64 = 0.0;
    for n in 0..rigid.grid.node_count() {
        worst = worst.max((result.config.y[n] - rigid.y[n]).norm());
        let dq = (result.config.q[n].coords - rigid.q[n].coords).norm().min(
            (result.config.q[n].coords + rigid.q[n].coords).norm(),
        );
        worst = worst.max(dq);
    }
    assert!(worst <= 1e-5, "distance to rigid mode {worst:.3e}");
    // the energy history never increases
    for w in result.energy_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-14);
    }
    // quaternions stay unit
    assert!(result.config.max_quaternion_norm_deviation() <= 1e-12);
}

#[test]
fn minimize_with_zero_iterations_returns_initial() {
    let problem = loaded_cylinder_problem(4);
    let options = SolveOptions {
        max_iter: 0,
        ..SolveOptions::default()
    };
    let result = minimize(&problem, &options).unwrap();
    assert_eq!(result.iterations, 0);
    assert_eq!(result.energy_history.len(), 1);
    let initial = problem.initial_configuration();
    for n in 0..initial.grid.node_count() {
        assert_eq!(result.config.y[n], initial.y[n]);
    }
}

fn stretch_boundary(eps: f64) -> BoundarySpec<f64> {
    let mut boundary = BoundarySpec::all_clamped();
    let affine = AffineMap {
        origin: Vec3::zeros(),
        d1: Vec3::new(1.0 + eps, 0.0, 0.0),
        d2: Vec3::new(0.0, 1.0 + eps, 0.0),
    };
    for e in [
        &mut boundary.left,
        &mut boundary.right,
        &mut boundary.bottom,
        &mut boundary.top,
    ] {
        e.y_affine = Some(affine);
    }
    boundary
}

#[test]
fn minimize_stretched_plate() {
    // all boundary nodes prescribe a uniform stretch; the minimizer is the
    // uniform stretch with energy C eps^2 per unit area
    let eps = 0.02;
    let problem = ShellProblem::new(
        plane_surface(),
        MaterialModel::IsotropicSimple(IsotropicSimple::new(1.0, 0.0, 1.0)),
        (5, 5),
        1.0,
        stretch_boundary(eps),
        Loads::none(),
        ProblemOptions::default(),
    )
    .unwrap();
    let options = SolveOptions {
        grad_tol: 1e-9,
        max_iter: 300,
        ..SolveOptions::default()
    };
    let result = minimize(&problem, &options).unwrap();
    assert!(result.converged);
    assert_relative_eq!(result.final_energy, eps * eps, max_relative = 1e-8);
    let report = optimality_report(&problem, &result.config).unwrap();
    assert!(report.grad_norm <= 1e-9);
    assert_relative_eq!(report.strain_energy, result.final_energy, epsilon = 1e-14);
    assert_eq!(report.load_potential, 0.0);
}

#[test]
fn argmin_invariance_under_rigid_transform() {
    let eps = 0.03;
    let base = ShellProblem::new(
        plane_surface(),
        MaterialModel::IsotropicSimple(IsotropicSimple::new(1.0, 0.25, 0.5)),
        (4, 4),
        0.5,
        stretch_boundary(eps),
        Loads::none(),
        ProblemOptions::default(),
    )
    .unwrap();
    let options = SolveOptions {
        grad_tol: 1e-10,
        max_iter: 400,
        ..SolveOptions::default()
    };
    let result = minimize(&base, &options).unwrap();
    assert!(result.converged);

    let rot = UnitQuat::from_scaled_axis(Vec3::new(0.2, 0.5, -0.1));
    let shift = Vec3::new(-0.4, 0.3, 0.2);
    let mut boundary = stretch_boundary(eps);
    // compose the rigid motion with the stretch data
    for e in [
        &mut boundary.left,
        &mut boundary.right,
        &mut boundary.bottom,
        &mut boundary.top,
    ] {
        let a = e.y_affine.unwrap();
        e.y_affine = Some(AffineMap {
            origin: rot.transform_vector(&a.origin) + shift,
            d1: rot.transform_vector(&a.d1),
            d2: rot.transform_vector(&a.d2),
        });
        e.rotation = Some(rot * UnitQuat::identity());
    }
    let transformed = ShellProblem::new(
        plane_surface(),
        MaterialModel::IsotropicSimple(IsotropicSimple::new(1.0, 0.25, 0.5)),
        (4, 4),
        0.5,
        boundary,
        Loads::none(),
        ProblemOptions::default(),
    )
    .unwrap();
    let initial = result.config.rigidly_transformed(&rot, &shift);
    let options2 = SolveOptions {
        grad_tol: 1e-10,
        max_iter: 400,
        initial: Some(initial),
        ..SolveOptions::default()
    };
    let result2 = minimize(&transformed, &options2).unwrap();
    assert!(result2.converged);
    assert!((result2.final_energy - result.final_energy).abs() <= 1e-9 * (1.0 + result.final_energy));
    let expected = result.config.rigidly_transformed(&rot, &shift);
    for n in 0..expected.grid.node_count() {
        assert!((result2.config.y[n] - expected.y[n]).norm() <= 1e-5);
    }
}

#[test]
fn mesh_refinement_energy_is_stable() {
    let eps = 0.02;
    let mut energies = Vec::new();
    for n in [17usize, 33] {
        let problem = ShellProblem::new(
            plane_surface(),
            MaterialModel::IsotropicSimple(IsotropicSimple::new(1.0, 0.0, 1.0)),
            (n, n),
            1.0,
            stretch_boundary(eps),
            Loads::none(),
            ProblemOptions::default(),
        )
        .unwrap();
        let options = SolveOptions {
            grad_tol: 1e-9,
            max_iter: 800,
            ..SolveOptions::default()
        };
        let result = minimize(&problem, &options).unwrap();
        assert!(result.converged);
        energies.push(result.final_energy);
    }
    let change = (energies[1] - energies[0]).abs() / energies[0];
    assert!(change < 0.01, "energy changed by {:.3}%", change * 100.0);
}

#[test]
fn degenerate_boundary_partition_rejected() {
    let boundary = BoundarySpec {
        left: EdgeCondition::free(),
        right: EdgeCondition::free(),
        bottom: EdgeCondition::free(),
        top: EdgeCondition::free(),
    };
    let err = ShellProblem::new(
        plane_surface(),
        simple_material(),
        (4, 4),
        0.1,
        boundary,
        Loads::none(),
        ProblemOptions::default(),
    );
    assert!(matches!(err, Err(ShellError::Validation(_))));
}

#[test]
fn strict_mode_rejects_degenerate_drill_material() {
    let material = MaterialModel::IsotropicGeneral(IsotropicGeneral {
        alpha: [1.0, 1.5, 1.5, 1.0],
        beta: [1.0, 0.5, 1.5, 1.0],
    });
    let strict = ShellProblem::new(
        plane_surface(),
        material.clone(),
        (4, 4),
        0.1,
        BoundarySpec::all_clamped(),
        Loads::none(),
        ProblemOptions::default(),
    );
    assert!(matches!(strict, Err(ShellError::Validation(_))));
    let lenient = ShellProblem::new(
        plane_surface(),
        material,
        (4, 4),
        0.1,
        BoundarySpec::all_clamped(),
        Loads::none(),
        ProblemOptions {
            strict: false,
            ..ProblemOptions::default()
        },
    );
    assert!(lenient.is_ok());
    assert!(!lenient.unwrap().material_report.pass);
}

#[test]
fn multi_start_is_deterministic() {
    let problem = loaded_cylinder_problem(4);
    let options = SolveOptions {
        max_iter: 60,
        multi_start: 2,
        perturbation: 0.05,
        seed: 11,
        ..SolveOptions::default()
    };
    let a = minimize(&problem, &options).unwrap();
    let b = minimize(&problem, &options).unwrap();
    assert_eq!(a.final_energy.to_bits(), b.final_energy.to_bits());
    for (x, y) in a.config.y.iter().zip(&b.config.y) {
        assert_eq!(x, y);
    }
}

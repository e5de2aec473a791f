use super::*;
use crate::geometry::{Chart, DerivativeMode, Domain, SurfaceGeometry};
use approx::assert_relative_eq;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::FRAC_PI_2;

fn plane_setup(n: usize) -> (SurfaceGeometry<f64>, Grid<f64>, ReferenceConfiguration<f64>) {
    let s = SurfaceGeometry::new(
        Chart::Plane,
        Domain::new([0.0, 1.0], [0.0, 1.0]).unwrap(),
        DerivativeMode::Analytic,
    )
    .unwrap();
    let grid = Grid::new(n, n, *s.domain()).unwrap();
    let r = ReferenceConfiguration::new(&s, &grid).unwrap();
    (s, grid, r)
}

fn cylinder_setup(n: usize, fd: bool) -> (SurfaceGeometry<f64>, Grid<f64>, ReferenceConfiguration<f64>) {
    let domain = Domain::new([0.0, FRAC_PI_2], [0.0, 1.0]).unwrap();
    let mode = if fd {
        DerivativeMode::central_default(&domain)
    } else {
        DerivativeMode::Analytic
    };
    let s = SurfaceGeometry::new(Chart::Cylinder { radius: 1.0 }, domain, mode).unwrap();
    let grid = Grid::new(n, n, domain).unwrap();
    let r = ReferenceConfiguration::new(&s, &grid).unwrap();
    (s, grid, r)
}

fn sphere_setup(n: usize) -> (SurfaceGeometry<f64>, Grid<f64>, ReferenceConfiguration<f64>) {
    let domain = Domain::new([0.0, FRAC_PI_2], [-0.6, 0.6]).unwrap();
    let s = SurfaceGeometry::new(Chart::Sphere { radius: 1.0 }, domain, DerivativeMode::Analytic).unwrap();
    let grid = Grid::new(n, n, domain).unwrap();
    let r = ReferenceConfiguration::new(&s, &grid).unwrap();
    (s, grid, r)
}

fn random_rotation(rng: &mut StdRng) -> UnitQuat<f64> {
    let axis = Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    UnitQuat::from_scaled_axis(axis)
}

fn gauss_points(grid: &Grid<f64>) -> Vec<[f64; 2]> {
    let (h1, h2) = grid.spacing();
    let g = 0.5 / 3.0_f64.sqrt();
    let mut pts = Vec::new();
    for cj in 0..grid.n2 - 1 {
        for ci in 0..grid.n1 - 1 {
            let base = grid.node(ci, cj);
            for (a, b) in [(0.5 - g, 0.5 - g), (0.5 + g, 0.5 - g), (0.5 - g, 0.5 + g), (0.5 + g, 0.5 + g)] {
                pts.push([base[0] + a * h1, base[1] + b * h2]);
            }
        }
    }
    pts
}

#[test]
fn undeformed_state_has_zero_strain() {
    let (_, grid, reference) = cylinder_setup(5, false);
    let config = reference.nodes.clone();
    for x in gauss_points(&grid) {
        let (h, l) = strain_matrices(&config, &reference, x).unwrap();
        assert_eq!(h.norm(), 0.0);
        assert_eq!(l.norm(), 0.0);
        let s = elastic_strain(&config, &reference, x).unwrap();
        assert_eq!(s.e.norm(), 0.0);
        assert_eq!(s.k.norm(), 0.0);
    }
}

#[test]
fn plane_shear_strain_matrices() {
    // y = (x1 + g x2, x2, 0), R = I on the plane: H column 2 = (g, 0, 0)
    let (_, grid, reference) = plane_setup(4);
    let g = 0.3;
    let mut config = reference.nodes.clone();
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let x = grid.node(i, j);
            config.y[grid.index(i, j)] = Vec3::new(x[0] + g * x[1], x[1], 0.0);
        }
    }
    let (h, l) = strain_matrices(&config, &reference, [0.4, 0.6]).unwrap();
    let mut expect = Mat3::zeros();
    expect[(0, 1)] = g;
    assert_relative_eq!(h, expect, epsilon = 1e-14);
    assert!(l.norm() <= 1e-14);
    // plate reduction: frame components coincide with fixed-basis components
    let s = elastic_strain(&config, &reference, [0.4, 0.6]).unwrap();
    assert_relative_eq!(s.e_frame, s.e, epsilon = 1e-14);
    assert_relative_eq!(s.e, expect, epsilon = 1e-14);
}

#[test]
fn rigid_motion_nullity() {
    let mut rng = StdRng::seed_from_u64(42);
    for fd in [false, true] {
        let (_, grid, reference) = cylinder_setup(9, fd);
        for _ in 0..5 {
            let rot = random_rotation(&mut rng);
            let shift = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let config = reference.nodes.rigidly_transformed(&rot, &shift);
            let mut worst: f64 = 0.0;
            for x in gauss_points(&grid) {
                let s = elastic_strain(&config, &reference, x).unwrap();
                worst = worst.max(s.e.norm() + s.k.norm());
            }
            let tol = if fd { 1e-9 } else { 1e-12 };
            assert!(worst <= tol, "rigid nullity violated: {worst:.3e} (fd = {fd})");
        }
    }
}

#[test]
fn rotation_derivative_stays_skew() {
    let mut rng = StdRng::seed_from_u64(9);
    let (_, grid, reference) = sphere_setup(6);
    let config = reference.nodes.perturbed(&mut rng, 0.1, 0.4);
    for x in gauss_points(&grid) {
        let (ci, cj, s, t) = grid.locate(x).unwrap();
        let e = interp::eval_field(&config, ci, cj, s, t).unwrap();
        for a in 0..2 {
            // unit-norm interpolant: q . dq = 0, hence R^T dR = hat(omega)
            assert!(e.q.coords.dot(&e.dq[a].coords).abs() <= 1e-10);
            let rt_dr = hat(&e.omega[a]);
            assert!((rt_dr + rt_dr.transpose()).norm() <= 1e-10);
        }
    }
}

#[test]
fn rotation_interpolation_matches_matrix_difference_oracle() {
    // independent route: finite differences of the interpolated rotation
    let mut rng = StdRng::seed_from_u64(17);
    let (_, grid, reference) = sphere_setup(5);
    let config = reference.nodes.perturbed(&mut rng, 0.05, 0.3);
    let h = 1e-6;
    for x in [[0.3, 0.1], [0.9, -0.2], [1.2, 0.45]] {
        let (ci, cj, s, t) = grid.locate(x).unwrap();
        let e = interp::eval_field(&config, ci, cj, s, t).unwrap();
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let rp = config.rotation_at(xp).unwrap().to_rotation_matrix().into_inner();
            let rm = config.rotation_at(xm).unwrap().to_rotation_matrix().into_inner();
            let dr = (rp - rm) / (2.0 * h);
            let omega_fd = axl(&(e.r.transpose() * dr));
            assert!((omega_fd - e.omega[a]).norm() <= 1e-7 * (1.0 + e.omega[a].norm()));
        }
    }
}

#[test]
fn frame_norm_invariance_and_zero_third_column() {
    let mut rng = StdRng::seed_from_u64(3);
    let (_, grid, reference) = sphere_setup(6);
    for _ in 0..20 {
        let config = reference.nodes.perturbed(&mut rng, 0.2, 0.5);
        for x in [[0.4, 0.0], [1.1, 0.3]] {
            let s = elastic_strain(&config, &reference, x).unwrap();
            assert_relative_eq!(s.e.norm(), s.e_frame.norm(), max_relative = 1e-12);
            assert_relative_eq!(s.k.norm(), s.k_frame.norm(), max_relative = 1e-12);
            assert_eq!(s.e_frame.column(2).norm(), 0.0);
            assert_eq!(s.k_frame.column(2).norm(), 0.0);
            let _ = grid;
        }
    }
}

#[test]
fn strain_lower_bound_by_metric_eigenvalue() {
    // |E| >= lambda0 |H| and |K| >= lambda0 |L| with lambda0 from the
    // regularity report of the discrete reference surface; the chart report
    // agrees with it up to the interpolation error
    let mut rng = StdRng::seed_from_u64(31);
    for setup in [cylinder_setup(7, false), sphere_setup(7)] {
        let (surface, grid, reference) = setup;
        let lambda0 = reference.regularity_report(1e-8).unwrap().lambda0;
        let chart_lambda0 = surface.regularity_report(&grid, 1e-8).unwrap().lambda0;
        // the two reports differ by the interpolation error of the metric
        assert!((lambda0 - chart_lambda0).abs() <= 0.02 * chart_lambda0);
        for _ in 0..20 {
            let config = reference.nodes.perturbed(&mut rng, 0.3, 0.25);
            for x in gauss_points(&grid).into_iter().step_by(17) {
                let (h, l) = strain_matrices(&config, &reference, x).unwrap();
                let s = elastic_strain(&config, &reference, x).unwrap();
                assert!(s.e.norm() >= lambda0 * h.norm() - 1e-10);
                assert!(s.k.norm() >= lambda0 * l.norm() - 1e-10);
            }
        }
    }
}

#[test]
fn stretch_identities() {
    let mut rng = StdRng::seed_from_u64(5);
    let (_, _, reference) = cylinder_setup(6, false);
    // undeformed
    let g = stretch_and_gradients(&reference.nodes, &reference, [0.5, 0.5]).unwrap();
    assert_relative_eq!(g.u_bar, Mat3::identity(), epsilon = 1e-13);
    assert_relative_eq!(g.f_e, Mat3::identity(), epsilon = 1e-13);
    assert_relative_eq!(g.f_bar, g.f0, epsilon = 1e-13);
    // rigid motion: F^e is the rigid rotation, u_bar = I
    let rot = random_rotation(&mut rng);
    let shift = Vec3::new(0.2, -0.1, 0.4);
    let rigid = reference.nodes.rigidly_transformed(&rot, &shift);
    let g = stretch_and_gradients(&rigid, &reference, [0.7, 0.3]).unwrap();
    assert_relative_eq!(g.f_e, rot.to_rotation_matrix().into_inner(), epsilon = 1e-12);
    assert_relative_eq!(g.u_bar, Mat3::identity(), epsilon = 1e-12);
    // random configuration: multiplicative split and E = u_bar - I
    for _ in 0..10 {
        let config = reference.nodes.perturbed(&mut rng, 0.2, 0.4);
        for x in [[0.3, 0.2], [1.0, 0.8]] {
            let g = stretch_and_gradients(&config, &reference, x).unwrap();
            assert!((g.f_bar - g.f_e * g.f0).norm() <= 1e-12 * (1.0 + g.f_bar.norm()));
            let s = elastic_strain(&config, &reference, x).unwrap();
            assert!((s.e - (g.u_bar - Mat3::identity())).norm() <= 1e-12);
        }
    }
}

#[test]
fn reconstruction() {
    let mut rng = StdRng::seed_from_u64(8);
    let (_, _, reference) = cylinder_setup(5, false);
    let h = 0.1;
    let x = [0.6, 0.4];
    // x3 = 0 recovers the mid-surface
    let config = reference.nodes.perturbed(&mut rng, 0.1, 0.2);
    let phi = reconstruct_deformed(&config, &reference, x, 0.0, h).unwrap();
    assert_relative_eq!(phi, config.position_at(x).unwrap(), epsilon = 1e-14);
    // undeformed: phi = Theta through the thickness
    for x3 in [-h / 2.0, -0.02, 0.03, h / 2.0] {
        let phi = reconstruct_deformed(&reference.nodes, &reference, x, x3, h).unwrap();
        let theta = reconstruct_reference(&reference, x, x3, h).unwrap();
        assert_relative_eq!(phi, theta, epsilon = 1e-13);
    }
    // rigid motion maps the reconstruction rigidly
    let rot = random_rotation(&mut rng);
    let shift = Vec3::new(-0.3, 0.5, 0.1);
    let rigid = reference.nodes.rigidly_transformed(&rot, &shift);
    let x3 = 0.04;
    let phi = reconstruct_deformed(&rigid, &reference, x, x3, h).unwrap();
    let theta = reconstruct_reference(&reference, x, x3, h).unwrap();
    assert_relative_eq!(phi, rot.transform_vector(&theta) + shift, epsilon = 1e-12);
    // outside the thickness interval
    assert!(matches!(
        reconstruct_deformed(&config, &reference, x, 0.9 * h, h),
        Err(ShellError::OutOfThickness { .. })
    ));
}

#[test]
fn drill_rotation_of_single_node_gives_skew_inplane_strain() {
    let (_, grid, reference) = cylinder_setup(5, false);
    let mut config = reference.nodes.clone();
    // rotate one interior node about its own normal
    let (i, j) = (2, 2);
    let idx = grid.index(i, j);
    let f_at = reference.nodes.q[idx];
    let n0 = f_at.to_rotation_matrix().into_inner() * Vec3::z();
    let phi = 0.3;
    config.q[idx] = UnitQuat::from_scaled_axis(n0 * phi) * config.q[idx];
    // quadrature point adjacent to the rotated node
    let (h1, h2) = grid.spacing();
    let base = grid.node(1, 1);
    let gp = [base[0] + 0.789 * h1, base[1] + 0.789 * h2];
    let s = elastic_strain(&config, &reference, gp).unwrap();
    let skew = (s.e_inplane - s.e_inplane.transpose()) * 0.5;
    assert!(skew.norm() > 1e-3, "expected drill strain, got {:.3e}", skew.norm());

    // independent brute-force oracle: assemble H and L from interpolant
    // values and matrix finite differences of the definitions
    let hstep = 1e-6;
    let r_gp = config.rotation_at(gp).unwrap().to_rotation_matrix().into_inner();
    let q0_gp = reference.nodes.rotation_at(gp).unwrap().to_rotation_matrix().into_inner();
    let mut h_cols = [Vec3::zeros(); 2];
    let mut l_cols = [Vec3::zeros(); 2];
    for a in 0..2 {
        let mut xp = gp;
        let mut xm = gp;
        xp[a] += hstep;
        xm[a] -= hstep;
        let dy = (config.position_at(xp).unwrap() - config.position_at(xm).unwrap()) / (2.0 * hstep);
        let dy0 = (reference.nodes.position_at(xp).unwrap() - reference.nodes.position_at(xm).unwrap())
            / (2.0 * hstep);
        let dr = (config.rotation_at(xp).unwrap().to_rotation_matrix().into_inner()
            - config.rotation_at(xm).unwrap().to_rotation_matrix().into_inner())
            / (2.0 * hstep);
        let dq0 = (reference.nodes.rotation_at(xp).unwrap().to_rotation_matrix().into_inner()
            - reference.nodes.rotation_at(xm).unwrap().to_rotation_matrix().into_inner())
            / (2.0 * hstep);
        h_cols[a] = r_gp.transpose() * dy - q0_gp.transpose() * dy0;
        l_cols[a] = axl(&(r_gp.transpose() * dr)) - axl(&(q0_gp.transpose() * dq0));
    }
    let (h_mat, l_mat) = strain_matrices(&config, &reference, gp).unwrap();
    let h_oracle = Mat3::from_columns(&[h_cols[0], h_cols[1], Vec3::zeros()]);
    let l_oracle = Mat3::from_columns(&[l_cols[0], l_cols[1], Vec3::zeros()]);
    assert!((h_mat - h_oracle).norm() <= 1e-7);
    assert!((l_mat - l_oracle).norm() <= 1e-7);
}

#[test]
fn excessive_internode_rotation_rejected() {
    let (_, grid, reference) = plane_setup(3);
    let mut config = reference.nodes.clone();
    let idx = grid.index(1, 1);
    config.q[idx] = UnitQuat::from_scaled_axis(Vec3::z() * 2.0) * config.q[idx];
    let err = elastic_strain(&config, &reference, [0.4, 0.4]);
    assert!(matches!(err, Err(ShellError::MeshResolution { .. })));
}

#[test]
fn grid_mismatch_rejected() {
    let (_, _, reference) = plane_setup(4);
    let (_, _, other) = plane_setup(5);
    let config = other.nodes.clone();
    assert!(matches!(
        elastic_strain(&config, &reference, [0.5, 0.5]),
        Err(ShellError::GridMismatch { .. })
    ));
}

#[test]
fn quaternion_norms_after_perturbation() {
    let mut rng = StdRng::seed_from_u64(77);
    let (_, _, reference) = sphere_setup(5);
    let mut config = reference.nodes.perturbed(&mut rng, 0.1, 0.8);
    config.renormalize();
    assert!(config.max_quaternion_norm_deviation() <= 1e-12);
}

//! Quadrature-level assembly of the total functional and its gradient.
//!
//! The gradient with respect to a nodal rotation is right-trivialized: it
//! pairs with variations `R <- R exp(hat(delta))`, i.e. nodal quaternion
//! variations `dq = q * (0, delta) / 2`. The chain rule is propagated by
//! hand through the normalized bilinear quaternion interpolant.

use rayon::prelude::*;

use crate::kinematics::interp::{eval_field, FieldEval, Shape};
use crate::kinematics::{strain_from_evals, strain_hl, ReferencePoint};
use crate::linalg::{axl, pure_quat, quat_imag, Mat3, Quat, Vec3};
use crate::num::{real, Real};
use crate::error::Result;

use super::ShellProblem;

/// Reference data frozen at one Gauss point.
#[derive(Debug, Clone)]
pub(crate) struct QuadPoint<T: Real> {
    pub cell: (usize, usize),
    pub local: (T, T),
    pub nodes: [usize; 4],
    pub shape: Shape<T>,
    /// Parameter-plane quadrature weight times reference area density.
    pub wa: T,
    pub rp: ReferencePoint<T>,
}

/// Trapezoidal segment of a free boundary edge.
#[derive(Debug, Clone)]
pub(crate) struct BoundarySegment<T: Real> {
    pub nodes: [usize; 2],
    /// Chord length of the segment on the reference surface.
    pub length: T,
    pub traction: Option<Vec3<T>>,
    pub rotation_load: Option<Mat3<T>>,
}

/// Assembled energies and (optionally) the raw gradient.
#[derive(Debug, Clone)]
pub(crate) struct Assembled<T: Real> {
    pub strain_energy: T,
    pub load_surface_force: T,
    pub load_surface_rotation: T,
    pub load_boundary_force: T,
    pub load_boundary_rotation: T,
    pub grad_y: Vec<Vec3<T>>,
    pub grad_r: Vec<Vec3<T>>,
}

impl<T: Real> Assembled<T> {
    pub fn load_potential(&self) -> T {
        self.load_surface_force
            + self.load_surface_rotation
            + self.load_boundary_force
            + self.load_boundary_rotation
    }

    pub fn functional(&self) -> T {
        self.strain_energy - self.load_potential()
    }
}

struct PointContribution<T: Real> {
    strain_energy: T,
    load_force: T,
    load_rotation: T,
    // per element node: gradient of the functional
    gy: [Vec3<T>; 4],
    gr: [Vec3<T>; 4],
}

/// Energy and gradient contribution of a single Gauss point.
fn point_contribution<T: Real>(
    problem: &ShellProblem<T>,
    config: &crate::kinematics::ShellConfiguration<T>,
    qp: &QuadPoint<T>,
    want_grad: bool,
) -> Result<PointContribution<T>> {
    let e = eval_field(config, qp.cell.0, qp.cell.1, qp.local.0, qp.local.1)?;
    let rp = &qp.rp;
    let strain = strain_from_evals(&e, rp);
    let w = problem.material.energy_density(&strain);

    // surface loads at the Gauss point
    let f_load = problem.force_at(&qp.shape, &qp.nodes);
    let u = e.y - rp.y0;
    let load_force = qp.wa * f_load.dot(&u);
    let load_rotation = match &problem.loads.rotation_load {
        Some(c) => qp.wa * c.dot(&e.r),
        None => T::zero(),
    };

    let mut out = PointContribution {
        strain_energy: qp.wa * w,
        load_force,
        load_rotation,
        gy: [Vec3::zeros(); 4],
        gr: [Vec3::zeros(); 4],
    };
    if !want_grad {
        return Ok(out);
    }

    let (ge, gk) = problem.material.frame_gradients(&strain);
    // dW/dH and dW/dL: pull the frame-component gradients back through
    // E_frame = Z1 H Z2, K_frame = Z1 L Z2
    let ge_bar = rp.z1.transpose() * ge * rp.z2.transpose();
    let gk_bar = rp.z1.transpose() * gk * rp.z2.transpose();

    // cotangent of the rotation matrix R (energy h-columns + rotation load)
    let mut m_r = Mat3::zeros();
    // cotangents of omega_alpha
    let mut s_omega = [Vec3::zeros(); 2];
    for alpha in 0..2 {
        let ge_col: Vec3<T> = ge_bar.column(alpha).into_owned();
        let gk_col: Vec3<T> = gk_bar.column(alpha).into_owned();
        // h_alpha = R^T dy_alpha - c0_alpha
        let dw_dy = e.r * ge_col * qp.wa;
        let dn = if alpha == 0 { &qp.shape.d1 } else { &qp.shape.d2 };
        for m in 0..4 {
            out.gy[m] += dw_dy * dn[m];
        }
        m_r += e.dy[alpha] * (ge_col * qp.wa).transpose();
        s_omega[alpha] = gk_col * qp.wa;
    }
    // surface force: d(f . u)/dy_m = N_m f; enters the functional with minus
    for m in 0..4 {
        out.gy[m] -= f_load * (qp.wa * qp.shape.n[m]);
    }
    // rotation load <C, R> enters with minus
    if let Some(c) = &problem.loads.rotation_load {
        m_r -= c * qp.wa;
    }

    // --- pull rotation cotangents back to the nodal quaternions ---
    let two = real::<T>(2.0);
    let zero_q = Quat::from_parts(T::zero(), Vec3::zeros());
    // cotangent of the normalized quaternion q
    let mut t_q = zero_q;
    // cotangents of the raw interpolant derivatives u_alpha = d_alpha qhat
    let mut t_u = [zero_q, zero_q];
    // direct cotangent of the raw interpolant qhat
    let mut t_qhat = zero_q;

    // omega_alpha = 2 vec(conj(q) dq_alpha)
    for alpha in 0..2 {
        let s = s_omega[alpha];
        let t_dq = (e.q * pure_quat(&s)) * two;
        t_q -= (e.dq[alpha] * pure_quat(&s)) * two;
        // dq_alpha = u/n - qhat (qhat . u) / n^3 as a function of (u, qhat)
        t_u[alpha] += (t_dq - e.q * e.q.coords.dot(&t_dq.coords)) / e.qhat_norm;
        let u = e.dqhat[alpha];
        let n = e.qhat_norm;
        let n3 = n * n * n;
        let n5 = n3 * n * n;
        let qh = e.qhat;
        let tu = t_dq.coords.dot(&u.coords);
        let tq = t_dq.coords.dot(&qh.coords);
        let qu = qh.coords.dot(&u.coords);
        t_qhat += qh * (-tu / n3 + real::<T>(3.0) * tq * qu / n5)
            + t_dq * (-qu / n3)
            + u * (-tq / n3);
    }

    // R = rot(q): <M, dR> = <q (0, axl(A - A^T)), dq> * 2 with A = R^T M
    let rm = e.r.transpose() * m_r;
    let m_axl = axl(&(rm - rm.transpose()));
    t_q += (e.q * pure_quat(&m_axl)) * two;

    // q = qhat / n pullback of t_q, then linear interpolation pullback
    t_qhat += (t_q - e.q * e.q.coords.dot(&t_q.coords)) / e.qhat_norm;
    for m in 0..4 {
        let c = e.shape.n[m] * e.sign[m];
        let c1 = e.shape.d1[m] * e.sign[m];
        let c2 = e.shape.d2[m] * e.sign[m];
        let t_node = t_qhat * c + t_u[0] * c1 + t_u[1] * c2;
        let q_m = config.q[qp.nodes[m]].quaternion();
        out.gr[m] += quat_imag(&(q_m.conjugate() * t_node)) * real::<T>(0.5);
    }
    Ok(out)
}

/// Assembles energies and, when requested, the raw (unconstrained) gradient.
pub(crate) fn assemble<T: Real>(
    problem: &ShellProblem<T>,
    config: &crate::kinematics::ShellConfiguration<T>,
    want_grad: bool,
) -> Result<Assembled<T>> {
    let n_nodes = config.grid.node_count();
    let zero = T::zero();

    // fixed-size chunks with an ordered reduction keep the assembly
    // deterministic for any thread count
    const CHUNK: usize = 256;
    let partials: Vec<Result<ChunkSum<T>>> = problem
        .quad
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut sum = ChunkSum::new(n_nodes, want_grad);
            for qp in chunk {
                let c = point_contribution(problem, config, qp, want_grad)?;
                sum.strain_energy += c.strain_energy;
                sum.load_force += c.load_force;
                sum.load_rotation += c.load_rotation;
                if want_grad {
                    for m in 0..4 {
                        sum.grad_y[qp.nodes[m]] += c.gy[m];
                        sum.grad_r[qp.nodes[m]] += c.gr[m];
                    }
                }
            }
            Ok(sum)
        })
        .collect();

    let mut out = Assembled {
        strain_energy: zero,
        load_surface_force: zero,
        load_surface_rotation: zero,
        load_boundary_force: zero,
        load_boundary_rotation: zero,
        grad_y: vec![Vec3::zeros(); n_nodes],
        grad_r: vec![Vec3::zeros(); n_nodes],
    };
    for partial in partials {
        let p = partial?;
        out.strain_energy += p.strain_energy;
        out.load_surface_force += p.load_force;
        out.load_surface_rotation += p.load_rotation;
        if want_grad {
            for n in 0..n_nodes {
                out.grad_y[n] += p.grad_y[n];
                out.grad_r[n] += p.grad_r[n];
            }
        }
    }

    // boundary loads: nodal trapezoidal rule along the free edges
    let half = real::<T>(0.5);
    for seg in &problem.segments {
        let w = seg.length * half;
        for &node in &seg.nodes {
            if let Some(tr) = &seg.traction {
                let u = config.y[node] - problem.reference.nodes.y[node];
                out.load_boundary_force += w * tr.dot(&u);
                if want_grad {
                    out.grad_y[node] -= tr * w;
                }
            }
            if let Some(c) = &seg.rotation_load {
                let r = config.q[node].to_rotation_matrix().into_inner();
                out.load_boundary_rotation += w * c.dot(&r);
                if want_grad {
                    let rm = r.transpose() * c;
                    out.grad_r[node] -= axl(&(rm - rm.transpose())) * w;
                }
            }
        }
    }
    Ok(out)
}

struct ChunkSum<T: Real> {
    strain_energy: T,
    load_force: T,
    load_rotation: T,
    grad_y: Vec<Vec3<T>>,
    grad_r: Vec<Vec3<T>>,
}

impl<T: Real> ChunkSum<T> {
    fn new(n_nodes: usize, want_grad: bool) -> Self {
        let len = if want_grad { n_nodes } else { 0 };
        ChunkSum {
            strain_energy: T::zero(),
            load_force: T::zero(),
            load_rotation: T::zero(),
            grad_y: vec![Vec3::zeros(); len],
            grad_r: vec![Vec3::zeros(); len],
        }
    }
}

/// `axl(R^T dR)` cotangent helper reused by strain matrices. Exposed for
/// tests of the raw matrices.
#[allow(dead_code)]
pub(crate) fn strain_at_quad<T: Real>(
    config: &crate::kinematics::ShellConfiguration<T>,
    qp: &QuadPoint<T>,
) -> Result<(Mat3<T>, Mat3<T>)> {
    let e: FieldEval<T> = eval_field(config, qp.cell.0, qp.cell.1, qp.local.0, qp.local.1)?;
    Ok(strain_hl(&e, &qp.rp))
}

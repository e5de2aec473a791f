//! Bilinear interpolation of positions and unit-quaternion rotation fields
//! on a structured grid, with analytic derivatives of the interpolants.

use crate::error::{Result, ShellError};
use crate::geometry::Grid;
use crate::linalg::{quat_imag, Mat3, Quat, Vec3};
use crate::num::{real, to_f64, Real};

use super::ShellConfiguration;

/// Shape function values and physical derivatives at a local point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Shape<T: Real> {
    pub n: [T; 4],
    pub d1: [T; 4],
    pub d2: [T; 4],
}

pub(crate) fn shape<T: Real>(grid: &Grid<T>, s: T, t: T) -> Shape<T> {
    let (h1, h2) = grid.spacing();
    let one = T::one();
    Shape {
        n: [(one - s) * (one - t), s * (one - t), (one - s) * t, s * t],
        d1: [-(one - t) / h1, (one - t) / h1, -t / h1, t / h1],
        d2: [-(one - s) / h2, -s / h2, (one - s) / h2, s / h2],
    }
}

/// Node flat indices of cell `(ci, cj)` in the order
/// `(i, j), (i+1, j), (i, j+1), (i+1, j+1)`.
pub(crate) fn cell_nodes<T: Real>(grid: &Grid<T>, ci: usize, cj: usize) -> [usize; 4] {
    [
        grid.index(ci, cj),
        grid.index(ci + 1, cj),
        grid.index(ci, cj + 1),
        grid.index(ci + 1, cj + 1),
    ]
}

/// A configuration field evaluated at one point of one cell.
///
/// The rotation is the normalized bilinear quaternion interpolant; `omega`
/// holds the axial vectors `axl(R^T d_alpha R) = 2 vec(conj(q) d_alpha q)`,
/// which are exact for the unit-norm interpolant so `R^T d_alpha R` is skew
/// by construction.
#[derive(Debug, Clone)]
pub(crate) struct FieldEval<T: Real> {
    pub y: Vec3<T>,
    pub dy: [Vec3<T>; 2],
    /// Un-normalized interpolated quaternion, its norm, and its raw
    /// spatial derivatives.
    pub qhat: Quat<T>,
    pub qhat_norm: T,
    pub dqhat: [Quat<T>; 2],
    /// Normalized quaternion and its spatial derivatives.
    pub q: Quat<T>,
    pub dq: [Quat<T>; 2],
    pub r: Mat3<T>,
    pub omega: [Vec3<T>; 2],
    pub nodes: [usize; 4],
    pub sign: [T; 4],
    pub shape: Shape<T>,
}

/// Evaluates a configuration in cell `(ci, cj)` at local coordinates `(s, t)`.
///
/// Element quaternions are sign-aligned to the first node; relative node
/// rotations beyond a quarter turn are rejected as under-resolution.
pub(crate) fn eval_field<T: Real>(
    config: &ShellConfiguration<T>,
    ci: usize,
    cj: usize,
    s: T,
    t: T,
) -> Result<FieldEval<T>> {
    let grid = &config.grid;
    let nodes = cell_nodes(grid, ci, cj);
    let sh = shape(grid, s, t);

    let q_raw: [Quat<T>; 4] = std::array::from_fn(|m| *config.q[nodes[m]].quaternion());
    let mut sign = [T::one(); 4];
    for m in 1..4 {
        if q_raw[0].coords.dot(&q_raw[m].coords) < T::zero() {
            sign[m] = -T::one();
        }
    }
    // reject relative rotations beyond pi/2 across any cell edge
    let min_dot = real::<T>(std::f64::consts::FRAC_1_SQRT_2) - real::<T>(1e-9);
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 3), (2, 3)] {
        let d = (q_raw[a].coords * sign[a]).dot(&(q_raw[b].coords * sign[b]));
        if d < min_dot {
            let half_angle = d.abs().min(T::one()).acos();
            return Err(ShellError::MeshResolution {
                cell: (ci, cj),
                angle: to_f64(half_angle * real::<T>(2.0)),
            });
        }
    }

    let mut y = Vec3::zeros();
    let mut dy = [Vec3::zeros(), Vec3::zeros()];
    let mut qhat = Quat::from_parts(T::zero(), Vec3::zeros());
    let mut dqhat = [qhat, qhat];
    for m in 0..4 {
        let ym = config.y[nodes[m]];
        y += ym * sh.n[m];
        dy[0] += ym * sh.d1[m];
        dy[1] += ym * sh.d2[m];
        let qm = q_raw[m] * sign[m];
        qhat += qm * sh.n[m];
        dqhat[0] += qm * sh.d1[m];
        dqhat[1] += qm * sh.d2[m];
    }

    let qhat_norm = qhat.norm();
    if qhat_norm < real::<T>(0.5) {
        return Err(ShellError::MeshResolution {
            cell: (ci, cj),
            angle: f64::NAN,
        });
    }
    let q = qhat / qhat_norm;
    let dq = std::array::from_fn(|a| {
        let u = dqhat[a];
        (u - q * q.coords.dot(&u.coords)) / qhat_norm
    });
    let unit_q = nalgebra::Unit::new_unchecked(q);
    let r = unit_q.to_rotation_matrix().into_inner();
    let omega = std::array::from_fn(|a| quat_imag(&(q.conjugate() * dq[a])) * real::<T>(2.0));

    Ok(FieldEval {
        y,
        dy,
        qhat,
        qhat_norm,
        dqhat,
        q,
        dq,
        r,
        omega,
        nodes,
        sign,
        shape: sh,
    })
}

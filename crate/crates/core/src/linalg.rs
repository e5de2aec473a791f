//! Small fixed-size linear algebra: axial vectors, polar decomposition,
//! symmetric eigenvalues via Jacobi rotations.

use nalgebra::{Quaternion, SMatrix, UnitQuaternion};

use crate::error::{Result, ShellError};
use crate::num::{real, to_f64, Real};

pub type Vec2<T> = nalgebra::Vector2<T>;
pub type Vec3<T> = nalgebra::Vector3<T>;
pub type Vec4<T> = nalgebra::Vector4<T>;
pub type Mat2<T> = nalgebra::Matrix2<T>;
pub type Mat3<T> = nalgebra::Matrix3<T>;
pub type Mat4<T> = nalgebra::Matrix4<T>;
pub type Quat<T> = Quaternion<T>;
pub type UnitQuat<T> = UnitQuaternion<T>;

/// Skew-symmetric matrix of the cross product: `hat(v) w = v x w`.
pub fn hat<T: Real>(v: &Vec3<T>) -> Mat3<T> {
    let z = T::zero();
    Mat3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

/// Axial vector of the skew part of `m`. Inverse of [`hat`] on skew input.
pub fn axl<T: Real>(m: &Mat3<T>) -> Vec3<T> {
    let half = real::<T>(0.5);
    Vec3::new(
        (m[(2, 1)] - m[(1, 2)]) * half,
        (m[(0, 2)] - m[(2, 0)]) * half,
        (m[(1, 0)] - m[(0, 1)]) * half,
    )
}

/// [`axl`] with a skew-symmetry check: the symmetric part must be below
/// `tol` in Frobenius norm before it is discarded.
pub fn axl_checked<T: Real>(m: &Mat3<T>, tol: T) -> Result<Vec3<T>> {
    let sym = (m + m.transpose()) * real::<T>(0.5);
    let deviation = sym.norm();
    if deviation > tol {
        return Err(ShellError::NotSkew {
            deviation: to_f64(deviation),
            tol: to_f64(tol),
        });
    }
    Ok(axl(m))
}

/// Symmetric part of a 2x2 matrix.
pub fn sym2<T: Real>(m: &Mat2<T>) -> Mat2<T> {
    (m + m.transpose()) * real::<T>(0.5)
}

/// Skew part of a 2x2 matrix.
pub fn skew2<T: Real>(m: &Mat2<T>) -> Mat2<T> {
    (m - m.transpose()) * real::<T>(0.5)
}

/// Trace-free part of a 2x2 matrix.
pub fn dev2<T: Real>(m: &Mat2<T>) -> Mat2<T> {
    m - Mat2::identity() * (m.trace() * real::<T>(0.5))
}

/// Result of a polar decomposition `T = Q U`.
#[derive(Debug, Clone)]
pub struct PolarDecomposition<T: Real> {
    /// Proper orthogonal factor.
    pub q: Mat3<T>,
    /// Symmetric positive definite stretch factor.
    pub u: Mat3<T>,
}

/// Polar decomposition of a 3x3 matrix with positive determinant.
///
/// Newton iteration `Q <- (Q + Q^-T)/2`, which converges quadratically to
/// the orthogonal factor for any input with `det > 0`. `det_tol` is the
/// singularity threshold on the determinant.
pub fn polar_decompose<T: Real>(m: &Mat3<T>, det_tol: T) -> Result<PolarDecomposition<T>> {
    let det = m.determinant();
    if det <= det_tol {
        return Err(ShellError::SingularMatrix {
            det: to_f64(det),
            tol: to_f64(det_tol),
        });
    }
    let conv = real::<T>(1e-14).max(T::default_epsilon() * real::<T>(8.0));
    let half = real::<T>(0.5);
    let mut q = *m;
    let max_iter = 100;
    for _ in 0..max_iter {
        let q_inv_t = q
            .try_inverse()
            .ok_or(ShellError::NonConvergence {
                what: "polar decomposition",
                iterations: max_iter,
            })?
            .transpose();
        let next = (q + q_inv_t) * half;
        let delta = (next - q).norm();
        q = next;
        if delta <= conv {
            let u = q.transpose() * m;
            let u = (u + u.transpose()) * half;
            return Ok(PolarDecomposition { q, u });
        }
    }
    Err(ShellError::NonConvergence {
        what: "polar decomposition",
        iterations: max_iter,
    })
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues<T: Real, const N: usize>(m: &SMatrix<T, N, N>) -> Vec<T> {
    let mut a = *m;
    let tol = real::<T>(1e-12).max(T::default_epsilon() * real::<T>(16.0));
    let scale = a.norm().max(T::one());
    for _ in 0..100 {
        let mut off = T::zero();
        for p in 0..N {
            for q in (p + 1)..N {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= tol * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[(p, q)];
                if apq.abs() <= tol * scale * real::<T>(1e-3) {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (apq * real::<T>(2.0));
                // stable tangent of the rotation angle
                let t = {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..N).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Smallest eigenvalue of a symmetric 2x2 matrix, in closed form.
pub fn eig2_min<T: Real>(m: &Mat2<T>) -> T {
    let half = real::<T>(0.5);
    let mean = (m[(0, 0)] + m[(1, 1)]) * half;
    let diff = (m[(0, 0)] - m[(1, 1)]) * half;
    let rad = (diff * diff + m[(0, 1)] * m[(1, 0)]).max(T::zero()).sqrt();
    mean - rad
}

/// Imaginary part of a quaternion as a 3-vector.
#[inline]
pub fn quat_imag<T: Real>(q: &Quat<T>) -> Vec3<T> {
    Vec3::new(q.coords.x, q.coords.y, q.coords.z)
}

/// Quaternion with zero scalar part.
#[inline]
pub fn pure_quat<T: Real>(v: &Vec3<T>) -> Quat<T> {
    Quat::from_parts(T::zero(), *v)
}

/// Rotation matrix of a unit quaternion as a plain 3x3 matrix.
#[inline]
pub fn quat_to_mat<T: Real>(q: &UnitQuat<T>) -> Mat3<T> {
    q.to_rotation_matrix().into_inner()
}

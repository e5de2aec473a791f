//! Unknown fields `(y, R)` on a structured grid and the elastic strain and
//! curvature measures derived from them.
//!
//! The reference configuration enters the strain measures through the same
//! bilinear interpolants as the unknowns, so the undeformed state and every
//! rigid motion of it produce exactly vanishing strain matrices.

pub(crate) mod interp;
#[cfg(test)]
mod tests;

use rand::Rng;

use crate::error::{Result, ShellError};
use crate::geometry::{Grid, SurfaceGeometry};
use crate::linalg::{Mat2, Mat3, Quat, UnitQuat, Vec2, Vec3};
use crate::num::{real, to_f64, Real};

pub use crate::linalg::{axl, axl_checked, hat};

use interp::{eval_field, FieldEval};

/// Discrete configuration: per-node positions and rotations (unit
/// quaternions) on a structured grid over the parameter domain.
#[derive(Debug, Clone)]
pub struct ShellConfiguration<T: Real> {
    pub grid: Grid<T>,
    pub y: Vec<Vec3<T>>,
    pub q: Vec<UnitQuat<T>>,
}

impl<T: Real> ShellConfiguration<T> {
    /// Reference configuration: nodal surface positions and polar-frame
    /// rotations, with quaternion signs aligned between neighbors.
    pub fn reference(surface: &SurfaceGeometry<T>, grid: &Grid<T>) -> Result<Self> {
        let mut y = Vec::with_capacity(grid.node_count());
        let mut q: Vec<UnitQuat<T>> = Vec::with_capacity(grid.node_count());
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                let x = grid.node(i, j);
                let f = surface.frame_at(x)?;
                y.push(surface.position(x));
                let rot = nalgebra::Rotation3::from_matrix_unchecked(f.q0);
                let mut uq = UnitQuat::from_rotation_matrix(&rot);
                // hemisphere continuity with the already-built neighbors
                let neighbor = if i > 0 {
                    Some(q[grid.index(i - 1, j)])
                } else if j > 0 {
                    Some(q[grid.index(i, j - 1)])
                } else {
                    None
                };
                if let Some(nb) = neighbor {
                    if uq.coords.dot(&nb.coords) < T::zero() {
                        uq = UnitQuat::new_unchecked(-*uq.quaternion());
                    }
                }
                q.push(uq);
            }
        }
        Ok(ShellConfiguration {
            grid: grid.clone(),
            y,
            q,
        })
    }

    /// Interpolated position at a domain point.
    pub fn position_at(&self, x: [T; 2]) -> Result<Vec3<T>> {
        let (ci, cj, s, t) = self.grid.locate(x)?;
        Ok(eval_field(self, ci, cj, s, t)?.y)
    }

    /// Interpolated (normalized) rotation at a domain point.
    pub fn rotation_at(&self, x: [T; 2]) -> Result<UnitQuat<T>> {
        let (ci, cj, s, t) = self.grid.locate(x)?;
        Ok(UnitQuat::new_unchecked(eval_field(self, ci, cj, s, t)?.q))
    }

    /// Restores unit norm on every nodal quaternion.
    pub fn renormalize(&mut self) {
        for q in &mut self.q {
            *q = UnitQuat::new_normalize(*q.quaternion());
        }
    }

    /// Largest deviation of a nodal quaternion norm from one.
    pub fn max_quaternion_norm_deviation(&self) -> T {
        self.q
            .iter()
            .map(|q| (q.quaternion().norm() - T::one()).abs())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Applies a rigid motion `y -> rot y + shift`, `R -> rot R` to every node.
    pub fn rigidly_transformed(&self, rot: &UnitQuat<T>, shift: &Vec3<T>) -> Self {
        let y = self.y.iter().map(|p| rot.transform_vector(p) + shift).collect();
        let q = self.q.iter().map(|q| rot * q).collect();
        ShellConfiguration {
            grid: self.grid.clone(),
            y,
            q,
        }
    }

    /// Randomly perturbed copy: positions by a uniform box of half-width
    /// `y_mag`, rotations by exponentials of axis vectors up to `r_mag`.
    pub fn perturbed<R: Rng>(&self, rng: &mut R, y_mag: T, r_mag: T) -> Self {
        let mut out = self.clone();
        for p in &mut out.y {
            for k in 0..3 {
                p[k] += y_mag * real::<T>(rng.random_range(-1.0..1.0));
            }
        }
        for q in &mut out.q {
            let axis = Vec3::new(
                real::<T>(rng.random_range(-1.0..1.0)),
                real::<T>(rng.random_range(-1.0..1.0)),
                real::<T>(rng.random_range(-1.0..1.0)),
            ) * r_mag;
            *q = *q * UnitQuat::from_scaled_axis(axis);
        }
        out
    }
}

/// Reference configuration sampled on the grid, reused by strain evaluation
/// and the solver.
#[derive(Debug, Clone)]
pub struct ReferenceConfiguration<T: Real> {
    pub nodes: ShellConfiguration<T>,
}

impl<T: Real> ReferenceConfiguration<T> {
    pub fn new(surface: &SurfaceGeometry<T>, grid: &Grid<T>) -> Result<Self> {
        Ok(ReferenceConfiguration {
            nodes: ShellConfiguration::reference(surface, grid)?,
        })
    }

    pub(crate) fn eval(&self, ci: usize, cj: usize, s: T, t: T) -> Result<ReferencePoint<T>> {
        let e = eval_field(&self.nodes, ci, cj, s, t)?;
        ReferencePoint::from_eval(&e)
    }

    /// Regularity report of the interpolated reference surface, the surface
    /// the discrete strain measures are actually built on. Its metric
    /// differs from the chart metric by the interpolation error, so the
    /// strain lower bound `|E| >= lambda0 |H|` is exact with this report's
    /// `lambda0` but only approximate with the chart's.
    ///
    /// Samples each cell at its corners, edge midpoints, center, and 2x2
    /// Gauss points.
    pub fn regularity_report(&self, threshold: T) -> Result<crate::geometry::RegularityReport<T>> {
        let grid = &self.nodes.grid;
        let g = real::<T>(0.5) / real::<T>(3.0).sqrt();
        let half = real::<T>(0.5);
        let samples: [(T, T); 9] = [
            (T::zero(), T::zero()),
            (T::one(), T::zero()),
            (T::zero(), T::one()),
            (T::one(), T::one()),
            (half, half),
            (half - g, half - g),
            (half + g, half - g),
            (half - g, half + g),
            (half + g, half + g),
        ];
        let mut a0 = T::max_value().unwrap_or_else(T::one);
        let mut lambda0_sq = a0;
        for cj in 0..grid.n2 - 1 {
            for ci in 0..grid.n1 - 1 {
                for (s, t) in samples {
                    let e = eval_field(&self.nodes, ci, cj, s, t)?;
                    let (a1, a2) = (e.dy[0], e.dy[1]);
                    let a_cov = Mat2::new(a1.dot(&a1), a1.dot(&a2), a1.dot(&a2), a2.dot(&a2));
                    let det = a_cov.determinant();
                    if det <= T::zero() {
                        return Ok(crate::geometry::RegularityReport {
                            a0: T::zero(),
                            lambda0: T::zero(),
                            threshold,
                            pass: false,
                        });
                    }
                    let a_con = a_cov.try_inverse().expect("det > 0");
                    a0 = a0.min(det.sqrt());
                    lambda0_sq = lambda0_sq.min(crate::linalg::eig2_min(&a_con));
                }
            }
        }
        Ok(crate::geometry::RegularityReport {
            a0,
            lambda0: lambda0_sq.max(T::zero()).sqrt(),
            threshold,
            pass: a0 > threshold,
        })
    }
}

/// Reference quantities entering the strain measures at a single point.
#[derive(Debug, Clone)]
pub(crate) struct ReferencePoint<T: Real> {
    pub y0: Vec3<T>,
    pub dy0: [Vec3<T>; 2],
    pub n0: Vec3<T>,
    /// Shifter of the interpolated reference, `(d1 y0 | d2 y0 | n0)`.
    pub p: Mat3<T>,
    pub p_inv: Mat3<T>,
    /// Interpolated initial rotation and its matrix.
    pub q0: Quat<T>,
    pub r0: Mat3<T>,
    /// `Q0^T d_alpha y0`.
    pub c0: [Vec3<T>; 2],
    /// `axl(Q0^T d_alpha Q0)`.
    pub omega0: [Vec3<T>; 2],
    /// Director frame for strain components: the polar factor of `p`.
    /// Its third column is the unit normal, which zeroes the third frame
    /// column of the measures.
    pub frame: Mat3<T>,
    /// `frame^T R0`: left factor of `E_frame = Z1 H Z2`.
    pub z1: Mat3<T>,
    /// `P^-1 frame`: right factor.
    pub z2: Mat3<T>,
    /// Area density `det P`.
    pub area: T,
}

impl<T: Real> ReferencePoint<T> {
    fn from_eval(e: &FieldEval<T>) -> Result<Self> {
        let w = e.dy[0].cross(&e.dy[1]);
        let wn = w.norm();
        let scale = (e.dy[0].norm() * e.dy[1].norm()).max(T::default_epsilon());
        if wn <= scale * real::<T>(1e-10) {
            return Err(ShellError::DegenerateParametrization {
                x: [f64::NAN, f64::NAN],
                cross_norm: to_f64(wn),
            });
        }
        let n0 = w / wn;
        let p = Mat3::from_columns(&[e.dy[0], e.dy[1], n0]);
        let p_inv = p.try_inverse().expect("det P = |a1 x a2| > 0");
        let frame = crate::linalg::polar_decompose(&p, T::zero())?.q;
        let r0 = e.r;
        Ok(ReferencePoint {
            y0: e.y,
            dy0: e.dy,
            n0,
            p,
            p_inv,
            q0: e.q,
            r0,
            c0: [
                r0.transpose() * e.dy[0],
                r0.transpose() * e.dy[1],
            ],
            omega0: e.omega,
            frame,
            z1: frame.transpose() * r0,
            z2: p_inv * frame,
            area: wn,
        })
    }
}

/// Elastic strain and curvature measures at one point, with components both
/// in the fixed basis and in the reference director frame.
#[derive(Debug, Clone)]
pub struct StrainState<T: Real> {
    /// Strain measure, components in the fixed basis.
    pub e: Mat3<T>,
    /// Curvature measure, components in the fixed basis.
    pub k: Mat3<T>,
    /// Director-frame components; third column is identically zero.
    pub e_frame: Mat3<T>,
    pub k_frame: Mat3<T>,
    /// In-plane 2x2 blocks of the frame components.
    pub e_inplane: Mat2<T>,
    pub k_inplane: Mat2<T>,
    /// Transverse components (third frame row).
    pub e_transverse: Vec2<T>,
    pub k_transverse: Vec2<T>,
    /// Rotation whose columns are the director frame the components refer to;
    /// its third column is the reference unit normal.
    pub frame: Mat3<T>,
}

impl<T: Real> StrainState<T> {
    /// Builds the state from fixed-basis measures and a director frame.
    ///
    /// The third frame column is zeroed: it vanishes identically by the
    /// structure of the measures, and discarding the round-off there keeps
    /// the stored invariant exact.
    pub fn from_global(e: Mat3<T>, k: Mat3<T>, frame: Mat3<T>) -> Self {
        let mut e_frame = frame.transpose() * e * frame;
        let mut k_frame = frame.transpose() * k * frame;
        for r in 0..3 {
            e_frame[(r, 2)] = T::zero();
            k_frame[(r, 2)] = T::zero();
        }
        Self::from_parts(e, k, e_frame, k_frame, frame)
    }

    /// Builds the state from director-frame blocks.
    pub fn from_frame_parts(
        e_inplane: Mat2<T>,
        e_transverse: Vec2<T>,
        k_inplane: Mat2<T>,
        k_transverse: Vec2<T>,
        frame: Mat3<T>,
    ) -> Self {
        let assemble = |ip: &Mat2<T>, tr: &Vec2<T>| {
            let z = T::zero();
            Mat3::new(
                ip[(0, 0)],
                ip[(0, 1)],
                z,
                ip[(1, 0)],
                ip[(1, 1)],
                z,
                tr[0],
                tr[1],
                z,
            )
        };
        let e_frame = assemble(&e_inplane, &e_transverse);
        let k_frame = assemble(&k_inplane, &k_transverse);
        let e = frame * e_frame * frame.transpose();
        let k = frame * k_frame * frame.transpose();
        Self::from_parts(e, k, e_frame, k_frame, frame)
    }

    fn from_parts(e: Mat3<T>, k: Mat3<T>, e_frame: Mat3<T>, k_frame: Mat3<T>, frame: Mat3<T>) -> Self {
        let block = |m: &Mat3<T>| Mat2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let row3 = |m: &Mat3<T>| Vec2::new(m[(2, 0)], m[(2, 1)]);
        StrainState {
            e,
            k,
            e_inplane: block(&e_frame),
            k_inplane: block(&k_frame),
            e_transverse: row3(&e_frame),
            k_transverse: row3(&k_frame),
            e_frame,
            k_frame,
            frame,
        }
    }

    /// Frobenius norms of the two measures.
    pub fn norms(&self) -> (T, T) {
        (self.e.norm(), self.k.norm())
    }
}

/// Strain matrices `H` and `L` at a domain point: columns
/// `R^T d_alpha y - Q0^T d_alpha y0` and
/// `axl(R^T d_alpha R) - axl(Q0^T d_alpha Q0)`, third column zero.
pub fn strain_matrices<T: Real>(
    config: &ShellConfiguration<T>,
    reference: &ReferenceConfiguration<T>,
    x: [T; 2],
) -> Result<(Mat3<T>, Mat3<T>)> {
    check_grids(config, reference)?;
    let (ci, cj, s, t) = config.grid.locate(x)?;
    let def = eval_field(config, ci, cj, s, t)?;
    let rp = reference.eval(ci, cj, s, t)?;
    Ok(strain_hl(&def, &rp))
}

pub(crate) fn strain_hl<T: Real>(def: &FieldEval<T>, rp: &ReferencePoint<T>) -> (Mat3<T>, Mat3<T>) {
    let rt = def.r.transpose();
    let h = Mat3::from_columns(&[
        rt * def.dy[0] - rp.c0[0],
        rt * def.dy[1] - rp.c0[1],
        Vec3::zeros(),
    ]);
    let l = Mat3::from_columns(&[
        def.omega[0] - rp.omega0[0],
        def.omega[1] - rp.omega0[1],
        Vec3::zeros(),
    ]);
    (h, l)
}

pub(crate) fn strain_from_evals<T: Real>(def: &FieldEval<T>, rp: &ReferencePoint<T>) -> StrainState<T> {
    let (h, l) = strain_hl(def, rp);
    let e = rp.r0 * h * rp.p_inv;
    let k = rp.r0 * l * rp.p_inv;
    let mut e_frame = rp.z1 * h * rp.z2;
    let mut k_frame = rp.z1 * l * rp.z2;
    for r in 0..3 {
        e_frame[(r, 2)] = T::zero();
        k_frame[(r, 2)] = T::zero();
    }
    StrainState::from_parts(e, k, e_frame, k_frame, rp.frame)
}

/// Elastic strain measure `E = Q0 H P^-1` and curvature measure
/// `K = Q0 L P^-1` at a domain point, with director-frame components.
pub fn elastic_strain<T: Real>(
    config: &ShellConfiguration<T>,
    reference: &ReferenceConfiguration<T>,
    x: [T; 2],
) -> Result<StrainState<T>> {
    check_grids(config, reference)?;
    let (ci, cj, s, t) = config.grid.locate(x)?;
    let def = eval_field(config, ci, cj, s, t)?;
    let rp = reference.eval(ci, cj, s, t)?;
    Ok(strain_from_evals(&def, &rp))
}

/// Stretch tensor and the multiplicative split of the deformation gradient.
#[derive(Debug, Clone)]
pub struct StretchGradients<T: Real> {
    /// Non-symmetric elastic shell stretch tensor; `E = u_bar - I`.
    pub u_bar: Mat3<T>,
    /// Elastic mid-surface deformation gradient.
    pub f_e: Mat3<T>,
    /// Reconstructed total gradient `(d1 y | d2 y | Q^e n0)`.
    pub f_bar: Mat3<T>,
    /// Initial gradient, the shifter `P`.
    pub f0: Mat3<T>,
}

/// Computes `u_bar`, `F^e`, `F_bar` and `F0 = P`; `F_bar = F^e F0` holds by
/// construction.
pub fn stretch_and_gradients<T: Real>(
    config: &ShellConfiguration<T>,
    reference: &ReferenceConfiguration<T>,
    x: [T; 2],
) -> Result<StretchGradients<T>> {
    check_grids(config, reference)?;
    let (ci, cj, s, t) = config.grid.locate(x)?;
    let def = eval_field(config, ci, cj, s, t)?;
    let rp = reference.eval(ci, cj, s, t)?;
    let q_e = def.r * rp.r0.transpose();
    let f_bar = Mat3::from_columns(&[def.dy[0], def.dy[1], q_e * rp.n0]);
    let f_e = f_bar * rp.p_inv;
    Ok(StretchGradients {
        u_bar: q_e.transpose() * f_e,
        f_e,
        f_bar,
        f0: rp.p,
    })
}

/// Reconstructed 3D deformation `phi = y + x3 Q^e n0` through the thickness.
pub fn reconstruct_deformed<T: Real>(
    config: &ShellConfiguration<T>,
    reference: &ReferenceConfiguration<T>,
    x: [T; 2],
    x3: T,
    thickness: T,
) -> Result<Vec3<T>> {
    check_thickness(x3, thickness)?;
    check_grids(config, reference)?;
    let (ci, cj, s, t) = config.grid.locate(x)?;
    let def = eval_field(config, ci, cj, s, t)?;
    let rp = reference.eval(ci, cj, s, t)?;
    let q_e = def.r * rp.r0.transpose();
    Ok(def.y + q_e * rp.n0 * x3)
}

/// Reconstructed reference map `Theta = y0 + x3 n0`.
pub fn reconstruct_reference<T: Real>(
    reference: &ReferenceConfiguration<T>,
    x: [T; 2],
    x3: T,
    thickness: T,
) -> Result<Vec3<T>> {
    check_thickness(x3, thickness)?;
    let (ci, cj, s, t) = reference.nodes.grid.locate(x)?;
    let rp = reference.eval(ci, cj, s, t)?;
    Ok(rp.y0 + rp.n0 * x3)
}

fn check_thickness<T: Real>(x3: T, thickness: T) -> Result<()> {
    let half = thickness * real::<T>(0.5);
    let tol = thickness * T::default_epsilon() * real::<T>(8.0);
    if x3.abs() > half + tol {
        return Err(ShellError::OutOfThickness {
            x3: to_f64(x3),
            h: to_f64(thickness),
        });
    }
    Ok(())
}

fn check_grids<T: Real>(
    config: &ShellConfiguration<T>,
    reference: &ReferenceConfiguration<T>,
) -> Result<()> {
    let a = &config.grid;
    let b = &reference.nodes.grid;
    if a.n1 != b.n1 || a.n2 != b.n2 || a.domain != b.domain {
        return Err(ShellError::GridMismatch {
            expected: (b.n1, b.n2),
            got: (a.n1, a.n2),
        });
    }
    Ok(())
}

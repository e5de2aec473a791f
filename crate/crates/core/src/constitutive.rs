//! Quadratic strain-energy densities of the resultant shell model and the
//! positivity conditions under which they are coercive.
//!
//! Four families are implemented: the engineering isotropic form with
//! stretching/bending stiffnesses `C`, `D` and shear correction factors;
//! the general isotropic form with coefficients `alpha_1..4`, `beta_1..4`
//! including the drill-rotation term; the orthotropic form with 4x4 and
//! 2x2 coefficient matrices; and the composite (layered) form with
//! membrane/bending coupling.
//!
//! All energies are evaluated on the director-frame components of a
//! [`StrainState`]. In-plane 2x2 blocks are flattened in the component
//! order `(11, 22, 12, 21)` wherever coefficient matrices appear.

use nalgebra::SMatrix;

use crate::error::{Result, ShellError};
use crate::kinematics::StrainState;
use crate::linalg::{dev2, jacobi_eigenvalues, skew2, sym2, Mat2, Mat3, Mat4, Vec2};
use crate::num::{real, Real};

/// Default in-plane transverse shear correction factor (5/6).
pub fn default_alpha_s<T: Real>() -> T {
    real::<T>(5.0) / real::<T>(6.0)
}

/// Default drilling/twist shear correction factor (7/10).
pub fn default_alpha_t<T: Real>() -> T {
    real::<T>(7.0) / real::<T>(10.0)
}

/// Engineering isotropic shell: Young modulus, Poisson ratio, thickness,
/// and the two shear correction factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicSimple<T: Real> {
    pub young: T,
    pub poisson: T,
    pub thickness: T,
    pub alpha_s: T,
    pub alpha_t: T,
}

impl<T: Real> IsotropicSimple<T> {
    /// With the classical shear correction values `5/6` and `7/10`.
    pub fn new(young: T, poisson: T, thickness: T) -> Self {
        IsotropicSimple {
            young,
            poisson,
            thickness,
            alpha_s: default_alpha_s(),
            alpha_t: default_alpha_t(),
        }
    }

    /// Stretching stiffness `C = E h / (1 - nu^2)`.
    pub fn membrane_stiffness(&self) -> T {
        self.young * self.thickness / (T::one() - self.poisson * self.poisson)
    }

    /// Bending stiffness `D = E h^3 / (12 (1 - nu^2))`.
    pub fn bending_stiffness(&self) -> T {
        let h = self.thickness;
        self.young * h * h * h / (real::<T>(12.0) * (T::one() - self.poisson * self.poisson))
    }
}

/// General isotropic shell with membrane coefficients `alpha_1..4` and
/// bending coefficients `beta_1..4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicGeneral<T: Real> {
    pub alpha: [T; 4],
    pub beta: [T; 4],
}

impl<T: Real> IsotropicGeneral<T> {
    /// In-plane rotational couple modulus `alpha_3 - alpha_2`.
    pub fn drill_modulus(&self) -> T {
        self.alpha[2] - self.alpha[1]
    }
}

/// Orthotropic shell: membrane/bending 4x4 matrices over the in-plane
/// components `(11, 22, 12, 21)` plus transverse 2x2 matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Orthotropic<T: Real> {
    pub c_e: Mat4<T>,
    pub c_k: Mat4<T>,
    pub d_e: Mat2<T>,
    pub d_k: Mat2<T>,
}

/// Composite layered shell: membrane `A`, bending `D`, coupling `B`
/// (4x4, same component order), transverse `S` and `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Composite<T: Real> {
    pub a: Mat4<T>,
    pub b: Mat4<T>,
    pub d: Mat4<T>,
    pub s: Mat2<T>,
    pub g: Mat2<T>,
}

/// Tagged union over the four constitutive families.
#[derive(Debug, Clone, PartialEq)]
pub enum MaterialModel<T: Real> {
    IsotropicSimple(IsotropicSimple<T>),
    IsotropicGeneral(IsotropicGeneral<T>),
    Orthotropic(Orthotropic<T>),
    Composite(Composite<T>),
}

/// Outcome of the positivity validation of a material.
#[derive(Debug, Clone)]
pub struct PositivityReport<T: Real> {
    pub family: &'static str,
    pub pass: bool,
    /// Names of the violated inequalities; empty iff `pass`.
    pub failed_conditions: Vec<String>,
    /// Coercivity constant `C0` with `W >= C0 (|E|^2 + |K|^2)`;
    /// zero when validation fails.
    pub coercivity_constant: T,
}

/// Labeled decomposition of the general isotropic membrane energy plus the
/// full curvature part; the parts sum to the energy density.
#[derive(Debug, Clone, Copy)]
pub struct EnergySplit<T: Real> {
    pub shear_stretch: T,
    pub drill: T,
    pub elongation: T,
    pub transverse: T,
    pub curvature: T,
}

impl<T: Real> EnergySplit<T> {
    pub fn total(&self) -> T {
        self.shear_stretch + self.drill + self.elongation + self.transverse + self.curvature
    }
}

/// Flattens a 2x2 in-plane block in the order `(11, 22, 12, 21)`.
fn flatten<T: Real>(m: &Mat2<T>) -> nalgebra::Vector4<T> {
    nalgebra::Vector4::new(m[(0, 0)], m[(1, 1)], m[(0, 1)], m[(1, 0)])
}

fn unflatten<T: Real>(v: &nalgebra::Vector4<T>) -> Mat2<T> {
    Mat2::new(v[0], v[2], v[3], v[1])
}

impl<T: Real> MaterialModel<T> {
    pub fn family_name(&self) -> &'static str {
        match self {
            MaterialModel::IsotropicSimple(_) => "isotropic-simple",
            MaterialModel::IsotropicGeneral(_) => "isotropic-general",
            MaterialModel::Orthotropic(_) => "orthotropic",
            MaterialModel::Composite(_) => "composite",
        }
    }

    /// Strain energy density per unit reference area.
    pub fn energy_density(&self, s: &StrainState<T>) -> T {
        let half = real::<T>(0.5);
        match self {
            MaterialModel::IsotropicSimple(m) => {
                let c = m.membrane_stiffness();
                let d = m.bending_stiffness();
                let nu = m.poisson;
                let one = T::one();
                let te = s.e_inplane.trace();
                let tk = s.k_inplane.trace();
                let membrane = c * (nu * te * te + (one - nu) * s.e_inplane.norm_squared())
                    + m.alpha_s * c * (one - nu) * s.e_transverse.norm_squared();
                let bending = d * (nu * tk * tk + (one - nu) * s.k_inplane.norm_squared())
                    + m.alpha_t * d * (one - nu) * s.k_transverse.norm_squared();
                half * (membrane + bending)
            }
            MaterialModel::IsotropicGeneral(m) => {
                let part = |ip: &Mat2<T>, tr: &Vec2<T>, c: &[T; 4]| {
                    let t = ip.trace();
                    c[0] * t * t
                        + c[1] * (ip * ip).trace()
                        + c[2] * ip.norm_squared()
                        + c[3] * tr.norm_squared()
                };
                half * (part(&s.e_inplane, &s.e_transverse, &m.alpha)
                    + part(&s.k_inplane, &s.k_transverse, &m.beta))
            }
            MaterialModel::Orthotropic(m) => {
                let ve = flatten(&s.e_inplane);
                let vk = flatten(&s.k_inplane);
                half * ((m.c_e * ve).dot(&ve)
                    + (m.c_k * vk).dot(&vk)
                    + (m.d_e * s.e_transverse).dot(&s.e_transverse)
                    + (m.d_k * s.k_transverse).dot(&s.k_transverse))
            }
            MaterialModel::Composite(m) => {
                let ve = flatten(&s.e_inplane);
                let vk = flatten(&s.k_inplane);
                half * ((m.a * ve).dot(&ve)
                    + (m.d * vk).dot(&vk)
                    + (m.b * vk).dot(&ve)
                    + (m.b * ve).dot(&vk)
                    + (m.s * s.e_transverse).dot(&s.e_transverse)
                    + (m.g * s.k_transverse).dot(&s.k_transverse))
            }
        }
    }

    /// Energy density with the validation gate: errors on a non-validated
    /// material when `strict` is set.
    pub fn energy_density_checked(&self, s: &StrainState<T>, strict: bool) -> Result<T> {
        if strict {
            let report = self.validate();
            if !report.pass {
                return Err(ShellError::Validation(format!(
                    "{} material fails positivity: {}",
                    self.family_name(),
                    report.failed_conditions.join("; ")
                )));
            }
        }
        Ok(self.energy_density(s))
    }

    /// Alternative grouped form of the engineering isotropic energy
    /// (deviator/skew/trace split); equal to [`Self::energy_density`] for
    /// that family, kept as an independent cross-check route.
    pub fn energy_density_alt_iso(&self, s: &StrainState<T>) -> Result<T> {
        let m = match self {
            MaterialModel::IsotropicSimple(m) => m,
            other => {
                return Err(ShellError::InvalidFamily {
                    expected: "isotropic-simple",
                    got: other.family_name(),
                })
            }
        };
        let half = real::<T>(0.5);
        let one = T::one();
        let c = m.membrane_stiffness();
        let d = m.bending_stiffness();
        let nu = m.poisson;
        let part = |ip: &Mat2<T>, tr: &Vec2<T>, stiff: T, alpha: T| {
            let t = ip.trace();
            stiff * (one - nu) * (dev2(&sym2(ip)).norm_squared() + skew2(ip).norm_squared())
                + stiff * (one + nu) * half * t * t
                + alpha * stiff * (one - nu) * tr.norm_squared()
        };
        Ok(half
            * (part(&s.e_inplane, &s.e_transverse, c, m.alpha_s)
                + part(&s.k_inplane, &s.k_transverse, d, m.alpha_t)))
    }

    /// Labeled decomposition of the general isotropic energy: in-plane
    /// shear-stretch, drill rotation, elongational stretch, transverse
    /// shear, and the curvature part.
    pub fn split_energy_general_iso(&self, s: &StrainState<T>) -> Result<EnergySplit<T>> {
        let m = match self {
            MaterialModel::IsotropicGeneral(m) => m,
            other => {
                return Err(ShellError::InvalidFamily {
                    expected: "isotropic-general",
                    got: other.family_name(),
                })
            }
        };
        let half = real::<T>(0.5);
        let [a1, a2, a3, a4] = m.alpha;
        let te = s.e_inplane.trace();
        let curvature = {
            let [b1, b2, b3, b4] = m.beta;
            let t = s.k_inplane.trace();
            half * (b1 * t * t
                + b2 * (s.k_inplane * s.k_inplane).trace()
                + b3 * s.k_inplane.norm_squared()
                + b4 * s.k_transverse.norm_squared())
        };
        Ok(EnergySplit {
            shear_stretch: half * (a2 + a3) * dev2(&sym2(&s.e_inplane)).norm_squared(),
            drill: half * (a3 - a2) * skew2(&s.e_inplane).norm_squared(),
            elongation: half * (a1 + (a2 + a3) * half) * te * te,
            transverse: half * a4 * s.e_transverse.norm_squared(),
            curvature,
        })
    }

    /// Derivatives of the energy density with respect to the director-frame
    /// components: `(dW/dE_frame, dW/dK_frame)`, third columns zero.
    pub(crate) fn frame_gradients(&self, s: &StrainState<T>) -> (Mat3<T>, Mat3<T>) {
        let (de_ip, de_tr, dk_ip, dk_tr) = match self {
            MaterialModel::IsotropicSimple(m) => {
                let c = m.membrane_stiffness();
                let d = m.bending_stiffness();
                let nu = m.poisson;
                let one = T::one();
                (
                    Mat2::identity() * (c * nu * s.e_inplane.trace()) + s.e_inplane * (c * (one - nu)),
                    s.e_transverse * (m.alpha_s * c * (one - nu)),
                    Mat2::identity() * (d * nu * s.k_inplane.trace()) + s.k_inplane * (d * (one - nu)),
                    s.k_transverse * (m.alpha_t * d * (one - nu)),
                )
            }
            MaterialModel::IsotropicGeneral(m) => {
                let part = |ip: &Mat2<T>, c: &[T; 4]| {
                    Mat2::identity() * (c[0] * ip.trace()) + ip.transpose() * c[1] + ip * c[2]
                };
                (
                    part(&s.e_inplane, &m.alpha),
                    s.e_transverse * m.alpha[3],
                    part(&s.k_inplane, &m.beta),
                    s.k_transverse * m.beta[3],
                )
            }
            MaterialModel::Orthotropic(m) => (
                unflatten(&(m.c_e * flatten(&s.e_inplane))),
                m.d_e * s.e_transverse,
                unflatten(&(m.c_k * flatten(&s.k_inplane))),
                m.d_k * s.k_transverse,
            ),
            MaterialModel::Composite(m) => {
                let ve = flatten(&s.e_inplane);
                let vk = flatten(&s.k_inplane);
                let b_sym = (m.b + m.b.transpose()) * real::<T>(0.5);
                (
                    unflatten(&(m.a * ve + b_sym * vk)),
                    m.s * s.e_transverse,
                    unflatten(&(m.d * vk + b_sym * ve)),
                    m.g * s.k_transverse,
                )
            }
        };
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
        (assemble(&de_ip, &de_tr), assemble(&dk_ip, &dk_tr))
    }

    /// Stress resultant and stress couple tensors `N = Q^e dW/dE`,
    /// `M = Q^e dW/dK` in fixed-basis components.
    pub fn stress_resultants(&self, s: &StrainState<T>, q_e: &Mat3<T>) -> (Mat3<T>, Mat3<T>) {
        let (ge, gk) = self.frame_gradients(s);
        let de_global = s.frame * ge * s.frame.transpose();
        let dk_global = s.frame * gk * s.frame.transpose();
        (q_e * de_global, q_e * dk_global)
    }

    /// Symmetric matrix of the quadratic form `2W` over the 12 frame
    /// components `(E_11, E_22, E_12, E_21, E_31, E_32, K_11, ..., K_32)`.
    pub fn quadratic_form_matrix(&self) -> SMatrix<T, 12, 12> {
        let mut m = SMatrix::<T, 12, 12>::zeros();
        let two = real::<T>(2.0);
        match self {
            MaterialModel::IsotropicSimple(iso) => {
                let c = iso.membrane_stiffness();
                let d = iso.bending_stiffness();
                let nu = iso.poisson;
                let one = T::one();
                for (off, stiff, alpha) in [(0, c, iso.alpha_s), (6, d, iso.alpha_t)] {
                    m[(off, off)] = stiff;
                    m[(off + 1, off + 1)] = stiff;
                    m[(off, off + 1)] = stiff * nu;
                    m[(off + 1, off)] = stiff * nu;
                    m[(off + 2, off + 2)] = stiff * (one - nu);
                    m[(off + 3, off + 3)] = stiff * (one - nu);
                    m[(off + 4, off + 4)] = alpha * stiff * (one - nu);
                    m[(off + 5, off + 5)] = alpha * stiff * (one - nu);
                }
            }
            MaterialModel::IsotropicGeneral(gen) => {
                for (off, co) in [(0, &gen.alpha), (6, &gen.beta)] {
                    let [c1, c2, c3, c4] = *co;
                    m[(off, off)] = c1 + c2 + c3;
                    m[(off + 1, off + 1)] = c1 + c2 + c3;
                    m[(off, off + 1)] = c1;
                    m[(off + 1, off)] = c1;
                    m[(off + 2, off + 2)] = c3;
                    m[(off + 3, off + 3)] = c3;
                    m[(off + 2, off + 3)] = c2;
                    m[(off + 3, off + 2)] = c2;
                    m[(off + 4, off + 4)] = c4;
                    m[(off + 5, off + 5)] = c4;
                }
            }
            MaterialModel::Orthotropic(o) => {
                m.fixed_view_mut::<4, 4>(0, 0).copy_from(&o.c_e);
                m.fixed_view_mut::<2, 2>(4, 4).copy_from(&o.d_e);
                m.fixed_view_mut::<4, 4>(6, 6).copy_from(&o.c_k);
                m.fixed_view_mut::<2, 2>(10, 10).copy_from(&o.d_k);
            }
            MaterialModel::Composite(c) => {
                let b_sym = (c.b + c.b.transpose()) / two;
                m.fixed_view_mut::<4, 4>(0, 0).copy_from(&c.a);
                m.fixed_view_mut::<4, 4>(6, 6).copy_from(&c.d);
                m.fixed_view_mut::<4, 4>(0, 6).copy_from(&b_sym);
                m.fixed_view_mut::<4, 4>(6, 0).copy_from(&b_sym.transpose());
                m.fixed_view_mut::<2, 2>(4, 4).copy_from(&c.s);
                m.fixed_view_mut::<2, 2>(10, 10).copy_from(&c.g);
            }
        }
        m
    }

    /// Checks the positivity conditions of the family and computes the
    /// coercivity constant `C0` (half the smallest eigenvalue of the
    /// quadratic-form matrix) when they hold.
    pub fn validate(&self) -> PositivityReport<T> {
        let mut failed: Vec<String> = Vec::new();
        let mut check = |ok: bool, name: &str| {
            if !ok {
                failed.push(name.to_string());
            }
        };
        match self {
            MaterialModel::IsotropicSimple(m) => {
                let half = real::<T>(0.5);
                check(m.young > T::zero(), "E > 0");
                check(m.poisson > -T::one(), "nu > -1");
                check(m.poisson < half, "nu < 1/2");
                check(m.thickness > T::zero(), "h > 0");
                check(m.alpha_s > T::zero(), "alpha_s > 0");
                check(m.alpha_t > T::zero(), "alpha_t > 0");
            }
            MaterialModel::IsotropicGeneral(m) => {
                let two = real::<T>(2.0);
                for (co, tag) in [(&m.alpha, "alpha"), (&m.beta, "beta")] {
                    let [c1, c2, c3, c4] = *co;
                    check(two * c1 + c2 + c3 > T::zero(), &format!("2{tag}1+{tag}2+{tag}3 > 0"));
                    check(c2 + c3 > T::zero(), &format!("{tag}2+{tag}3 > 0"));
                    check(c3 - c2 > T::zero(), &format!("{tag}3-{tag}2 > 0"));
                    check(c4 > T::zero(), &format!("{tag}4 > 0"));
                }
            }
            MaterialModel::Orthotropic(o) => {
                check(is_symmetric4(&o.c_e), "C^E symmetric");
                check(is_symmetric4(&o.c_k), "C^K symmetric");
                check(is_symmetric2(&o.d_e), "D^E symmetric");
                check(is_symmetric2(&o.d_k), "D^K symmetric");
                check(is_pd4(&o.c_e), "C^E positive definite");
                check(is_pd4(&o.c_k), "C^K positive definite");
                check(is_pd2(&o.d_e), "D^E positive definite");
                check(is_pd2(&o.d_k), "D^K positive definite");
            }
            MaterialModel::Composite(c) => {
                check(is_symmetric4(&c.a), "A symmetric");
                check(is_symmetric4(&c.d), "D symmetric");
                check(is_symmetric2(&c.s), "S symmetric");
                check(is_symmetric2(&c.g), "G symmetric");
                let b_sym = (c.b + c.b.transpose()) * real::<T>(0.5);
                let mut block = SMatrix::<T, 8, 8>::zeros();
                block.fixed_view_mut::<4, 4>(0, 0).copy_from(&c.a);
                block.fixed_view_mut::<4, 4>(4, 4).copy_from(&c.d);
                block.fixed_view_mut::<4, 4>(0, 4).copy_from(&b_sym);
                block.fixed_view_mut::<4, 4>(4, 0).copy_from(&b_sym.transpose());
                check(
                    nalgebra::Cholesky::new(block).is_some(),
                    "membrane-bending block [[A,B],[B^T,D]] positive definite",
                );
                check(is_pd2(&c.s), "S positive definite");
                check(is_pd2(&c.g), "G positive definite");
            }
        }
        let mut coercivity_constant = T::zero();
        if failed.is_empty() {
            let eig = jacobi_eigenvalues(&self.quadratic_form_matrix());
            coercivity_constant = eig[0] * real::<T>(0.5);
            if coercivity_constant <= T::zero() {
                coercivity_constant = T::zero();
                failed.push("coercivity constant positive".to_string());
            }
        }
        PositivityReport {
            family: self.family_name(),
            pass: failed.is_empty(),
            failed_conditions: failed,
            coercivity_constant,
        }
    }
}

fn is_symmetric4<T: Real>(m: &Mat4<T>) -> bool {
    *m == m.transpose()
}

fn is_symmetric2<T: Real>(m: &Mat2<T>) -> bool {
    *m == m.transpose()
}

fn is_pd4<T: Real>(m: &Mat4<T>) -> bool {
    nalgebra::Cholesky::new(*m).is_some()
}

fn is_pd2<T: Real>(m: &Mat2<T>) -> bool {
    nalgebra::Cholesky::new(*m).is_some()
}

/// Membrane coefficients `alpha_1..4` of the general isotropic shell from
/// bulk Lame moduli, couple modulus, thickness, and shear correction:
/// `alpha_1 = 2 h mu lambda / (2 mu + lambda)`, `alpha_2 = h (mu - mu_c)`,
/// `alpha_3 = h (mu + mu_c)`, `alpha_4 = kappa h (mu + mu_c)`, so the drill
/// modulus is `alpha_3 - alpha_2 = 2 h mu_c`.
pub fn identify_from_lame<T: Real>(mu: T, lambda: T, mu_c: T, h: T, kappa: T) -> Result<[T; 4]> {
    let two = real::<T>(2.0);
    let three = real::<T>(3.0);
    if mu <= T::zero() {
        return Err(ShellError::InvalidModuli("mu must be positive".into()));
    }
    if two * mu + three * lambda <= T::zero() {
        return Err(ShellError::InvalidModuli("2 mu + 3 lambda must be positive".into()));
    }
    if mu_c < T::zero() {
        return Err(ShellError::InvalidModuli("mu_c must be non-negative".into()));
    }
    if h <= T::zero() {
        return Err(ShellError::InvalidModuli("thickness must be positive".into()));
    }
    if kappa <= T::zero() {
        return Err(ShellError::InvalidModuli("kappa must be positive".into()));
    }
    Ok([
        two * h * mu * lambda / (two * mu + lambda),
        h * (mu - mu_c),
        h * (mu + mu_c),
        kappa * h * (mu + mu_c),
    ])
}

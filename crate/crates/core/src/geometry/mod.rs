//! Reference-surface geometry: parameter domain, structured grids, frames,
//! initial rotation and curvature, Gaussian curvature, regularity data.

mod brioschi;
mod chart;

pub use chart::{Chart, Jet2, SampledChart};

use crate::error::{Result, ShellError};
use crate::linalg::{self, axl, eig2_min, polar_decompose, Mat2, Mat3, Vec3};
use crate::num::{real, to_f64, Real};

/// Rectangular parameter domain `[x1_min, x1_max] x [x2_min, x2_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T: Real> {
    pub x1_min: T,
    pub x1_max: T,
    pub x2_min: T,
    pub x2_max: T,
}

impl<T: Real> Domain<T> {
    pub fn new(x1: [T; 2], x2: [T; 2]) -> Result<Self> {
        if x1[0] >= x1[1] || x2[0] >= x2[1] {
            return Err(ShellError::Validation(
                "parameter domain must have positive extent in both directions".into(),
            ));
        }
        Ok(Domain {
            x1_min: x1[0],
            x1_max: x1[1],
            x2_min: x2[0],
            x2_max: x2[1],
        })
    }

    pub fn extent1(&self) -> T {
        self.x1_max - self.x1_min
    }

    pub fn extent2(&self) -> T {
        self.x2_max - self.x2_min
    }

    pub fn max_extent(&self) -> T {
        self.extent1().max(self.extent2())
    }

    pub fn contains(&self, x: [T; 2]) -> bool {
        let tol = self.max_extent() * T::default_epsilon() * real::<T>(64.0);
        x[0] >= self.x1_min - tol
            && x[0] <= self.x1_max + tol
            && x[1] >= self.x2_min - tol
            && x[1] <= self.x2_max + tol
    }
}

/// Named boundary edge of the parameter rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

    pub fn name(&self) -> &'static str {
        match self {
            Edge::Left => "left",
            Edge::Right => "right",
            Edge::Bottom => "bottom",
            Edge::Top => "top",
        }
    }
}

/// Uniform structured grid of `n1 x n2` nodes over a domain.
///
/// Node `(i, j)` sits at `(x1_min + i h1, x2_min + j h2)`; the flat index is
/// `j * n1 + i` (the `x1` index runs fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T: Real> {
    pub n1: usize,
    pub n2: usize,
    pub domain: Domain<T>,
}

impl<T: Real> Grid<T> {
    pub fn new(n1: usize, n2: usize, domain: Domain<T>) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(ShellError::Validation(format!(
                "grid must have at least 2 nodes per direction, got {n1}x{n2}"
            )));
        }
        Ok(Grid { n1, n2, domain })
    }

    pub fn node_count(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn cell_count(&self) -> (usize, usize) {
        (self.n1 - 1, self.n2 - 1)
    }

    pub fn spacing(&self) -> (T, T) {
        (
            self.domain.extent1() / real::<T>((self.n1 - 1) as f64),
            self.domain.extent2() / real::<T>((self.n2 - 1) as f64),
        )
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n1 && j < self.n2);
        j * self.n1 + i
    }

    pub fn node(&self, i: usize, j: usize) -> [T; 2] {
        let (h1, h2) = self.spacing();
        [
            self.domain.x1_min + h1 * real::<T>(i as f64),
            self.domain.x2_min + h2 * real::<T>(j as f64),
        ]
    }

    /// Cell indices and local coordinates `(s, t) in [0, 1]^2` of a point.
    pub fn locate(&self, x: [T; 2]) -> Result<(usize, usize, T, T)> {
        if !self.domain.contains(x) {
            return Err(ShellError::OutOfDomain {
                x: [to_f64(x[0]), to_f64(x[1])],
            });
        }
        let (h1, h2) = self.spacing();
        let u = (x[0] - self.domain.x1_min) / h1;
        let v = (x[1] - self.domain.x2_min) / h2;
        let max1 = real::<T>((self.n1 - 2) as f64);
        let max2 = real::<T>((self.n2 - 2) as f64);
        let ci = u.floor().max(T::zero()).min(max1);
        let cj = v.floor().max(T::zero()).min(max2);
        let s = u - ci;
        let t = v - cj;
        Ok((
            ci.to_usize().unwrap_or(0),
            cj.to_usize().unwrap_or(0),
            s,
            t,
        ))
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n1 - 1 || j == self.n2 - 1
    }

    /// Nodes of an edge, ordered along the edge.
    pub fn edge_nodes(&self, edge: Edge) -> Vec<(usize, usize)> {
        match edge {
            Edge::Left => (0..self.n2).map(|j| (0, j)).collect(),
            Edge::Right => (0..self.n2).map(|j| (self.n1 - 1, j)).collect(),
            Edge::Bottom => (0..self.n1).map(|i| (i, 0)).collect(),
            Edge::Top => (0..self.n1).map(|i| (i, self.n2 - 1)).collect(),
        }
    }
}

/// How the parametrization derivatives needed by frames, curvatures, and
/// strains are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode<T: Real> {
    Analytic,
    CentralDifference { step: T },
}

impl<T: Real> DerivativeMode<T> {
    /// Default finite-difference step: `1e-5` times the larger domain extent.
    pub fn central_default(domain: &Domain<T>) -> Self {
        DerivativeMode::CentralDifference {
            step: domain.max_extent() * real::<T>(1e-5),
        }
    }
}

/// Geometric data of the reference configuration at a single point.
#[derive(Debug, Clone)]
pub struct FramePoint<T: Real> {
    /// Covariant basis vectors `a_alpha = d y0 / d x_alpha`.
    pub a1: Vec3<T>,
    pub a2: Vec3<T>,
    /// Unit normal.
    pub n0: Vec3<T>,
    /// Covariant metric `a_{alpha beta}`.
    pub a_cov: Mat2<T>,
    /// Contravariant metric `a^{alpha beta} = (a_{alpha beta})^-1`.
    pub a_con: Mat2<T>,
    /// Area density `a = sqrt(det a_cov)`.
    pub area_density: T,
    /// Shifter `P = (a1 | a2 | n0)`.
    pub p: Mat3<T>,
    pub p_inv: Mat3<T>,
    /// Initial rotation, the orthogonal polar factor of `P`.
    pub q0: Mat3<T>,
    /// Symmetric stretch factor of `P = Q0 U0`.
    pub u0: Mat3<T>,
    /// Initial curvature; its third column is zero.
    pub k0: Mat3<T>,
}

/// Minimum regularity quantities over an evaluation grid.
#[derive(Debug, Clone, Copy)]
pub struct RegularityReport<T: Real> {
    /// `min sqrt(det a_cov)` over the grid.
    pub a0: T,
    /// `min sqrt(smallest eigenvalue of a_con)` over the grid.
    pub lambda0: T,
    pub threshold: T,
    pub pass: bool,
}

/// Summary statistics of the Gaussian curvature over interior grid nodes.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureStats<T: Real> {
    pub min: T,
    pub max: T,
    pub mean: T,
    pub samples: usize,
}

/// A parametrized reference surface over a rectangular domain.
#[derive(Debug, Clone)]
pub struct SurfaceGeometry<T: Real> {
    chart: Chart<T>,
    domain: Domain<T>,
    mode: DerivativeMode<T>,
}

impl<T: Real> SurfaceGeometry<T> {
    pub fn new(chart: Chart<T>, domain: Domain<T>, mode: DerivativeMode<T>) -> Result<Self> {
        match &chart {
            Chart::Cylinder { radius } | Chart::Sphere { radius } => {
                if *radius <= T::zero() {
                    return Err(ShellError::Validation("chart radius must be positive".into()));
                }
            }
            _ => {}
        }
        if let Chart::Sphere { .. } = chart {
            // lat-long chart: stay away from the coordinate singularity at the poles
            let cap = real::<T>(std::f64::consts::FRAC_PI_2 - 1e-6);
            if domain.x2_min <= -cap || domain.x2_max >= cap {
                return Err(ShellError::Validation(
                    "sphere domain must exclude the polar caps (|x2| < pi/2)".into(),
                ));
            }
        }
        if let DerivativeMode::CentralDifference { step } = mode {
            if step <= T::zero() {
                return Err(ShellError::Validation("finite-difference step must be positive".into()));
            }
            if domain.max_extent() < step * real::<T>(6.0) {
                return Err(ShellError::Validation(
                    "finite-difference step too large for the domain".into(),
                ));
            }
        }
        Ok(SurfaceGeometry { chart, domain, mode })
    }

    pub fn chart(&self) -> &Chart<T> {
        &self.chart
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn derivative_mode(&self) -> DerivativeMode<T> {
        self.mode
    }

    /// Position of the reference surface; the chart formula is evaluated
    /// even slightly outside the domain (needed by difference stencils).
    pub fn position(&self, x: [T; 2]) -> Vec3<T> {
        self.chart.position(x)
    }

    fn check_domain(&self, x: [T; 2]) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(ShellError::OutOfDomain {
                x: [to_f64(x[0]), to_f64(x[1])],
            })
        }
    }

    /// First/second derivative jet in the configured derivative mode.
    pub fn jet(&self, x: [T; 2]) -> Result<Jet2<T>> {
        match self.mode {
            DerivativeMode::Analytic => Ok(self
                .chart
                .analytic_jet(x)
                .expect("all chart kinds provide a jet")),
            DerivativeMode::CentralDifference { step } => self.fd_jet(x, step),
        }
    }

    fn fd_jet(&self, x: [T; 2], h: T) -> Result<Jet2<T>> {
        let pos1 = |x1: T| self.chart.position([x1, x[1]]);
        let pos2 = |x2: T| self.chart.position([x[0], x2]);
        let d1a = stencil_d1(&pos1, x[0], self.domain.x1_min, self.domain.x1_max, h, x)?;
        let d1b = stencil_d1(&pos2, x[1], self.domain.x2_min, self.domain.x2_max, h, x)?;
        let d2a = stencil_d2(&pos1, x[0], self.domain.x1_min, self.domain.x1_max, h, x)?;
        let d2c = stencil_d2(&pos2, x[1], self.domain.x2_min, self.domain.x2_max, h, x)?;
        // mixed derivative: x2-difference of the x1-difference
        let g = |x2: T| {
            let posx = |x1: T| self.chart.position([x1, x2]);
            stencil_d1(&posx, x[0], self.domain.x1_min, self.domain.x1_max, h, x)
        };
        let d2b = stencil_d1_fallible(&g, x[1], self.domain.x2_min, self.domain.x2_max, h)?;
        Ok(Jet2 {
            y: self.chart.position(x),
            d1: [d1a, d1b],
            d2: [d2a, d2b, d2c],
        })
    }

    /// Covariant basis, metric, shifter, initial rotation and curvature at a
    /// point of the domain.
    pub fn frame_at(&self, x: [T; 2]) -> Result<FramePoint<T>> {
        self.check_domain(x)?;
        let jet = self.jet(x)?;
        let (a1, a2) = (jet.d1[0], jet.d1[1]);
        let w = a1.cross(&a2);
        let wn = w.norm();
        let scale = (a1.norm() * a2.norm()).max(T::default_epsilon());
        if wn <= scale * real::<T>(1e-10) {
            return Err(ShellError::DegenerateParametrization {
                x: [to_f64(x[0]), to_f64(x[1])],
                cross_norm: to_f64(wn),
            });
        }
        let n0 = w / wn;
        let a_cov = Mat2::new(a1.dot(&a1), a1.dot(&a2), a1.dot(&a2), a2.dot(&a2));
        let a_con = a_cov.try_inverse().ok_or(ShellError::DegenerateParametrization {
            x: [to_f64(x[0]), to_f64(x[1])],
            cross_norm: to_f64(wn),
        })?;
        let p = Mat3::from_columns(&[a1, a2, n0]);
        let p_inv = p.try_inverse().expect("det P = a > 0");
        let polar = polar_decompose(&p, T::zero())?;
        let k0 = self.initial_curvature_from(x, &jet, &polar.q, &polar.u, &p_inv, &n0, wn)?;
        Ok(FramePoint {
            a1,
            a2,
            n0,
            a_cov,
            a_con,
            area_density: wn,
            p,
            p_inv,
            q0: polar.q,
            u0: polar.u,
            k0,
        })
    }

    /// Initial rotation `Q0 = polar(P)`; satisfies `Q0 e3 = n0`.
    pub fn initial_rotation(&self, x: [T; 2]) -> Result<Mat3<T>> {
        Ok(self.frame_at(x)?.q0)
    }

    /// Initial curvature `K0 = Q0 (axl(Q0^T d1 Q0) | axl(Q0^T d2 Q0) | 0) P^-1`.
    pub fn initial_curvature(&self, x: [T; 2]) -> Result<Mat3<T>> {
        Ok(self.frame_at(x)?.k0)
    }

    fn initial_curvature_from(
        &self,
        x: [T; 2],
        jet: &Jet2<T>,
        q0: &Mat3<T>,
        u0: &Mat3<T>,
        p_inv: &Mat3<T>,
        n0: &Vec3<T>,
        wn: T,
    ) -> Result<Mat3<T>> {
        let omega = match self.mode {
            DerivativeMode::Analytic => {
                // Differentiate the polar factor through P = Q0 U0:
                // with A = Q0^T dQ0 (skew) one has A U0 + U0 A = skew part
                // of 2 Q0^T dP, and axl(A U0 + U0 A) = (tr(U0) I - U0) axl(A).
                let lhs = (Mat3::identity() * u0.trace() - u0)
                    .try_inverse()
                    .expect("tr(U0) I - U0 is SPD for SPD U0");
                let mut omega = [Vec3::zeros(), Vec3::zeros()];
                for alpha in 0..2 {
                    let da1 = jet.d2[alpha]; // d_alpha a1
                    let da2 = jet.d2[alpha + 1]; // d_alpha a2
                    let dw = da1.cross(&jet.d1[1]) + jet.d1[0].cross(&da2);
                    let dn = (dw - n0 * n0.dot(&dw)) / wn;
                    let dp = Mat3::from_columns(&[da1, da2, dn]);
                    let m = q0.transpose() * dp;
                    let rhs = axl(&(m - m.transpose()));
                    omega[alpha] = lhs * rhs;
                }
                omega
            }
            DerivativeMode::CentralDifference { step } => {
                let rot_at = |p: [T; 2]| -> Result<Mat3<T>> {
                    let j = self.fd_jet(p, step)?;
                    let w = j.d1[0].cross(&j.d1[1]);
                    let n = w / w.norm();
                    let pm = Mat3::from_columns(&[j.d1[0], j.d1[1], n]);
                    Ok(polar_decompose(&pm, T::zero())?.q)
                };
                let mut omega = [Vec3::zeros(), Vec3::zeros()];
                for alpha in 0..2 {
                    let shift = |c: T| -> [T; 2] {
                        let mut p = x;
                        p[alpha] = c;
                        p
                    };
                    let f = |c: T| rot_at(shift(c));
                    let (lo, hi) = if alpha == 0 {
                        (self.domain.x1_min, self.domain.x1_max)
                    } else {
                        (self.domain.x2_min, self.domain.x2_max)
                    };
                    let dq = stencil_d1_mat(&f, x[alpha], lo, hi, step)?;
                    let a = q0.transpose() * dq;
                    omega[alpha] = axl(&a);
                }
                omega
            }
        };
        Ok(q0 * Mat3::from_columns(&[omega[0], omega[1], Vec3::zeros()]) * p_inv)
    }

    /// Intrinsic Gaussian curvature from the first fundamental form and its
    /// first/second differences (the Brioschi determinant formula).
    pub fn gaussian_curvature(&self, x: [T; 2]) -> Result<T> {
        // With an exact metric the step is truncation-limited; with a
        // differenced metric it is round-off-limited and must stay coarser.
        let rel = match self.mode {
            DerivativeMode::Analytic => real::<T>(2e-4),
            DerivativeMode::CentralDifference { .. } => real::<T>(1e-3),
        };
        self.gaussian_curvature_with_step(x, self.domain.max_extent() * rel)
    }

    /// [`Self::gaussian_curvature`] with an explicit metric-difference step.
    pub fn gaussian_curvature_with_step(&self, x: [T; 2], h: T) -> Result<T> {
        self.check_domain(x)?;
        brioschi::gaussian_curvature(self, x, h)
    }

    pub(crate) fn metric_with_step(&self, x: [T; 2], h: T) -> Result<[T; 3]> {
        let (a1, a2) = match self.mode {
            DerivativeMode::Analytic => {
                let jet = self
                    .chart
                    .analytic_jet(x)
                    .expect("all chart kinds provide a jet");
                (jet.d1[0], jet.d1[1])
            }
            DerivativeMode::CentralDifference { .. } => {
                // Second differences of the metric amplify first-derivative
                // noise, so the curvature stencil re-derives the tangents at
                // its own (coarser) step instead of reusing the mode step.
                let two_h = h * real::<T>(2.0);
                let a1 = (self.chart.position([x[0] + h, x[1]])
                    - self.chart.position([x[0] - h, x[1]]))
                    / two_h;
                let a2 = (self.chart.position([x[0], x[1] + h])
                    - self.chart.position([x[0], x[1] - h]))
                    / two_h;
                (a1, a2)
            }
        };
        Ok([a1.dot(&a1), a1.dot(&a2), a2.dot(&a2)])
    }

    /// Minimum area density and metric eigenvalue bound over the grid nodes.
    pub fn regularity_report(&self, grid: &Grid<T>, threshold: T) -> Result<RegularityReport<T>> {
        let mut a0 = T::max_value().unwrap_or_else(T::one);
        let mut lambda0_sq = a0;
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                let x = grid.node(i, j);
                let jet = self.jet(x)?;
                let (a1, a2) = (jet.d1[0], jet.d1[1]);
                let a_cov = Mat2::new(a1.dot(&a1), a1.dot(&a2), a1.dot(&a2), a2.dot(&a2));
                let det = a_cov.determinant();
                if det <= T::zero() {
                    return Ok(RegularityReport {
                        a0: T::zero(),
                        lambda0: T::zero(),
                        threshold,
                        pass: false,
                    });
                }
                let a_con = a_cov.try_inverse().expect("det > 0");
                a0 = a0.min(det.sqrt());
                lambda0_sq = lambda0_sq.min(eig2_min(&a_con));
            }
        }
        Ok(RegularityReport {
            a0,
            lambda0: lambda0_sq.max(T::zero()).sqrt(),
            threshold,
            pass: a0 > threshold,
        })
    }

    /// Gaussian curvature statistics over the grid nodes where the Brioschi
    /// stencil fits inside the domain.
    pub fn gaussian_stats(&self, grid: &Grid<T>) -> Result<CurvatureStats<T>> {
        let mut min = T::max_value().unwrap_or_else(T::one);
        let mut max = -min;
        let mut sum = T::zero();
        let mut samples = 0usize;
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                match self.gaussian_curvature(grid.node(i, j)) {
                    Ok(k) => {
                        min = min.min(k);
                        max = max.max(k);
                        sum += k;
                        samples += 1;
                    }
                    Err(ShellError::BoundaryStencil { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
        }
        if samples == 0 {
            return Err(ShellError::Validation(
                "no grid node admits a curvature stencil inside the domain".into(),
            ));
        }
        Ok(CurvatureStats {
            min,
            max,
            mean: sum / real::<T>(samples as f64),
            samples,
        })
    }
}

fn stencil_d1<T: Real, F: Fn(T) -> Vec3<T>>(
    f: &F,
    c: T,
    lo: T,
    hi: T,
    h: T,
    x: [T; 2],
) -> Result<Vec3<T>> {
    let g = |c: T| -> Result<Vec3<T>> { Ok(f(c)) };
    stencil_d1_fallible(&g, c, lo, hi, h).map_err(|_| ShellError::BoundaryStencil {
        x: [to_f64(x[0]), to_f64(x[1])],
    })
}

fn stencil_d1_fallible<T: Real, F: Fn(T) -> Result<Vec3<T>>>(
    f: &F,
    c: T,
    lo: T,
    hi: T,
    h: T,
) -> Result<Vec3<T>> {
    let two = real::<T>(2.0);
    if c - h >= lo && c + h <= hi {
        Ok((f(c + h)? - f(c - h)?) / (two * h))
    } else if c + h * two <= hi {
        Ok((f(c + h)? * real::<T>(4.0) - f(c + h * two)? - f(c)? * real::<T>(3.0)) / (two * h))
    } else if c - h * two >= lo {
        Ok((f(c)? * real::<T>(3.0) - f(c - h)? * real::<T>(4.0) + f(c - h * two)?) / (two * h))
    } else {
        Err(ShellError::BoundaryStencil {
            x: [to_f64(c), f64::NAN],
        })
    }
}

fn stencil_d1_mat<T: Real, F: Fn(T) -> Result<Mat3<T>>>(
    f: &F,
    c: T,
    lo: T,
    hi: T,
    h: T,
) -> Result<Mat3<T>> {
    let two = real::<T>(2.0);
    if c - h >= lo && c + h <= hi {
        Ok((f(c + h)? - f(c - h)?) / (two * h))
    } else if c + h * two <= hi {
        Ok((f(c + h)? * real::<T>(4.0) - f(c + h * two)? - f(c)? * real::<T>(3.0)) / (two * h))
    } else if c - h * two >= lo {
        Ok((f(c)? * real::<T>(3.0) - f(c - h)? * real::<T>(4.0) + f(c - h * two)?) / (two * h))
    } else {
        Err(ShellError::BoundaryStencil {
            x: [to_f64(c), f64::NAN],
        })
    }
}

fn stencil_d2<T: Real, F: Fn(T) -> Vec3<T>>(
    f: &F,
    c: T,
    lo: T,
    hi: T,
    h: T,
    x: [T; 2],
) -> Result<Vec3<T>> {
    let err = || ShellError::BoundaryStencil {
        x: [to_f64(x[0]), to_f64(x[1])],
    };
    let h2 = h * h;
    let two = real::<T>(2.0);
    let three = real::<T>(3.0);
    if c - h >= lo && c + h <= hi {
        Ok((f(c + h) - f(c) * two + f(c - h)) / h2)
    } else if c + h * three <= hi {
        Ok((f(c) * two - f(c + h) * real::<T>(5.0) + f(c + h * two) * real::<T>(4.0)
            - f(c + h * three))
            / h2)
    } else if c - h * three >= lo {
        Ok((f(c) * two - f(c - h) * real::<T>(5.0) + f(c - h * two) * real::<T>(4.0)
            - f(c - h * three))
            / h2)
    } else {
        Err(err())
    }
}

#[allow(unused)]
pub(crate) use linalg::Vec2;

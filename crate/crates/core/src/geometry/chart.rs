//! Surface parametrizations and their derivative jets.

use crate::linalg::Vec3;
use crate::num::{real, Real};

/// Position and first/second partial derivatives of a parametrization at a
/// point of the parameter domain.
#[derive(Debug, Clone, Copy)]
pub struct Jet2<T: Real> {
    pub y: Vec3<T>,
    /// `[d y/d x1, d y/d x2]`
    pub d1: [Vec3<T>; 2],
    /// `[d2 y/d x1^2, d2 y/d x1 d x2, d2 y/d x2^2]`
    pub d2: [Vec3<T>; 3],
}

/// Reference-surface parametrization `y0(x1, x2)`.
///
/// The cylinder uses arc-length coordinates `(x1, x2) = (theta, z)`; the
/// sphere uses longitude/latitude `(x1, x2)`, with latitude restricted away
/// from the poles. The graph chart is `(x1, x2, g(x1, x2))` with `g` a
/// quadratic polynomial.
#[derive(Debug, Clone)]
pub enum Chart<T: Real> {
    Plane,
    Cylinder { radius: T },
    Sphere { radius: T },
    /// `g = c[0] + c[1] x1 + c[2] x2 + c[3] x1^2 + c[4] x1 x2 + c[5] x2^2`
    Graph { coeffs: [T; 6] },
    Sampled(SampledChart<T>),
}

impl<T: Real> Chart<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Chart::Plane => "plane",
            Chart::Cylinder { .. } => "cylinder",
            Chart::Sphere { .. } => "sphere",
            Chart::Graph { .. } => "graph",
            Chart::Sampled(_) => "sampled",
        }
    }

    pub fn position(&self, x: [T; 2]) -> Vec3<T> {
        let (x1, x2) = (x[0], x[1]);
        match self {
            Chart::Plane => Vec3::new(x1, x2, T::zero()),
            Chart::Cylinder { radius } => {
                let r = *radius;
                let t = x1 / r;
                Vec3::new(r * t.cos(), r * t.sin(), x2)
            }
            Chart::Sphere { radius } => {
                let r = *radius;
                let (c1, s1) = (x1.cos(), x1.sin());
                let (c2, s2) = (x2.cos(), x2.sin());
                Vec3::new(r * c2 * c1, r * c2 * s1, r * s2)
            }
            Chart::Graph { coeffs: c } => {
                let g = c[0] + c[1] * x1 + c[2] * x2 + c[3] * x1 * x1 + c[4] * x1 * x2 + c[5] * x2 * x2;
                Vec3::new(x1, x2, g)
            }
            Chart::Sampled(s) => s.interpolate(s.positions.as_slice(), x),
        }
    }

    /// Closed-form jet. `None` for sampled charts, which carry their own
    /// precomputed derivative fields.
    pub fn analytic_jet(&self, x: [T; 2]) -> Option<Jet2<T>> {
        let (x1, x2) = (x[0], x[1]);
        let zero = Vec3::zeros();
        match self {
            Chart::Plane => Some(Jet2 {
                y: Vec3::new(x1, x2, T::zero()),
                d1: [Vec3::x(), Vec3::y()],
                d2: [zero, zero, zero],
            }),
            Chart::Cylinder { radius } => {
                let r = *radius;
                let t = x1 / r;
                let (c, s) = (t.cos(), t.sin());
                Some(Jet2 {
                    y: Vec3::new(r * c, r * s, x2),
                    d1: [Vec3::new(-s, c, T::zero()), Vec3::z()],
                    d2: [Vec3::new(-c / r, -s / r, T::zero()), zero, zero],
                })
            }
            Chart::Sphere { radius } => {
                let r = *radius;
                let (c1, s1) = (x1.cos(), x1.sin());
                let (c2, s2) = (x2.cos(), x2.sin());
                Some(Jet2 {
                    y: Vec3::new(r * c2 * c1, r * c2 * s1, r * s2),
                    d1: [
                        Vec3::new(-r * c2 * s1, r * c2 * c1, T::zero()),
                        Vec3::new(-r * s2 * c1, -r * s2 * s1, r * c2),
                    ],
                    d2: [
                        Vec3::new(-r * c2 * c1, -r * c2 * s1, T::zero()),
                        Vec3::new(r * s2 * s1, -r * s2 * c1, T::zero()),
                        Vec3::new(-r * c2 * c1, -r * c2 * s1, -r * s2),
                    ],
                })
            }
            Chart::Graph { coeffs: c } => {
                let two = real::<T>(2.0);
                let g = c[0] + c[1] * x1 + c[2] * x2 + c[3] * x1 * x1 + c[4] * x1 * x2 + c[5] * x2 * x2;
                let g1 = c[1] + two * c[3] * x1 + c[4] * x2;
                let g2 = c[2] + c[4] * x1 + two * c[5] * x2;
                Some(Jet2 {
                    y: Vec3::new(x1, x2, g),
                    d1: [Vec3::new(T::one(), T::zero(), g1), Vec3::new(T::zero(), T::one(), g2)],
                    d2: [
                        Vec3::new(T::zero(), T::zero(), two * c[3]),
                        Vec3::new(T::zero(), T::zero(), c[4]),
                        Vec3::new(T::zero(), T::zero(), two * c[5]),
                    ],
                })
            }
            Chart::Sampled(s) => Some(s.jet(x)),
        }
    }
}

/// Surface given by a grid of sampled positions over the parameter domain,
/// interpolated bilinearly per cell. Derivatives are estimated at the sample
/// nodes by second-order differences and interpolated bilinearly, which
/// smooths the otherwise cell-wise-constant derivative of the interpolant.
/// This is the lower-accuracy geometry path.
#[derive(Debug, Clone)]
pub struct SampledChart<T: Real> {
    pub n1: usize,
    pub n2: usize,
    pub domain: [T; 4],
    pub positions: Vec<Vec3<T>>,
    d1: [Vec<Vec3<T>>; 2],
    d2: [Vec<Vec3<T>>; 3],
}

impl<T: Real> SampledChart<T> {
    /// `positions` in row-major order with the `x1` index fastest.
    pub fn new(n1: usize, n2: usize, domain: [T; 4], positions: Vec<Vec3<T>>) -> Self {
        assert!(n1 >= 2 && n2 >= 2, "sampled chart needs at least 2x2 nodes");
        assert_eq!(positions.len(), n1 * n2, "position count must match grid");
        let h1 = (domain[1] - domain[0]) / real::<T>((n1 - 1) as f64);
        let h2 = (domain[3] - domain[2]) / real::<T>((n2 - 1) as f64);
        let idx = |i: usize, j: usize| j * n1 + i;
        let diff = |field: &[Vec3<T>], axis: usize, i: usize, j: usize| -> Vec3<T> {
            let (n, h) = if axis == 0 { (n1, h1) } else { (n2, h2) };
            let k = if axis == 0 { i } else { j };
            let at = |k: usize| {
                if axis == 0 {
                    field[idx(k, j)]
                } else {
                    field[idx(i, k)]
                }
            };
            let two = real::<T>(2.0);
            if k == 0 {
                (at(1) * real::<T>(4.0) - at(2) - at(0) * real::<T>(3.0)) / (two * h)
            } else if k == n - 1 {
                (at(n - 3) + at(n - 1) * real::<T>(3.0) - at(n - 2) * real::<T>(4.0)) / (two * h)
            } else {
                (at(k + 1) - at(k - 1)) / (two * h)
            }
        };
        let node_field = |f: &dyn Fn(usize, usize) -> Vec3<T>| -> Vec<Vec3<T>> {
            let mut v = Vec::with_capacity(n1 * n2);
            for j in 0..n2 {
                for i in 0..n1 {
                    v.push(f(i, j));
                }
            }
            v
        };
        let d1a = node_field(&|i, j| diff(&positions, 0, i, j));
        let d1b = node_field(&|i, j| diff(&positions, 1, i, j));
        let d2 = [
            node_field(&|i, j| diff(&d1a, 0, i, j)),
            node_field(&|i, j| diff(&d1a, 1, i, j)),
            node_field(&|i, j| diff(&d1b, 1, i, j)),
        ];
        SampledChart {
            n1,
            n2,
            domain,
            positions,
            d1: [d1a, d1b],
            d2,
        }
    }

    fn interpolate(&self, field: &[Vec3<T>], x: [T; 2]) -> Vec3<T> {
        let one = T::one();
        let nf1 = real::<T>((self.n1 - 1) as f64);
        let nf2 = real::<T>((self.n2 - 1) as f64);
        let u = (x[0] - self.domain[0]) / (self.domain[1] - self.domain[0]) * nf1;
        let v = (x[1] - self.domain[2]) / (self.domain[3] - self.domain[2]) * nf2;
        let ci = u.floor().max(T::zero()).min(nf1 - one);
        let cj = v.floor().max(T::zero()).min(nf2 - one);
        let s = u - ci;
        let t = v - cj;
        let (i, j) = (
            ci.to_usize().unwrap_or(0).min(self.n1 - 2),
            cj.to_usize().unwrap_or(0).min(self.n2 - 2),
        );
        let idx = |i: usize, j: usize| j * self.n1 + i;
        field[idx(i, j)] * ((one - s) * (one - t))
            + field[idx(i + 1, j)] * (s * (one - t))
            + field[idx(i, j + 1)] * ((one - s) * t)
            + field[idx(i + 1, j + 1)] * (s * t)
    }

    fn jet(&self, x: [T; 2]) -> Jet2<T> {
        Jet2 {
            y: self.interpolate(&self.positions, x),
            d1: [self.interpolate(&self.d1[0], x), self.interpolate(&self.d1[1], x)],
            d2: [
                self.interpolate(&self.d2[0], x),
                self.interpolate(&self.d2[1], x),
                self.interpolate(&self.d2[2], x),
            ],
        }
    }
}

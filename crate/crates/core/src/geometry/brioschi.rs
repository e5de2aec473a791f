//! Gaussian curvature from the first fundamental form alone.

use super::{DerivativeMode, SurfaceGeometry};
use crate::error::{Result, ShellError};
use crate::linalg::Mat3;
use crate::num::{real, to_f64, Real};

/// Brioschi determinant formula at `x` with metric-difference step `h`.
///
/// The metric is sampled on a 3x3 stencil of spacing `h`; in
/// central-difference mode the tangents at the stencil points are also taken
/// at step `h`, which keeps the scheme's round-off amplification bounded.
pub fn gaussian_curvature<T: Real>(surface: &SurfaceGeometry<T>, x: [T; 2], h: T) -> Result<T> {
    let reach = match surface.derivative_mode() {
        DerivativeMode::Analytic => h,
        DerivativeMode::CentralDifference { .. } => h * real::<T>(2.0),
    };
    let d = surface.domain();
    if x[0] - reach < d.x1_min
        || x[0] + reach > d.x1_max
        || x[1] - reach < d.x2_min
        || x[1] + reach > d.x2_max
    {
        return Err(ShellError::BoundaryStencil {
            x: [to_f64(x[0]), to_f64(x[1])],
        });
    }

    // metric [E, F, G] at stencil offsets (di, dj) in units of h
    let m = |di: i32, dj: i32| -> Result<[T; 3]> {
        let p = [
            x[0] + h * real::<T>(di as f64),
            x[1] + h * real::<T>(dj as f64),
        ];
        surface.metric_with_step(p, h)
    };

    let c = m(0, 0)?;
    let xp = m(1, 0)?;
    let xm = m(-1, 0)?;
    let yp = m(0, 1)?;
    let ym = m(0, -1)?;
    let pp = m(1, 1)?;
    let pm = m(1, -1)?;
    let mp = m(-1, 1)?;
    let mm = m(-1, -1)?;

    let two = real::<T>(2.0);
    let four = real::<T>(4.0);
    let half = real::<T>(0.5);
    let h2 = h * h;

    let d1_x = |k: usize| (xp[k] - xm[k]) / (two * h);
    let d1_y = |k: usize| (yp[k] - ym[k]) / (two * h);
    let d2_xx = |k: usize| (xp[k] - two * c[k] + xm[k]) / h2;
    let d2_yy = |k: usize| (yp[k] - two * c[k] + ym[k]) / h2;
    let d2_xy = |k: usize| (pp[k] - pm[k] - mp[k] + mm[k]) / (four * h2);

    let (e, f, g) = (c[0], c[1], c[2]);
    let (e1, e2) = (d1_x(0), d1_y(0));
    let (f1, f2) = (d1_x(1), d1_y(1));
    let (g1, g2) = (d1_x(2), d1_y(2));
    let e22 = d2_yy(0);
    let g11 = d2_xx(2);
    let f12 = d2_xy(1);

    let m1 = Mat3::new(
        -half * e22 + f12 - half * g11,
        half * e1,
        f1 - half * e2,
        f2 - half * g1,
        e,
        f,
        half * g2,
        f,
        g,
    );
    let m2 = Mat3::new(T::zero(), half * e2, half * g1, half * e2, e, f, half * g1, f, g);

    let det_metric = e * g - f * f;
    Ok((m1.determinant() - m2.determinant()) / (det_metric * det_metric))
}

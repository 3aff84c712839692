//! Algebraic circle fitting and canonical placement of resonance circles.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::ComplexTrace;

/// Center and radius of a fitted circle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleParams {
    pub center: Complex64,
    pub radius: f64,
}

/// Gradient-weighted algebraic (Taubin) circle fit.
///
/// Exact for points lying exactly on a circle; three non-collinear points
/// give the circumscribed circle.
pub fn taubin_fit(points: &[Complex64]) -> Result<CircleParams> {
    let n = points.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let inv_n = 1.0 / n as f64;
    let mx = points.iter().map(|p| p.re).sum::<f64>() * inv_n;
    let my = points.iter().map(|p| p.im).sum::<f64>() * inv_n;

    let mut z = Vec::with_capacity(n);
    let mut z_mean = 0.0;
    for p in points {
        let (xi, yi) = (p.re - mx, p.im - my);
        let zi = xi * xi + yi * yi;
        z.push(zi);
        z_mean += zi * inv_n;
    }
    if z_mean <= 0.0 {
        return Err(Error::DegenerateGeometry("all points coincide".into()));
    }
    let scale = 2.0 * z_mean.sqrt();

    let mut m = DMatrix::<f64>::zeros(n, 3);
    for (i, p) in points.iter().enumerate() {
        m[(i, 0)] = (z[i] - z_mean) / scale;
        m[(i, 1)] = p.re - mx;
        m[(i, 2)] = p.im - my;
    }
    let svd = m.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::DegenerateGeometry("SVD failed".into()))?;
    // Right singular vector of the smallest singular value.
    let row = v_t.nrows() - 1;
    let a_z = v_t[(row, 0)] / scale;
    let b = v_t[(row, 1)];
    let c = v_t[(row, 2)];
    let d = -z_mean * a_z;

    if a_z.abs() * z_mean.sqrt() < 1e-12 * (b * b + c * c).sqrt() {
        return Err(Error::DegenerateGeometry(
            "points are collinear to working precision".into(),
        ));
    }
    let cx = -b / (2.0 * a_z);
    let cy = -c / (2.0 * a_z);
    let radius_sq = cx * cx + cy * cy - d / a_z;
    if !(radius_sq > 0.0) || !radius_sq.is_finite() {
        return Err(Error::DegenerateGeometry(format!(
            "no real circle: radius^2 = {radius_sq}"
        )));
    }
    Ok(CircleParams {
        center: Complex64::new(cx + mx, cy + my),
        radius: radius_sq.sqrt(),
    })
}

/// RMS radial deviation of `points` from the circle.
#[must_use]
pub fn radial_rms(points: &[Complex64], circle: &CircleParams) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let sum: f64 = points
        .iter()
        .map(|p| {
            let d = (p - circle.center).norm() - circle.radius;
            d * d
        })
        .sum();
    (sum / points.len() as f64).sqrt()
}

/// Rigid motion (rotation + translation) taking the circle center to
/// (R, 0) and the sample nearest `f_r_est_hz` towards (2R, 0).
pub fn canonicalize(
    trace: &ComplexTrace,
    circle: &CircleParams,
    f_r_est_hz: f64,
) -> Result<ComplexTrace> {
    let (Some(&f_lo), Some(&f_hi)) = (trace.freqs.first(), trace.freqs.last()) else {
        return Err(Error::TooFewPoints { needed: 3, got: 0 });
    };
    if !(f_r_est_hz >= f_lo && f_r_est_hz <= f_hi) {
        return Err(Error::InvalidInput(format!(
            "resonance estimate {f_r_est_hz} Hz outside trace span [{f_lo}, {f_hi}]"
        )));
    }
    let anchor = trace.values[trace.nearest_index(f_r_est_hz)];
    let dir = anchor - circle.center;
    if dir.norm() < 1e-12 * circle.radius {
        return Err(Error::DegenerateGeometry(
            "resonance sample coincides with the circle center".into(),
        ));
    }
    let rot = Complex64::new(0.0, -dir.arg()).exp();
    let shift = Complex64::new(circle.radius, 0.0);
    let values = trace
        .values
        .iter()
        .map(|v| (v - circle.center) * rot + shift)
        .collect();
    ComplexTrace::new(trace.freqs.clone(), values)
}

//! Interference-background fit between a measured and a modeled trace:
//! S21_tot(f) = A * S21(f) + B e^(i (C + 2 pi f D)).

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::ComplexTrace;

/// Overall scale plus a constant-amplitude interfering channel.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InterferenceParams {
    /// Real amplitude scale applied to the modeled trace.
    pub amplitude: f64,
    /// Amplitude of the interfering term, >= 0.
    pub offset_amplitude: f64,
    /// Phase of the interfering term at f = 0, radians.
    pub phase_rad: f64,
    /// Delay slope of the interfering term, seconds.
    pub delay_s: f64,
}

impl InterferenceParams {
    pub fn new(amplitude: f64, offset_amplitude: f64, phase_rad: f64, delay_s: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "amplitude scale must be positive, got {amplitude}"
            )));
        }
        if !(offset_amplitude >= 0.0 && offset_amplitude.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "offset amplitude must be non-negative, got {offset_amplitude}"
            )));
        }
        Ok(Self {
            amplitude,
            offset_amplitude,
            phase_rad,
            delay_s,
        })
    }
}

/// For a fixed delay, the model is linear in (A, B e^(iC)); solve that
/// 3-real-unknown least squares in closed form.
fn linear_solve(
    measured: &[Complex64],
    modeled: &[Complex64],
    phases: &[Complex64],
) -> Option<(f64, Complex64, f64)> {
    let mut g = SMatrix::<f64, 3, 3>::zeros();
    let mut rhs = SVector::<f64, 3>::zeros();
    for ((&m, &s), &e) in measured.iter().zip(modeled).zip(phases) {
        let cols = [s, e, Complex64::new(0.0, 1.0) * e];
        for k in 0..3 {
            rhs[k] += cols[k].re * m.re + cols[k].im * m.im;
            for l in k..3 {
                g[(k, l)] += cols[k].re * cols[l].re + cols[k].im * cols[l].im;
            }
        }
    }
    for k in 0..3 {
        for l in 0..k {
            g[(k, l)] = g[(l, k)];
        }
    }
    let sol = g.lu().solve(&rhs)?;
    let a = sol[0];
    let beta = Complex64::new(sol[1], sol[2]);
    let mut cost = 0.0;
    for ((&m, &s), &e) in measured.iter().zip(modeled).zip(phases) {
        cost += (m - a * s - beta * e).norm_sqr();
    }
    Some((a, beta, cost))
}

fn cost_at_delay(measured: &ComplexTrace, modeled: &ComplexTrace, d: f64) -> (f64, f64, Complex64) {
    let phases: Vec<Complex64> = measured
        .freqs
        .iter()
        .map(|&f| Complex64::new(0.0, 2.0 * std::f64::consts::PI * f * d).exp())
        .collect();
    match linear_solve(&measured.values, &modeled.values, &phases) {
        Some((a, beta, cost)) => (cost, a, beta),
        None => (f64::INFINITY, 0.0, Complex64::new(0.0, 0.0)),
    }
}

/// Least-squares {A, B, C, D} between a measured trace and a modeled one.
///
/// The delay D is grid-seeded (phase wraps make the problem multimodal in
/// D) and then refined by golden-section search; A and B e^(iC) come from
/// the inner linear solve.
pub fn interference_fit(
    measured: &ComplexTrace,
    modeled: &ComplexTrace,
) -> Result<InterferenceParams> {
    if measured.freqs != modeled.freqs {
        return Err(Error::GridMismatch);
    }
    if measured.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: measured.len(),
        });
    }
    let span = measured.span().max(f64::MIN_POSITIVE);

    // Up to 32 phase wraps across the span, 8 grid points per wrap.
    let d_max = 32.0 / span;
    let n_grid = 513;
    let mut best = (f64::INFINITY, 0.0f64);
    for k in 0..n_grid {
        let d = -d_max + 2.0 * d_max * k as f64 / (n_grid - 1) as f64;
        let (cost, _, _) = cost_at_delay(measured, modeled, d);
        if cost < best.0 {
            best = (cost, d);
        }
    }

    // Golden-section refinement around the best grid cell.
    let step = 2.0 * d_max / (n_grid - 1) as f64;
    let inv_phi = 0.618_033_988_749_894_9;
    let mut a = best.1 - step;
    let mut b = best.1 + step;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = cost_at_delay(measured, modeled, c).0;
    let mut fd = cost_at_delay(measured, modeled, d).0;
    for _ in 0..160 {
        if (b - a).abs() < 1e-12 * step.max(1e-30) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = cost_at_delay(measured, modeled, c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = cost_at_delay(measured, modeled, d).0;
        }
    }
    let d_best = 0.5 * (a + b);
    let (_, amp, beta) = cost_at_delay(measured, modeled, d_best);
    Ok(InterferenceParams {
        amplitude: amp,
        offset_amplitude: beta.norm(),
        phase_rad: if beta.norm() > 0.0 { beta.arg() } else { 0.0 },
        delay_s: d_best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{synth_trace, ResonanceFit};
    use approx::assert_relative_eq;

    fn base_model() -> (ResonanceFit, Vec<f64>) {
        let p = ResonanceFit {
            a_re: 0.05,
            a_im: 0.0,
            radius: 0.5,
            phi_rad: 0.0,
            kappa_hz: 8e6,
            f_r_hz: 7.3e9,
            rms_residual: 0.0,
        };
        let freqs: Vec<f64> = (0..801).map(|k| p.f_r_hz - 4e8 + 1e6 * k as f64).collect();
        (p, freqs)
    }

    #[test]
    fn identity_recovers_unit_scale() {
        let (p, freqs) = base_model();
        let modeled = synth_trace(&p, &freqs, 0.0, 0.0, None, 0).unwrap();
        let fit = interference_fit(&modeled, &modeled).unwrap();
        assert_relative_eq!(fit.amplitude, 1.0, max_relative = 1e-9);
        assert!(fit.offset_amplitude < 1e-9);
    }

    #[test]
    fn pure_scale_recovers_half() {
        let (p, freqs) = base_model();
        let modeled = synth_trace(&p, &freqs, 0.0, 0.0, None, 0).unwrap();
        let half = ComplexTrace::new(
            freqs.clone(),
            modeled.values.iter().map(|v| 0.5 * v).collect(),
        )
        .unwrap();
        let fit = interference_fit(&half, &modeled).unwrap();
        assert_relative_eq!(fit.amplitude, 0.5, max_relative = 1e-9);
        assert!(fit.offset_amplitude < 1e-9);
    }

    #[test]
    fn known_background_is_recovered() {
        let (p, freqs) = base_model();
        let truth = InterferenceParams::new(0.8, 0.01, 1.0, 2e-9).unwrap();
        let modeled = synth_trace(&p, &freqs, 0.0, 0.0, None, 0).unwrap();
        let measured = synth_trace(&p, &freqs, 0.0, 0.0, Some(&truth), 0).unwrap();
        let fit = interference_fit(&measured, &modeled).unwrap();
        assert_relative_eq!(fit.amplitude, truth.amplitude, max_relative = 0.01);
        assert_relative_eq!(fit.offset_amplitude, truth.offset_amplitude, max_relative = 0.01);
        assert!((fit.phase_rad - truth.phase_rad).abs() < 0.05);
        assert_relative_eq!(fit.delay_s, truth.delay_s, max_relative = 0.02);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let (p, freqs) = base_model();
        let modeled = synth_trace(&p, &freqs, 0.0, 0.0, None, 0).unwrap();
        let mut other = freqs.clone();
        other[0] += 1.0;
        let shifted = ComplexTrace::new(other, modeled.values.clone()).unwrap();
        assert!(matches!(
            interference_fit(&shifted, &modeled),
            Err(Error::GridMismatch)
        ));
    }
}

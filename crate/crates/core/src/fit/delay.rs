//! Cable-delay estimation and removal.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::circle::{radial_rms, taubin_fit};
use crate::fit::{ComplexTrace, MIN_FIT_POINTS};

/// Fraction of samples taken from each trace edge for the phase fit.
const EDGE_FRACTION: f64 = 0.1;

/// Largest tolerated mean phase advance per edge sample; beyond this the
/// branch of the wrapped step is ambiguous.
const UNWRAP_LIMIT: f64 = 3.0;

/// Unwrap the phases of one edge segment. The expected per-sample phase
/// step is first estimated from the magnitude-weighted sum of adjacent
/// products (robust to noisy low-magnitude samples), then each increment
/// is taken on the branch nearest that estimate.
fn unwrap_segment(values: &[Complex64]) -> Result<Vec<f64>> {
    let step_sum: Complex64 = values
        .windows(2)
        .map(|w| w[1] * w[0].conj())
        .sum();
    let step = step_sum.arg();
    if step.abs() > UNWRAP_LIMIT {
        return Err(Error::PhaseUnwrap(format!(
            "mean phase advance {step:.3} rad per sample is too close to the wrap limit"
        )));
    }
    let mut out = Vec::with_capacity(values.len());
    let mut prev = values[0].arg();
    out.push(prev);
    for w in values.windows(2) {
        let mut d = w[1].arg() - w[0].arg() - step;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        prev += d + step;
        out.push(prev);
    }
    Ok(out)
}

/// Estimate and remove a linear phase slope phi(f) = -2 pi f tau.
///
/// The slope is fit on the outer samples of both trace edges with an
/// independent intercept per edge, so a level difference between the two
/// wings does not bias the slope. Returns the corrected trace (multiplied
/// by e^(+i 2 pi f tau)) and tau.
pub fn remove_cable_delay(trace: &ComplexTrace) -> Result<(ComplexTrace, f64)> {
    let n = trace.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: n,
        });
    }
    let edge = ((n as f64 * EDGE_FRACTION).round() as usize).clamp(3, n / 2);

    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (freqs, values) in [
        (&trace.freqs[..edge], &trace.values[..edge]),
        (&trace.freqs[n - edge..], &trace.values[n - edge..]),
    ] {
        let phases = unwrap_segment(values)?;
        let m = freqs.len() as f64;
        let f_mean = freqs.iter().sum::<f64>() / m;
        let p_mean = phases.iter().sum::<f64>() / m;
        for (&f, &p) in freqs.iter().zip(&phases) {
            sxx += (f - f_mean) * (f - f_mean);
            sxy += (f - f_mean) * (p - p_mean);
        }
    }
    if sxx == 0.0 {
        return Err(Error::InvalidInput("degenerate edge frequencies".into()));
    }
    let tau = -sxy / sxx / (2.0 * std::f64::consts::PI);
    Ok((apply_delay_correction(trace, tau), tau))
}

/// Multiply the trace by e^(+i 2 pi f tau).
#[must_use]
pub fn apply_delay_correction(trace: &ComplexTrace, tau: f64) -> ComplexTrace {
    let values = trace
        .freqs
        .iter()
        .zip(&trace.values)
        .map(|(&f, &v)| v * Complex64::new(0.0, 2.0 * std::f64::consts::PI * f * tau).exp())
        .collect();
    ComplexTrace {
        freqs: trace.freqs.clone(),
        values,
    }
}

fn radial_cost(trace: &ComplexTrace, dtau: f64) -> f64 {
    let corrected = apply_delay_correction(trace, dtau);
    match taubin_fit(&corrected.values) {
        Ok(circle) => radial_rms(&corrected.values, &circle),
        Err(_) => f64::INFINITY,
    }
}

fn golden_descent(trace: &ComplexTrace, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = radial_cost(trace, c);
    let mut fd = radial_cost(trace, d);
    for _ in 0..220 {
        if (b - a).abs() < 1e-22 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = radial_cost(trace, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = radial_cost(trace, d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, radial_cost(trace, mid))
}

/// Candidate residual delays in `[-half_window_s, half_window_s]`: the
/// polished local minima of the circle-fit radial residual, best first.
///
/// A delay-free resonance trace lies exactly on a circle; a residual
/// linear phase bends it off. The residual landscape is multimodal with
/// period ~1/span (the trace can coil onto near-circles), so under noise
/// the caller should disambiguate the basins against the full resonance
/// model rather than trust the lowest radial residual alone.
pub fn delay_candidates(
    trace: &ComplexTrace,
    half_window_s: f64,
    max_candidates: usize,
) -> Vec<(f64, f64)> {
    const SCAN: usize = 161;
    let step = 2.0 * half_window_s / (SCAN - 1) as f64;
    let costs: Vec<f64> = (0..SCAN)
        .map(|k| radial_cost(trace, -half_window_s + step * k as f64))
        .collect();

    let mut minima = Vec::new();
    for k in 0..SCAN {
        let here = costs[k];
        if !here.is_finite() {
            continue;
        }
        let left_up = k == 0 || costs[k - 1] >= here;
        let right_up = k == SCAN - 1 || costs[k + 1] >= here;
        if left_up && right_up {
            let center = -half_window_s + step * k as f64;
            minima.push(golden_descent(trace, center - step, center + step));
        }
    }
    minima.sort_by(|x, y| x.1.total_cmp(&y.1));
    minima.dedup_by(|x, y| (x.0 - y.0).abs() < 1e-3 * step);
    minima.truncate(max_candidates);
    minima
}

/// Polish a delay estimate to the single lowest radial-residual basin.
pub fn refine_delay(trace: &ComplexTrace, half_window_s: f64) -> (ComplexTrace, f64) {
    let dtau = delay_candidates(trace, half_window_s, 1)
        .first()
        .map_or(0.0, |c| c.0);
    (apply_delay_correction(trace, dtau), dtau)
}

/// Magnitude-weighted mean phase advance per hertz over the whole trace,
/// as a residual delay. Unlike the edge fit this cannot be thrown
/// arbitrarily far off by noise-dominated wings: the resonance lobe
/// carries the weight, at the price of a bounded shape bias of a few
/// 1/span. Used to center the candidate search window.
#[must_use]
pub fn bulk_delay_estimate(trace: &ComplexTrace) -> f64 {
    let step_sum: Complex64 = trace
        .values
        .windows(2)
        .map(|w| w[1] * w[0].conj())
        .sum();
    let n = trace.len();
    if n < 2 || step_sum.norm() == 0.0 {
        return 0.0;
    }
    let mean_df = trace.span() / (n - 1) as f64;
    if mean_df <= 0.0 {
        return 0.0;
    }
    -step_sum.arg() / (2.0 * std::f64::consts::PI * mean_df)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn delayed_constant_trace(tau: f64) -> ComplexTrace {
        let freqs: Vec<f64> = (0..401).map(|k| 6.8e9 + 1e6 * k as f64).collect();
        let values = freqs
            .iter()
            .map(|&f| {
                Complex64::new(0.4, 0.1)
                    * Complex64::new(0.0, -2.0 * std::f64::consts::PI * f * tau).exp()
            })
            .collect();
        ComplexTrace::new(freqs, values).unwrap()
    }

    #[test]
    fn pure_delay_on_constant_trace_is_exact() {
        let tau = 30e-9;
        let (corrected, got) = remove_cable_delay(&delayed_constant_trace(tau)).unwrap();
        assert!((got - tau).abs() < 1e-12, "tau error {}", (got - tau).abs());
        for v in &corrected.values {
            assert!((v - Complex64::new(0.4, 0.1)).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_delay_stays_zero() {
        let (_, got) = remove_cable_delay(&delayed_constant_trace(0.0)).unwrap();
        assert!(got.abs() < 1e-15, "tau {got}");
    }

    #[test]
    fn too_few_points_is_rejected() {
        let t = ComplexTrace::new(
            (0..4).map(|k| 1e9 + k as f64).collect(),
            vec![Complex64::new(1.0, 0.0); 4],
        )
        .unwrap();
        match remove_cable_delay(&t) {
            Err(Error::TooFewPoints { .. }) => {}
            other => panic!("expected too-few-points, got {other:?}"),
        }
    }

    #[test]
    fn unwrap_failure_on_coarse_sampling() {
        // 2 MHz spacing with 245 ns delay: 3.08 rad per step, too close to
        // the wrap limit to pick a branch.
        let tau = 245e-9;
        let freqs: Vec<f64> = (0..100).map(|k| 6.8e9 + 2e6 * k as f64).collect();
        let values = freqs
            .iter()
            .map(|&f| Complex64::new(0.0, -2.0 * std::f64::consts::PI * f * tau).exp())
            .collect();
        let t = ComplexTrace::new(freqs, values).unwrap();
        match remove_cable_delay(&t) {
            Err(Error::PhaseUnwrap(_)) => {}
            other => panic!("expected unwrap failure, got {other:?}"),
        }
    }

    #[test]
    fn synthetic_resonance_delay_recovered_within_one_percent() {
        // Zero-offset resonance: the pi phase step between the wings is the
        // hard case for the edge fit.
        let tau = 30e-9;
        let kappa = 8e6;
        let f_r = 7.3e9;
        let span = 60.0 * kappa;
        let freqs: Vec<f64> = (0..1201)
            .map(|k| f_r - span / 2.0 + span * k as f64 / 1200.0)
            .collect();
        let values: Vec<Complex64> = freqs
            .iter()
            .map(|&f| {
                let res = 1.0 / Complex64::new(1.0, 2.0 * (f - f_r) / kappa);
                res * Complex64::new(0.0, -2.0 * std::f64::consts::PI * f * tau).exp()
            })
            .collect();
        let t = ComplexTrace::new(freqs, values).unwrap();
        let (corrected, got) = remove_cable_delay(&t).unwrap();
        assert_relative_eq!(got, tau, max_relative = 0.01);

        // The circle-residual refinement takes the residual down to the
        // trace's own floating-point phase floor (~1e-14 s here).
        let (_, dtau) = refine_delay(&corrected, 0.75 / span);
        assert!(
            (got + dtau - tau).abs() < 1e-12,
            "residual {:.3e}",
            got + dtau - tau
        );
    }
}

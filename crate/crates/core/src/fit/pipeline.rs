//! End-to-end trace reduction: delay removal, circle fit, canonical
//! placement, least-squares resonance fit, windowed statistics.

use crate::error::{Error, Result};
use crate::fit::circle::{canonicalize, taubin_fit};
use crate::fit::delay::{
    apply_delay_correction, bulk_delay_estimate, delay_candidates, remove_cable_delay,
};
use crate::fit::resonance::{default_windows, initial_guess, lsq_resonance_fit, windowed_fit};
use crate::fit::{ComplexTrace, LsqFit, ResonanceFit, WindowedFit, MIN_FIT_POINTS};

/// Result of the full pipeline on one trace.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TraceFitReport {
    /// Weighted resonance frequency across windows, Hz.
    pub f_r_hz: f64,
    /// Weighted linewidth across windows, Hz.
    pub kappa_hz: f64,
    /// Weighted spread of the per-window linewidths, Hz.
    pub kappa_std_hz: f64,
    /// Removed cable delay, seconds.
    pub tau_s: f64,
    /// Full-trace fit in the canonical frame.
    pub full_fit: ResonanceFit,
    /// Per-window statistics.
    pub windows: WindowedFit,
    /// Every stage converged.
    pub converged: bool,
}

/// Fit a raw trace with the default window ladder {1, 1.5, 2, 3, 5} x kappa.
pub fn fit_trace(trace: &ComplexTrace) -> Result<TraceFitReport> {
    fit_trace_with_windows(trace, &[1.0, 1.5, 2.0, 3.0, 5.0])
}

/// Fit a raw trace; `window_factors` scale the full-trace kappa estimate
/// into the window half-widths.
pub fn fit_trace_with_windows(
    trace: &ComplexTrace,
    window_factors: &[f64],
) -> Result<TraceFitReport> {
    if trace.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: trace.len(),
        });
    }

    // Edge-fit delay estimate, re-centered by the bulk phase step (the
    // edge fit can be thrown arbitrarily far by noise-only wings), then
    // polished against the circle residual. A residual linear phase is
    // what bends the locus off a circle, but the radial residual has
    // coil-shaped local minima spaced ~1/span and noise can reorder
    // them, so the basins are kept as candidates and the resonance model
    // itself picks the winner.
    let (coarse, tau_edge) = remove_cable_delay(trace)?;
    let span = trace.span();
    let tau_bulk = bulk_delay_estimate(&coarse);
    let recentred = apply_delay_correction(&coarse, tau_bulk);
    let candidates = delay_candidates(&recentred, 12.0 / span, 6);

    let mut winner: Option<(f64, ComplexTrace, LsqFit)> = None;
    for &(dtau, _) in &candidates {
        let corrected = apply_delay_correction(&recentred, dtau);
        let Ok(circle) = taubin_fit(&corrected.values) else {
            continue;
        };
        let Ok(guess) = initial_guess(&corrected) else {
            continue;
        };
        let Ok(canonical) = canonicalize(&corrected, &circle, guess.f_r_hz) else {
            continue;
        };
        let Ok(init) = initial_guess(&canonical) else {
            continue;
        };
        let Ok(fit) = lsq_resonance_fit(&canonical, &init) else {
            continue;
        };
        if !(fit.fit.rms_residual.is_finite() && fit.fit.kappa_hz.is_finite()) {
            continue;
        }
        let better = winner
            .as_ref()
            .map_or(true, |(_, _, best)| fit.fit.rms_residual < best.fit.rms_residual);
        if better {
            winner = Some((dtau, canonical, fit));
        }
    }
    let (tau_fine, canonical, full) = winner.ok_or_else(|| {
        Error::DegenerateGeometry("no delay candidate produced a fittable trace".into())
    })?;
    let tau_s = tau_edge + tau_bulk + tau_fine;
    let windows: Vec<f64> = if window_factors.len() >= 2 {
        window_factors
            .iter()
            .map(|m| m * full.fit.kappa_hz)
            .collect()
    } else {
        default_windows(full.fit.kappa_hz)
    };
    let windowed = windowed_fit(&canonical, &windows)?;

    let converged = full.converged && windowed.per_window.iter().all(|w| w.converged);
    Ok(TraceFitReport {
        f_r_hz: windowed.f_r_hz,
        kappa_hz: windowed.kappa_mean_hz,
        kappa_std_hz: windowed.kappa_std_hz,
        tau_s,
        full_fit: full.fit,
        windows: windowed,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::synth::synth_trace;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(f_r: f64, kappa: f64, span_kappa: f64, n: usize) -> Vec<f64> {
        let span = span_kappa * kappa;
        (0..n)
            .map(|k| f_r - span / 2.0 + span * k as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn noise_free_roundtrip_with_delay() {
        let truth = ResonanceFit {
            a_re: 0.1,
            a_im: -0.04,
            radius: 0.45,
            phi_rad: 0.15,
            kappa_hz: 8e6,
            f_r_hz: 7.3e9,
            rms_residual: 0.0,
        };
        let freqs = grid(truth.f_r_hz, truth.kappa_hz, 60.0, 1201);
        let trace = synth_trace(&truth, &freqs, 0.0, 30e-9, None, 0).unwrap();
        let report = fit_trace(&trace).unwrap();
        assert!(report.converged);
        assert_relative_eq!(report.tau_s, 30e-9, max_relative = 1e-6);
        assert_relative_eq!(report.kappa_hz, truth.kappa_hz, max_relative = 1e-9);
        assert_relative_eq!(report.f_r_hz, truth.f_r_hz, max_relative = 1e-12);
    }

    #[test]
    fn rigid_motion_leaves_fit_invariant() {
        let truth = ResonanceFit {
            a_re: 0.0,
            a_im: 0.0,
            radius: 0.5,
            phi_rad: 0.0,
            kappa_hz: 9e6,
            f_r_hz: 7.1e9,
            rms_residual: 0.0,
        };
        let freqs = grid(truth.f_r_hz, truth.kappa_hz, 50.0, 1001);
        let base = synth_trace(&truth, &freqs, 0.0, 0.0, None, 0).unwrap();
        let report_a = fit_trace(&base).unwrap();

        let rot = Complex64::new(0.0, 0.8).exp();
        let shift = Complex64::new(0.33, -0.21);
        let moved = ComplexTrace::new(
            base.freqs.clone(),
            base.values.iter().map(|v| v * rot + shift).collect(),
        )
        .unwrap();
        let report_b = fit_trace(&moved).unwrap();

        assert_relative_eq!(report_a.kappa_hz, report_b.kappa_hz, max_relative = 1e-9);
        assert_relative_eq!(report_a.f_r_hz, report_b.f_r_hz, max_relative = 1e-12);
    }

    #[test]
    fn frequency_shift_covariance() {
        let truth = ResonanceFit {
            a_re: 0.05,
            a_im: 0.02,
            radius: 0.4,
            phi_rad: -0.05,
            kappa_hz: 6e6,
            f_r_hz: 7.5e9,
            rms_residual: 0.0,
        };
        let freqs = grid(truth.f_r_hz, truth.kappa_hz, 50.0, 901);
        let base = synth_trace(&truth, &freqs, 0.0, 0.0, None, 0).unwrap();
        let report_a = fit_trace(&base).unwrap();

        let df = 2.5e8;
        let shifted = ComplexTrace::new(
            base.freqs.iter().map(|f| f + df).collect(),
            base.values.clone(),
        )
        .unwrap();
        let report_b = fit_trace(&shifted).unwrap();
        assert_relative_eq!(report_b.f_r_hz, report_a.f_r_hz + df, max_relative = 1e-12);
        assert_relative_eq!(report_b.kappa_hz, report_a.kappa_hz, max_relative = 1e-9);
    }

    #[test]
    fn noise_free_draws_recover_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let radius = rng.gen_range(0.2..0.8);
            let f_r = rng.gen_range(4e9..9e9);
            let truth = ResonanceFit {
                a_re: rng.gen_range(-0.3..0.3) * radius,
                a_im: rng.gen_range(-0.3..0.3) * radius,
                radius,
                phi_rad: rng.gen_range(-0.3..0.3),
                kappa_hz: f_r * 10f64.powf(rng.gen_range(-5.0..-2.0)),
                f_r_hz: f_r,
                rms_residual: 0.0,
            };
            let freqs = grid(truth.f_r_hz, truth.kappa_hz, 40.0, 801);
            let trace = synth_trace(&truth, &freqs, 0.0, 0.0, None, 0).unwrap();
            let report = fit_trace(&trace).unwrap();
            assert_relative_eq!(report.kappa_hz, truth.kappa_hz, max_relative = 1e-9);
            assert_relative_eq!(report.f_r_hz, truth.f_r_hz, max_relative = 1e-9);
        }
    }

    #[test]
    fn kappa_bias_shrinks_with_noise() {
        let truth = ResonanceFit {
            a_re: 0.0,
            a_im: 0.0,
            radius: 0.5,
            phi_rad: 0.0,
            kappa_hz: 8e6,
            f_r_hz: 7.2e9,
            rms_residual: 0.0,
        };
        let freqs = grid(truth.f_r_hz, truth.kappa_hz, 40.0, 501);
        let mut biases = Vec::new();
        for sigma_frac in [0.04, 0.02, 0.01] {
            let sigma = sigma_frac * truth.radius;
            let mut sum = 0.0;
            let n_seeds = 60;
            for seed in 0..n_seeds {
                let trace = synth_trace(&truth, &freqs, sigma, 0.0, None, seed).unwrap();
                let report = fit_trace(&trace).unwrap();
                sum += report.kappa_hz / truth.kappa_hz - 1.0;
            }
            biases.push((sum / n_seeds as f64).abs());
        }
        assert!(
            biases[2] < biases[0] + 1e-3,
            "bias did not shrink: {biases:?}"
        );
        assert!(biases[2] < 5e-3, "residual bias too large: {biases:?}");
    }
}

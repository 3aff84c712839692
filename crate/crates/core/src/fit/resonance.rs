//! Least-squares resonance fitting and windowed linewidth statistics.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::{ComplexTrace, ResonanceFit, MIN_FIT_POINTS};

const MAX_ITERATIONS: usize = 300;
const STEP_TOLERANCE: f64 = 1e-10;

/// Outcome of a least-squares resonance fit.
#[derive(Debug, Clone, Copy)]
pub struct LsqFit {
    pub fit: ResonanceFit,
    /// Standard error of kappa from the residual covariance, Hz.
    pub kappa_stderr_hz: f64,
    /// Relative step fell below tolerance within the iteration budget.
    pub converged: bool,
    /// Kappa ran into the resolvable range (grid spacing or span).
    pub kappa_at_boundary: bool,
}

/// Internal parameter vector: [a_re, a_im, radius, phi, ln kappa, q] with
/// f_r = f_ref + q * kappa_ref, which keeps the normal equations near unit
/// scale. Steps outside the resolvable kappa/f_r box cost infinity.
struct Model {
    f_ref: f64,
    kappa_ref: f64,
    kappa_lo: f64,
    kappa_hi: f64,
    q_abs_max: f64,
}

impl Model {
    fn pack(&self, fit: &ResonanceFit) -> SVector<f64, 6> {
        SVector::<f64, 6>::from([
            fit.a_re,
            fit.a_im,
            fit.radius,
            fit.phi_rad,
            fit.kappa_hz.ln(),
            (fit.f_r_hz - self.f_ref) / self.kappa_ref,
        ])
    }

    fn unpack(&self, p: &SVector<f64, 6>, rms: f64) -> ResonanceFit {
        ResonanceFit {
            a_re: p[0],
            a_im: p[1],
            radius: p[2],
            phi_rad: p[3],
            kappa_hz: p[4].exp(),
            f_r_hz: self.f_ref + p[5] * self.kappa_ref,
            rms_residual: rms,
        }
    }

    /// Residual vector and Jacobian contributions at one sample.
    fn point(
        &self,
        p: &SVector<f64, 6>,
        f: f64,
        data: Complex64,
    ) -> (Complex64, [Complex64; 6]) {
        let kappa = p[4].exp();
        let f_r = self.f_ref + p[5] * self.kappa_ref;
        let delta = f - f_r;
        let w = Complex64::new(1.0, 0.0) / Complex64::new(1.0, 2.0 * delta / kappa);
        let phase = Complex64::new(0.0, p[3]).exp();
        let lobe = 2.0 * phase * w;
        let model = Complex64::new(p[0], p[1]) + p[2] * lobe;
        let i = Complex64::new(0.0, 1.0);
        let d_f_r = 4.0 * i * p[2] * phase * w * w / kappa;
        let grads = [
            Complex64::new(1.0, 0.0),
            i,
            lobe,
            i * p[2] * lobe,
            d_f_r * delta, // d/d ln kappa = kappa * d/d kappa = delta * d/d f_r
            d_f_r * self.kappa_ref,
        ];
        (model - data, grads)
    }

    fn cost(&self, trace: &ComplexTrace, p: &SVector<f64, 6>) -> f64 {
        let kappa = p[4].exp();
        if !(kappa >= self.kappa_lo && kappa <= self.kappa_hi) || p[5].abs() > self.q_abs_max {
            return f64::INFINITY;
        }
        trace
            .freqs
            .iter()
            .zip(&trace.values)
            .map(|(&f, &d)| self.point(p, f, d).0.norm_sqr())
            .sum()
    }

    fn normal_equations(
        &self,
        trace: &ComplexTrace,
        p: &SVector<f64, 6>,
    ) -> (SMatrix<f64, 6, 6>, SVector<f64, 6>, f64) {
        let mut jtj = SMatrix::<f64, 6, 6>::zeros();
        let mut jtr = SVector::<f64, 6>::zeros();
        let mut cost = 0.0;
        for (&f, &d) in trace.freqs.iter().zip(&trace.values) {
            let (r, g) = self.point(p, f, d);
            cost += r.norm_sqr();
            for k in 0..6 {
                jtr[k] += g[k].re * r.re + g[k].im * r.im;
                for l in k..6 {
                    jtj[(k, l)] += g[k].re * g[l].re + g[k].im * g[l].im;
                }
            }
        }
        for k in 0..6 {
            for l in 0..k {
                jtj[(k, l)] = jtj[(l, k)];
            }
        }
        (jtj, jtr, cost)
    }
}

/// Nonlinear least squares over {A_r, A_i, R, phi, kappa, f_r} minimizing
/// the summed squared complex residuals against the resonance-circle
/// model. Kappa is optimized in log space and stays positive.
///
/// Non-convergence within the iteration budget returns the best point
/// found with `converged == false` rather than an error.
pub fn lsq_resonance_fit(trace: &ComplexTrace, init: &ResonanceFit) -> Result<LsqFit> {
    let n = trace.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: n,
        });
    }
    if !(init.kappa_hz > 0.0 && init.kappa_hz.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "initial kappa must be positive, got {}",
            init.kappa_hz
        )));
    }

    let min_spacing = trace
        .freqs
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let span = trace.span();
    let model = Model {
        f_ref: init.f_r_hz,
        kappa_ref: init.kappa_hz,
        kappa_lo: 1e-3 * min_spacing,
        kappa_hi: 1e3 * span,
        q_abs_max: 2.0 * span / init.kappa_hz,
    };
    let mut p = model.pack(init);
    let mut cost = model.cost(trace, &p);
    let mut lambda = 1e-3;
    let mut converged = false;

    for _ in 0..MAX_ITERATIONS {
        let (jtj, jtr, _) = model.normal_equations(trace, &p);
        let diag_floor = 1e-14 * (0..6).map(|k| jtj[(k, k)]).fold(0.0f64, f64::max);

        let mut stepped = false;
        for _ in 0..32 {
            let mut damped = jtj;
            for k in 0..6 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(diag_floor);
            }
            let Some(delta) = damped.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let candidate = p + delta;
            let candidate_cost = model.cost(trace, &candidate);

            let radius_scale = p[2].abs().max(1e-12);
            let rel_step = (0..6)
                .map(|k| {
                    let scale = if k < 3 { radius_scale } else { 1.0 };
                    (delta[k] / scale).abs()
                })
                .fold(0.0f64, f64::max);

            if rel_step < STEP_TOLERANCE {
                if candidate_cost <= cost {
                    p = candidate;
                    cost = candidate_cost;
                }
                converged = true;
                stepped = true;
                break;
            }
            if candidate_cost < cost && candidate_cost.is_finite() {
                p = candidate;
                cost = candidate_cost;
                lambda = (lambda / 3.0).max(1e-14);
                stepped = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if converged || !stepped {
            break;
        }
    }

    let rms = (cost / n as f64).sqrt();
    let fit = model.unpack(&p, rms);

    // Covariance of ln kappa from the unweighted residual variance.
    let (jtj, _, final_cost) = model.normal_equations(trace, &p);
    let dof = (2 * n).saturating_sub(6).max(1) as f64;
    let sigma_sq = final_cost / dof;
    let kappa_stderr_hz = jtj
        .lu()
        .try_inverse()
        .map(|inv| fit.kappa_hz * (inv[(4, 4)] * sigma_sq).max(0.0).sqrt())
        .unwrap_or(f64::INFINITY);

    let kappa_at_boundary = fit.kappa_hz < 2.0 * min_spacing || fit.kappa_hz > 50.0 * span;

    Ok(LsqFit {
        fit,
        kappa_stderr_hz,
        converged,
        kappa_at_boundary,
    })
}

/// Data-driven starting point for [`lsq_resonance_fit`].
///
/// The baseline is the componentwise median; the resonance is the sample
/// deviating most from it; the initial kappa is the frequency span where
/// the deviation exceeds half its maximum (span = sqrt(3) kappa for an
/// ideal lobe).
pub fn initial_guess(trace: &ComplexTrace) -> Result<ResonanceFit> {
    let n = trace.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: n,
        });
    }
    let median = |mut v: Vec<f64>| -> f64 {
        v.sort_by(f64::total_cmp);
        if v.len() % 2 == 1 {
            v[v.len() / 2]
        } else {
            0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
        }
    };
    let base = Complex64::new(
        median(trace.values.iter().map(|v| v.re).collect()),
        median(trace.values.iter().map(|v| v.im).collect()),
    );
    let dev: Vec<f64> = trace.values.iter().map(|v| (v - base).norm()).collect();
    let (imax, &peak) = dev
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty trace");
    if !(peak > 0.0) {
        return Err(Error::DegenerateGeometry(
            "trace has no deviation from its baseline".into(),
        ));
    }
    let mut f_lo = trace.freqs[imax];
    let mut f_hi = trace.freqs[imax];
    for (&f, &d) in trace.freqs.iter().zip(&dev) {
        if d > 0.5 * peak {
            f_lo = f_lo.min(f);
            f_hi = f_hi.max(f);
        }
    }
    let width = (f_hi - f_lo) / 3.0f64.sqrt();
    let kappa0 = if width > 0.0 {
        width
    } else {
        trace.span() / 10.0
    };
    let dir = trace.values[imax] - base;
    Ok(ResonanceFit {
        a_re: base.re,
        a_im: base.im,
        radius: peak / 2.0,
        phi_rad: dir.arg(),
        kappa_hz: kappa0,
        f_r_hz: trace.freqs[imax],
        rms_residual: f64::NAN,
    })
}

/// One window of a windowed fit.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct WindowFit {
    pub half_width_hz: f64,
    pub n_points: usize,
    pub kappa_hz: f64,
    pub kappa_stderr_hz: f64,
    pub f_r_hz: f64,
    pub converged: bool,
}

/// Windowed linewidth statistics.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WindowedFit {
    /// Inverse-variance weighted mean of the per-window kappas, Hz.
    pub kappa_mean_hz: f64,
    /// Weighted standard deviation of the per-window kappas, Hz.
    pub kappa_std_hz: f64,
    /// Weighted mean of the per-window resonance frequencies, Hz.
    pub f_r_hz: f64,
    pub per_window: Vec<WindowFit>,
    /// Half-widths skipped for having fewer than the minimum points.
    pub skipped_hz: Vec<f64>,
}

/// Default window half-widths: {1, 1.5, 2, 3, 5} x kappa.
#[must_use]
pub fn default_windows(kappa_hz: f64) -> Vec<f64> {
    [1.0, 1.5, 2.0, 3.0, 5.0]
        .iter()
        .map(|m| m * kappa_hz)
        .collect()
}

/// Run [`lsq_resonance_fit`] restricted to each window `[f_r +- w]` around
/// a full-trace fit and report inverse-variance weighted statistics.
/// Windows with fewer than the minimum points are skipped.
pub fn windowed_fit(trace: &ComplexTrace, half_widths_hz: &[f64]) -> Result<WindowedFit> {
    if half_widths_hz.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 windows, got {}",
            half_widths_hz.len()
        )));
    }
    let full = lsq_resonance_fit(trace, &initial_guess(trace)?)?;
    let center = full.fit.f_r_hz;

    let mut per_window = Vec::new();
    let mut skipped = Vec::new();
    for &w in half_widths_hz {
        let sub = trace.window(center, w);
        if sub.len() < MIN_FIT_POINTS {
            skipped.push(w);
            continue;
        }
        let fitted = lsq_resonance_fit(&sub, &full.fit)?;
        if !fitted.fit.kappa_hz.is_finite() {
            skipped.push(w);
            continue;
        }
        let stderr = if fitted.kappa_stderr_hz.is_finite() {
            fitted.kappa_stderr_hz
        } else {
            f64::INFINITY
        };
        per_window.push(WindowFit {
            half_width_hz: w,
            n_points: sub.len(),
            kappa_hz: fitted.fit.kappa_hz,
            kappa_stderr_hz: stderr,
            f_r_hz: fitted.fit.f_r_hz,
            converged: fitted.converged,
        });
    }
    if per_window.is_empty() {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: 0,
        });
    }

    // Inverse-variance weights with a floor so that identical (possibly
    // zero) errors reduce to the arithmetic mean. Infinite errors get
    // weight zero unless every window is infinite.
    let finite_max = per_window
        .iter()
        .map(|w| w.kappa_stderr_hz)
        .filter(|e| e.is_finite())
        .fold(0.0f64, f64::max);
    let floor = if finite_max > 0.0 { 1e-6 * finite_max } else { 1.0 };
    let mut weights: Vec<f64> = per_window
        .iter()
        .map(|w| {
            let e = w.kappa_stderr_hz.max(floor);
            if e.is_finite() {
                1.0 / (e * e)
            } else {
                0.0
            }
        })
        .collect();
    if weights.iter().all(|w| *w == 0.0) {
        weights.iter_mut().for_each(|w| *w = 1.0);
    }
    let wsum: f64 = weights.iter().sum();
    let kappa_mean = per_window
        .iter()
        .zip(&weights)
        .map(|(w, wt)| wt * w.kappa_hz)
        .sum::<f64>()
        / wsum;
    let f_r = per_window
        .iter()
        .zip(&weights)
        .map(|(w, wt)| wt * w.f_r_hz)
        .sum::<f64>()
        / wsum;
    let var = per_window
        .iter()
        .zip(&weights)
        .map(|(w, wt)| wt * (w.kappa_hz - kappa_mean).powi(2))
        .sum::<f64>()
        / wsum;

    Ok(WindowedFit {
        kappa_mean_hz: kappa_mean,
        kappa_std_hz: var.sqrt(),
        f_r_hz: f_r,
        per_window,
        skipped_hz: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ideal_trace(params: &ResonanceFit, span_kappa: f64, n: usize) -> ComplexTrace {
        let span = span_kappa * params.kappa_hz;
        let freqs: Vec<f64> = (0..n)
            .map(|k| params.f_r_hz - span / 2.0 + span * k as f64 / (n - 1) as f64)
            .collect();
        let values = freqs.iter().map(|&f| params.model(f)).collect();
        ComplexTrace::new(freqs, values).unwrap()
    }

    fn canonical_params() -> ResonanceFit {
        ResonanceFit {
            a_re: 0.0,
            a_im: 0.0,
            radius: 0.5,
            phi_rad: 0.0,
            kappa_hz: 8e6,
            f_r_hz: 7.3e9,
            rms_residual: 0.0,
        }
    }

    #[test]
    fn noise_free_fit_recovers_parameters_exactly() {
        let truth = canonical_params();
        let trace = ideal_trace(&truth, 40.0, 801);
        let fitted = lsq_resonance_fit(&trace, &initial_guess(&trace).unwrap()).unwrap();
        assert!(fitted.converged);
        assert_relative_eq!(fitted.fit.kappa_hz, truth.kappa_hz, max_relative = 1e-9);
        assert_relative_eq!(fitted.fit.f_r_hz, truth.f_r_hz, max_relative = 1e-12);
        assert_relative_eq!(fitted.fit.radius, truth.radius, max_relative = 1e-9);
        assert!(fitted.fit.rms_residual < 1e-12);
        assert!(!fitted.kappa_at_boundary);
    }

    #[test]
    fn perturbed_start_converges_back() {
        let truth = ResonanceFit {
            a_re: 0.04,
            a_im: -0.03,
            radius: 0.37,
            phi_rad: 0.12,
            kappa_hz: 11e6,
            f_r_hz: 7.054e9,
            rms_residual: 0.0,
        };
        let trace = ideal_trace(&truth, 50.0, 1001);
        let mut init = truth;
        init.kappa_hz *= 1.8;
        init.f_r_hz += 3e6;
        init.radius *= 0.6;
        init.phi_rad = 0.0;
        let fitted = lsq_resonance_fit(&trace, &init).unwrap();
        assert!(fitted.converged);
        assert_relative_eq!(fitted.fit.kappa_hz, truth.kappa_hz, max_relative = 1e-9);
        assert_relative_eq!(fitted.fit.f_r_hz, truth.f_r_hz, max_relative = 1e-12);
    }

    #[test]
    fn initial_guess_lands_near_truth() {
        let truth = canonical_params();
        let trace = ideal_trace(&truth, 30.0, 601);
        let guess = initial_guess(&trace).unwrap();
        assert_relative_eq!(guess.f_r_hz, truth.f_r_hz, max_relative = 1e-3);
        assert!(guess.kappa_hz > 0.3 * truth.kappa_hz && guess.kappa_hz < 3.0 * truth.kappa_hz);
        assert_relative_eq!(guess.radius, truth.radius, max_relative = 0.2);
    }

    #[test]
    fn windowed_fit_on_ideal_trace_has_zero_spread() {
        let truth = canonical_params();
        let trace = ideal_trace(&truth, 40.0, 2001);
        let windows = default_windows(truth.kappa_hz);
        let result = windowed_fit(&trace, &windows).unwrap();
        assert_eq!(result.per_window.len(), 5);
        assert_relative_eq!(result.kappa_mean_hz, truth.kappa_hz, max_relative = 1e-8);
        assert!(result.kappa_std_hz < 1e-5 * truth.kappa_hz);
        assert!(result.skipped_hz.is_empty());
    }

    #[test]
    fn equal_errors_reduce_to_arithmetic_mean() {
        let fits = [9.0e6, 10.0e6, 11.0e6];
        // Mirror the weighting rule directly on synthetic per-window rows.
        let per: Vec<WindowFit> = fits
            .iter()
            .map(|&k| WindowFit {
                half_width_hz: 1.0,
                n_points: 10,
                kappa_hz: k,
                kappa_stderr_hz: 0.25e6,
                f_r_hz: 7e9,
                converged: true,
            })
            .collect();
        let weights: Vec<f64> = per.iter().map(|w| 1.0 / w.kappa_stderr_hz.powi(2)).collect();
        let mean = per
            .iter()
            .zip(&weights)
            .map(|(w, wt)| wt * w.kappa_hz)
            .sum::<f64>()
            / weights.iter().sum::<f64>();
        assert_relative_eq!(mean, 10.0e6, max_relative = 1e-12);
    }

    #[test]
    fn narrow_windows_are_skipped() {
        let truth = canonical_params();
        let trace = ideal_trace(&truth, 40.0, 201);
        // First window is far too narrow to hold 8 samples.
        let windows = vec![0.01 * truth.kappa_hz, 3.0 * truth.kappa_hz, 5.0 * truth.kappa_hz];
        let result = windowed_fit(&trace, &windows).unwrap();
        assert_eq!(result.skipped_hz.len(), 1);
        assert_eq!(result.per_window.len(), 2);
    }

    #[test]
    fn too_few_points_and_bad_kappa_are_rejected() {
        let truth = canonical_params();
        let trace = ideal_trace(&truth, 40.0, 7);
        assert!(matches!(
            lsq_resonance_fit(&trace, &truth),
            Err(Error::TooFewPoints { .. })
        ));
        let trace = ideal_trace(&truth, 40.0, 64);
        let mut bad = truth;
        bad.kappa_hz = -1.0;
        assert!(lsq_resonance_fit(&trace, &bad).is_err());
    }
}

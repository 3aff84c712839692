//! Effective parallel-LCR synthesis from admittance spectra.
//!
//! Near an isolated resonance a passive admittance looks like
//! Y(omega) ~ 2i*C*(omega - omega_r) + Re[Y(omega_r)], so the resonance
//! frequency comes from the zero of Im[Y], the effective capacitance from
//! its slope, and the linewidth from kappa = Re[Y(omega_r)] / C.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative step used to seed the finite-difference slope of Im[Y].
const FD_RELATIVE_STEP: f64 = 1e-6;

/// Above this kappa/omega_r ratio the linear (Foster) approximation is
/// suspect and the extracted mode is flagged.
const BROAD_MODE_RATIO: f64 = 1e-2;

/// Flagged when Re[Y] varies by more than this fraction across +-kappa/2.
const RE_Y_VARIATION_LIMIT: f64 = 0.1;

/// Synthesized effective parallel LCR oscillator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModeLcr {
    /// Resonance frequency, rad/s.
    pub omega_r: f64,
    /// Effective capacitance, farads.
    pub c_eff: f64,
    /// Effective inductance, henries; satisfies L = 1/(C * omega_r^2).
    pub l_eff: f64,
    /// Real part of admittance at resonance, siemens.
    pub re_y_at_res: f64,
    /// External linewidth kappa = Re[Y(omega_r)] / C_eff, rad/s.
    pub kappa: f64,
    /// Validity flags for the linear-approximation heuristics.
    pub warnings: ModeWarnings,
}

/// Soft diagnostics; the extraction still returns numbers when these trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct ModeWarnings {
    /// kappa / omega_r exceeded the broad-mode heuristic.
    pub broad_mode: bool,
    /// Re[Y] varies by more than 10% across +-kappa/2 around resonance.
    pub re_y_variation: bool,
}

/// Qubit mode parameters used for decay-limit estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitMode {
    /// Total qubit capacitance, farads.
    pub c_q: f64,
    /// Transition frequency, rad/s.
    pub omega_q: f64,
}

impl QubitMode {
    pub fn new(c_q: f64, omega_q: f64) -> Result<Self> {
        if !(c_q > 0.0 && c_q.is_finite()) || !(omega_q > 0.0 && omega_q.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "qubit mode parameters must be positive, got C_q = {c_q}, omega_q = {omega_q}"
            )));
        }
        Ok(Self { c_q, omega_q })
    }
}

/// Locate the zero of Im[Y] with positive slope inside `[lo, hi]`.
///
/// The bracket is first scanned to reject ambiguous inputs, then the
/// crossing is refined by safeguarded secant/bisection to a relative
/// precision of 1e-12 in omega.
pub fn find_resonance<Y>(admittance: Y, lo: f64, hi: f64) -> Result<f64>
where
    Y: Fn(f64) -> Complex64,
{
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!(
            "bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }

    // Coarse scan: count all sign changes so that antiresonances and
    // multi-mode brackets are reported instead of silently refined.
    const SCAN: usize = 128;
    let mut crossings = 0usize;
    let mut rise: Option<(f64, f64, f64, f64)> = None;
    let step = (hi - lo) / SCAN as f64;
    let mut prev_w = lo;
    let mut prev_im = admittance(lo).im;
    for i in 1..=SCAN {
        let w = if i == SCAN { hi } else { lo + step * i as f64 };
        let im = admittance(w).im;
        if prev_im == 0.0 {
            // Landed exactly on a zero; treat the node itself as a crossing.
            crossings += 1;
            if im > 0.0 {
                rise = Some((prev_w, prev_im, w, im));
            }
        } else if prev_im < 0.0 && im >= 0.0 {
            crossings += 1;
            rise = Some((prev_w, prev_im, w, im));
        } else if prev_im > 0.0 && im < 0.0 {
            crossings += 1;
        }
        prev_w = w;
        prev_im = im;
    }
    if crossings > 1 {
        return Err(Error::AmbiguousBracket { lo, hi, crossings });
    }
    let (mut a, mut fa, mut b, mut fb) = rise.ok_or(Error::NotBracketed { lo, hi })?;

    // Safeguarded secant: fall back to bisection whenever the secant step
    // leaves the bracket or stalls.
    for _ in 0..200 {
        if (b - a) <= 1e-12 * b.abs() {
            break;
        }
        let mut mid = if (fb - fa).abs() > 0.0 {
            b - fb * (b - a) / (fb - fa)
        } else {
            0.5 * (a + b)
        };
        let margin = 0.01 * (b - a);
        if !(mid > a + margin && mid < b - margin) {
            mid = 0.5 * (a + b);
        }
        let fm = admittance(mid).im;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    Ok(if fb.abs() < fa.abs() { b } else { a })
}

/// Scan a band for positive-slope zeros of Im[Y] and return refined
/// resonance frequencies. Negative-slope zeros (antiresonances) are
/// skipped. `n_grid` defaults to 2001 when zero is passed.
pub fn find_resonances_in_band<Y>(admittance: Y, lo: f64, hi: f64, n_grid: usize) -> Result<Vec<f64>>
where
    Y: Fn(f64) -> Complex64,
{
    let n = if n_grid < 2 { 2001 } else { n_grid };
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!(
            "band must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut found = Vec::new();
    let mut prev_w = lo;
    let mut prev_im = admittance(lo).im;
    for i in 1..n {
        let w = lo + step * i as f64;
        let im = admittance(w).im;
        if prev_im < 0.0 && im >= 0.0 {
            found.push(find_resonance(&admittance, prev_w, w)?);
        }
        prev_w = w;
        prev_im = im;
    }
    Ok(found)
}

/// Effective capacitance from the slope of Im[Y] at a resonance:
/// C = (d Im[Y]/d omega)/2, central differences with two Richardson
/// extrapolation levels.
pub fn effective_capacitance<Y>(admittance: Y, omega_r: f64) -> Result<f64>
where
    Y: Fn(f64) -> Complex64,
{
    if !(omega_r > 0.0 && omega_r.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "resonance frequency must be positive, got {omega_r}"
        )));
    }
    let h = FD_RELATIVE_STEP * omega_r;
    let central = |h: f64| (admittance(omega_r + h).im - admittance(omega_r - h).im) / (2.0 * h);
    let d0 = central(h);
    let d1 = central(h / 2.0);
    let d2 = central(h / 4.0);
    let r0 = (4.0 * d1 - d0) / 3.0;
    let r1 = (4.0 * d2 - d1) / 3.0;
    let slope = (16.0 * r1 - r0) / 15.0;
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(Error::NonResonantPoint {
            omega: omega_r,
            slope,
        });
    }
    Ok(slope / 2.0)
}

/// Assemble the full LCR mode at a resonance of `admittance`.
pub fn linewidth<Y>(admittance: Y, omega_r: f64) -> Result<ModeLcr>
where
    Y: Fn(f64) -> Complex64,
{
    let c_eff = effective_capacitance(&admittance, omega_r)?;
    let re_y = admittance(omega_r).re;
    let kappa = re_y / c_eff;
    let mut warnings = ModeWarnings::default();
    if kappa / omega_r > BROAD_MODE_RATIO {
        warnings.broad_mode = true;
    }
    if re_y > 0.0 && kappa.is_finite() && kappa > 0.0 {
        let half = 0.5 * kappa;
        if half < omega_r {
            let lo = admittance(omega_r - half).re;
            let hi = admittance(omega_r + half).re;
            let dev = (lo - re_y).abs().max((hi - re_y).abs()) / re_y;
            if dev > RE_Y_VARIATION_LIMIT {
                warnings.re_y_variation = true;
            }
        }
    }
    Ok(ModeLcr {
        omega_r,
        c_eff,
        l_eff: 1.0 / (c_eff * omega_r * omega_r),
        re_y_at_res: re_y,
        kappa,
        warnings,
    })
}

/// Closed-form half-wave mode of an open-ended line: omega_r = pi*v/l,
/// C = pi/(2 omega_r Z0), L = 2 Z0/(pi omega_r).
pub fn cpw_halfwave_mode(length_m: f64, z0_ohms: f64, velocity_mps: f64, re_y: f64) -> Result<ModeLcr> {
    for (v, name) in [
        (length_m, "length"),
        (z0_ohms, "characteristic impedance"),
        (velocity_mps, "phase velocity"),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "{name} must be strictly positive, got {v}"
            )));
        }
    }
    if !(re_y >= 0.0 && re_y.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "Re[Y] must be non-negative, got {re_y}"
        )));
    }
    let omega_r = std::f64::consts::PI * velocity_mps / length_m;
    let c_r = std::f64::consts::PI / (2.0 * omega_r * z0_ohms);
    Ok(ModeLcr {
        omega_r,
        c_eff: c_r,
        l_eff: 1.0 / (c_r * omega_r * omega_r),
        re_y_at_res: re_y,
        kappa: re_y / c_r,
        warnings: ModeWarnings::default(),
    })
}

/// Effective capacitance of the half-wave mode at resonance `omega_r`.
#[must_use]
pub fn cpw_effective_capacitance(omega_r: f64, z0_ohms: f64) -> f64 {
    std::f64::consts::PI / (2.0 * omega_r * z0_ohms)
}

/// Indirect estimate of a mode's real admittance from its transadmittances
/// to resistively terminated ports: Re[Y] ~ sum_j |Y_qj|^2 * Z0.
pub fn indirect_re_admittance(couplings: &[Complex64], z0_ohms: f64) -> Result<f64> {
    if !(z0_ohms > 0.0 && z0_ohms.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "port impedance must be positive, got {z0_ohms}"
        )));
    }
    Ok(couplings.iter().map(|y| y.norm_sqr()).sum::<f64>() * z0_ohms)
}

/// External-decay relaxation limit T1 = C_q / Re[Y_q].
///
/// A vanishing Re[Y_q] means no external decay path; the distinguished
/// return value is positive infinity rather than an error.
pub fn qubit_t1_limit(re_y_q: f64, c_q: f64) -> Result<f64> {
    if !(c_q > 0.0 && c_q.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "qubit capacitance must be positive, got {c_q}"
        )));
    }
    if !(re_y_q >= 0.0) || !re_y_q.is_finite() {
        return Err(Error::InvalidInput(format!(
            "Re[Y_q] must be finite and non-negative, got {re_y_q}"
        )));
    }
    if re_y_q == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(c_q / re_y_q)
}

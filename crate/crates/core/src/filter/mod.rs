//! Linewidth-plateau ladder filters: rational-polynomial admittance
//! structure, pole placement, qubit-protection scaling, and linewidth
//! sweeps against lumped or half-wave resonator models.

mod design;
mod poly;

pub use design::{optimize_plateau, optimize_plateau_with_init, PlateauDesign};
pub use poly::DenominatorPoly;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode::{self, ModeLcr};
use crate::network::{
    input_admittance, re_admittance_lossless, CircuitElement, FrequencyGrid, Netlist, TwoPort,
};

/// Alternating series-C / shunt-L high-pass ladder, starting with a series
/// capacitor on the resonator side, terminated in a resistive load.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderFilter {
    values: Vec<f64>,
    z0_ohms: f64,
}

impl LadderFilter {
    /// `values` alternate C1 (farads), L2 (henries), C3, ... and must all
    /// be strictly positive; at least one element is required.
    pub fn new(values: Vec<f64>, z0_ohms: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("ladder needs at least one element".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "ladder element values must be strictly positive, got {bad}"
            )));
        }
        if !(z0_ohms > 0.0 && z0_ohms.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "termination must be strictly positive, got {z0_ohms}"
            )));
        }
        Ok(Self { values, z0_ohms })
    }

    /// Number of ladder elements.
    #[must_use]
    pub fn order(&self) -> usize {
        self.values.len()
    }

    #[must_use]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[must_use]
    pub fn z0_ohms(&self) -> f64 {
        self.z0_ohms
    }

    /// Materialize the alternating series-C / shunt-L elements.
    #[must_use]
    pub fn elements(&self) -> Vec<CircuitElement> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if i % 2 == 0 {
                    CircuitElement::SeriesCapacitor { farads: v }
                } else {
                    CircuitElement::ShuntInductor { henries: v }
                }
            })
            .collect()
    }

    #[must_use]
    pub fn to_netlist(&self) -> Netlist {
        Netlist {
            elements: self.elements(),
            termination_ohms: self.z0_ohms,
        }
    }

    /// Cascaded ABCD matrix of the bare filter at `omega`.
    pub fn abcd(&self, omega: f64) -> Result<TwoPort> {
        self.to_netlist().abcd(omega)
    }
}

/// Target band and flatness parameters for plateau design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauSpec {
    /// Band edges, rad/s.
    pub omega_lo: f64,
    pub omega_hi: f64,
    /// Plateau level, siemens.
    pub target_re_y: f64,
    /// Band sample count for the metrics grid.
    pub n_grid: usize,
    /// Required pole clearance above the band's top edge, rad/s. May be
    /// negative: flat plateaus place their damped knee poles below the
    /// band top, so a negative margin bounds how deep they may sit.
    pub pole_margin: f64,
}

impl PlateauSpec {
    pub fn new(
        omega_lo: f64,
        omega_hi: f64,
        target_re_y: f64,
        n_grid: usize,
        pole_margin: f64,
    ) -> Result<Self> {
        if !(omega_lo > 0.0 && omega_hi > omega_lo) {
            return Err(Error::InvalidInput(format!(
                "band must satisfy 0 < lo < hi, got [{omega_lo}, {omega_hi}]"
            )));
        }
        if !(target_re_y > 0.0 && target_re_y.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "target Re[Y] must be positive, got {target_re_y}"
            )));
        }
        if n_grid < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 grid points, got {n_grid}"
            )));
        }
        if !pole_margin.is_finite() {
            return Err(Error::InvalidInput(format!(
                "pole margin must be finite, got {pole_margin}"
            )));
        }
        Ok(Self {
            omega_lo,
            omega_hi,
            target_re_y,
            n_grid,
            pole_margin,
        })
    }
}

/// Qubit-to-resonator coupling and the resonator's lumped model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitCouplingSpec {
    /// Qubit-resonator coupling capacitance, farads. Zero means the qubit
    /// is fully decoupled from the readout chain.
    pub c_c: f64,
    /// Resonator capacitance, farads.
    pub c_res: f64,
    /// Resonator inductance, henries.
    pub l_res: f64,
}

impl QubitCouplingSpec {
    pub fn new(c_c: f64, c_res: f64, l_res: f64) -> Result<Self> {
        if !(c_c >= 0.0 && c_c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coupling capacitance must be non-negative, got {c_c}"
            )));
        }
        if !(c_res > 0.0 && c_res.is_finite()) || !(l_res > 0.0 && l_res.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "resonator LC values must be positive, got C = {c_res}, L = {l_res}"
            )));
        }
        Ok(Self { c_c, c_res, l_res })
    }

    /// Bare resonator frequency 1/sqrt(LC), rad/s.
    #[must_use]
    pub fn omega_res(&self) -> f64 {
        1.0 / (self.l_res * self.c_res).sqrt()
    }

    /// Shunt admittance of the bare resonator at `omega`.
    #[must_use]
    pub fn resonator_admittance(&self, omega: f64) -> Complex64 {
        Complex64::new(0.0, omega * self.c_res - 1.0 / (omega * self.l_res))
    }
}

/// Real input admittance of the terminated filter at `omega`.
pub fn filter_re_admittance(filter: &LadderFilter, omega: f64) -> Result<f64> {
    re_admittance_lossless(&filter.abcd(omega)?, filter.z0_ohms)
}

/// Extract P_N with Re[Y](omega) = omega^(2N) / P_N(omega^2).
pub fn denominator_poly(filter: &LadderFilter) -> Result<DenominatorPoly> {
    let n = filter.order();
    let z0 = filter.z0_ohms;
    DenominatorPoly::interpolate(
        |x: f64| {
            let omega = x.sqrt();
            let m = filter.abcd(omega)?;
            let a = m.a.re;
            let b = m.b.im;
            Ok(x.powi(n as i32) * (a * a * z0 * z0 + b * b) / z0)
        },
        n,
    )
}

/// Resonant poles of the filter (decaying branch, sorted by real part).
pub fn filter_poles(filter: &LadderFilter) -> Result<Vec<Complex64>> {
    denominator_poly(filter)?.resonant_poles()
}

/// ABCD matrix of coupling capacitor + resonator shunt + filter.
fn qubit_path_abcd(filter: &LadderFilter, q: &QubitCouplingSpec, omega: f64) -> Result<TwoPort> {
    let coupler = TwoPort::series_impedance(Complex64::new(1.0, 0.0) / Complex64::new(0.0, omega * q.c_c));
    let resonator = TwoPort::shunt_admittance(q.resonator_admittance(omega));
    Ok(coupler.then(&resonator).then(&filter.abcd(omega)?))
}

/// Real admittance seen from the qubit node through coupler, resonator,
/// and filter. A zero coupling capacitance short-circuits nothing and
/// decouples the qubit entirely: the result is exactly zero.
pub fn qubit_re_admittance(filter: &LadderFilter, q: &QubitCouplingSpec, omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "angular frequency must be positive, got {omega}"
        )));
    }
    if q.c_c == 0.0 {
        return Ok(0.0);
    }
    re_admittance_lossless(&qubit_path_abcd(filter, q, omega)?, filter.z0_ohms)
}

/// Denominator polynomial of the qubit path:
/// Re[Y_q](omega) = omega^(2(N+2)) / P(omega^2), degree N+2. The coupling
/// capacitor and the resonator's inductive branch each raise the
/// low-frequency order by one power of omega^2 on top of the filter's N.
pub fn qubit_denominator_poly(filter: &LadderFilter, q: &QubitCouplingSpec) -> Result<DenominatorPoly> {
    if q.c_c == 0.0 {
        return Err(Error::InvalidInput(
            "decoupled qubit (C_c = 0) has no admittance polynomial".into(),
        ));
    }
    let d = filter.order() + 2;
    let z0 = filter.z0_ohms;
    DenominatorPoly::interpolate(
        |x: f64| {
            let omega = x.sqrt();
            let m = qubit_path_abcd(filter, q, omega)?;
            let a = m.a.re;
            let b = m.b.im;
            Ok(x.powi(d as i32) * (a * a * z0 * z0 + b * b) / z0)
        },
        d,
    )
}

/// Least-squares slope of log Re[Y] vs log omega over a log-spaced grid.
/// `n_grid == 0` selects the 50-point default.
pub fn low_freq_slope<F>(re_y: F, omega_lo: f64, omega_hi: f64, n_grid: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let n = if n_grid < 2 { 50 } else { n_grid };
    let grid = FrequencyGrid::logspace(omega_lo, omega_hi, n)?;
    let mut pts = Vec::with_capacity(n);
    for omega in grid.iter() {
        let y = re_y(omega)?;
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "Re[Y] must be positive for a log-log slope, got {y} at omega = {omega}"
            )));
        }
        pts.push((omega.ln(), y.ln()));
    }
    let n_f = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n_f;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n_f;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Ok(sxy / sxx)
}

/// Band-averaged flatness figures for a filter.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlateauMetrics {
    /// Mean Re[Y] over the band grid, siemens.
    pub mean: f64,
    /// (max - min) / mean over the band grid.
    pub ripple: f64,
    /// Lowest resonant-pole real part minus the band top, rad/s; `None`
    /// when the filter has no resonant poles.
    pub min_pole_clearance: Option<f64>,
}

/// Evaluate mean/ripple over the band and the pole clearance above it.
pub fn plateau_metrics(filter: &LadderFilter, spec: &PlateauSpec) -> Result<PlateauMetrics> {
    let grid = FrequencyGrid::linspace(spec.omega_lo, spec.omega_hi, spec.n_grid)?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for omega in grid.iter() {
        let y = filter_re_admittance(filter, omega)?;
        min = min.min(y);
        max = max.max(y);
        sum += y;
    }
    let mean = sum / spec.n_grid as f64;
    let poles = filter_poles(filter)?;
    let clearance = poles
        .iter()
        .map(|p| p.re)
        .fold(None::<f64>, |acc, re| Some(acc.map_or(re, |m| m.min(re))))
        .map(|lowest| lowest - spec.omega_hi);
    Ok(PlateauMetrics {
        mean,
        ripple: (max - min) / mean,
        min_pole_clearance: clearance,
    })
}

/// Resonator model used by [`linewidth_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResonatorModel {
    /// Parallel LC with fixed capacitance; the sweep solves for the
    /// inductance placing the loaded resonance at each target frequency.
    LumpedFixedC { c_res: f64 },
    /// Open half-wave line with fixed impedance and velocity; the sweep
    /// solves for the length. The effective capacitance then scales as
    /// pi/(2 omega Z0).
    CpwHalfWave { z0_ohms: f64, velocity_mps: f64 },
}

/// One point of a linewidth sweep: the targeted resonance frequency and
/// the extracted mode (or the per-point failure).
#[derive(Debug)]
pub struct SweepPoint {
    pub omega_r: f64,
    pub mode: Result<ModeLcr>,
}

/// Sweep the loaded resonance across `band`, solving for the resonator
/// element value that places Im[Y_total](omega_r) = 0 at each grid point
/// and extracting the external linewidth there.
///
/// The element solve is exact: Im[Y_total] is invertible in 1/L for the
/// lumped model and in the line length for the half-wave model, where the
/// branch closest to the bare-resonator prediction is taken. Failures are
/// reported per point and the sweep continues.
pub fn linewidth_sweep(
    filter: &LadderFilter,
    model: &ResonatorModel,
    band: &FrequencyGrid,
) -> Vec<SweepPoint> {
    netlist_linewidth_sweep(&filter.to_netlist(), model, band)
}

/// [`linewidth_sweep`] against an arbitrary terminated netlist.
pub fn netlist_linewidth_sweep(
    netlist: &Netlist,
    model: &ResonatorModel,
    band: &FrequencyGrid,
) -> Vec<SweepPoint> {
    band.iter()
        .map(|omega_r| SweepPoint {
            omega_r,
            mode: sweep_point(netlist, model, omega_r),
        })
        .collect()
}

fn sweep_point(netlist: &Netlist, model: &ResonatorModel, omega_r: f64) -> Result<ModeLcr> {
    let y_filter = |omega: f64| input_admittance(netlist, omega);
    let im_at_res = y_filter(omega_r)?.im;
    match *model {
        ResonatorModel::LumpedFixedC { c_res } => {
            if !(c_res > 0.0 && c_res.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "resonator capacitance must be positive, got {c_res}"
                )));
            }
            let inv_l_omega = omega_r * c_res + im_at_res;
            if !(inv_l_omega > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "no positive inductance places the loaded resonance at omega = {omega_r}"
                )));
            }
            let l_res = 1.0 / (omega_r * inv_l_omega);
            let y_total = move |omega: f64| -> Complex64 {
                let base = y_filter(omega).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                base + Complex64::new(0.0, omega * c_res - 1.0 / (omega * l_res))
            };
            mode::linewidth(y_total, omega_r)
        }
        ResonatorModel::CpwHalfWave {
            z0_ohms,
            velocity_mps,
        } => {
            if !(z0_ohms > 0.0 && velocity_mps > 0.0) {
                return Err(Error::InvalidInput(
                    "line impedance and velocity must be positive".into(),
                ));
            }
            // tan(omega_r l / v) = -Z0 * Im[Y_f]; take the branch nearest
            // the bare half-wave length pi v / omega_r.
            let theta = (-z0_ohms * im_at_res).atan();
            let length = (velocity_mps / omega_r) * (std::f64::consts::PI + theta);
            let y_total = move |omega: f64| -> Complex64 {
                let base = y_filter(omega).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                base + Complex64::new(0.0, (omega * length / velocity_mps).tan() / z0_ohms)
            };
            mode::linewidth(y_total, omega_r)
        }
    }
}

//! Resonator parameter extraction from complex transmission traces.
//!
//! The pipeline mirrors how measured traces are reduced: remove cable
//! delay, fit an algebraic circle, move the data to a canonical frame,
//! run a least-squares resonance fit, and average the linewidth over a
//! set of frequency windows. A synthetic-trace generator inverts the same
//! model for testing.

mod circle;
mod delay;
mod interference;
mod pipeline;
mod resonance;
mod synth;

pub use circle::{canonicalize, taubin_fit, CircleParams};
pub use delay::{apply_delay_correction, refine_delay, remove_cable_delay};
pub use interference::{interference_fit, InterferenceParams};
pub use pipeline::{fit_trace, fit_trace_with_windows, TraceFitReport};
pub use resonance::{
    default_windows, initial_guess, lsq_resonance_fit, windowed_fit, LsqFit, WindowFit,
    WindowedFit,
};
pub use synth::synth_trace;

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Minimum number of samples for any fit.
pub const MIN_FIT_POINTS: usize = 8;

/// Sampled complex transmission versus frequency (Hz, strictly increasing).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrace {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl ComplexTrace {
    pub fn new(freqs: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if freqs.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "frequency and value lengths differ: {} vs {}",
                freqs.len(),
                values.len()
            )));
        }
        if freqs.windows(2).any(|w| !(w[1] > w[0])) || freqs.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidInput(
                "frequencies must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self { freqs, values })
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Frequency span of the trace, Hz.
    #[must_use]
    pub fn span(&self) -> f64 {
        match (self.freqs.first(), self.freqs.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Sample index closest to `f_hz`.
    #[must_use]
    pub fn nearest_index(&self, f_hz: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &f) in self.freqs.iter().enumerate() {
            let d = (f - f_hz).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Sub-trace with |f - center| <= half_width.
    #[must_use]
    pub fn window(&self, center_hz: f64, half_width_hz: f64) -> ComplexTrace {
        let mut freqs = Vec::new();
        let mut values = Vec::new();
        for (&f, &v) in self.freqs.iter().zip(&self.values) {
            if (f - center_hz).abs() <= half_width_hz {
                freqs.push(f);
                values.push(v);
            }
        }
        ComplexTrace { freqs, values }
    }
}

/// Fitted resonance-circle parameters:
/// S21(f) = A_r + i A_i + 2 R e^(i phi) / (1 + 2i (f - f_r)/kappa).
///
/// `kappa` is the full linewidth in Hz, so |S21 - offset|^2 falls to half
/// its peak at f_r +- kappa/2.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResonanceFit {
    pub a_re: f64,
    pub a_im: f64,
    pub radius: f64,
    pub phi_rad: f64,
    pub kappa_hz: f64,
    pub f_r_hz: f64,
    /// Root-mean-square complex residual of the fit that produced this.
    pub rms_residual: f64,
}

impl ResonanceFit {
    /// Model value at `f_hz`.
    #[must_use]
    pub fn model(&self, f_hz: f64) -> Complex64 {
        let offset = Complex64::new(self.a_re, self.a_im);
        let numer = 2.0 * self.radius * Complex64::new(0.0, self.phi_rad).exp();
        let denom = Complex64::new(1.0, 2.0 * (f_hz - self.f_r_hz) / self.kappa_hz);
        offset + numer / denom
    }
}

/// Write a trace as CSV with header `freq_hz,re,im`. Values use the
/// shortest representation that round-trips, so read-back is bit exact.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &ComplexTrace) -> Result<()> {
    writeln!(w, "freq_hz,re,im")?;
    for (&f, v) in trace.freqs.iter().zip(&trace.values) {
        writeln!(w, "{f},{},{}", v.re, v.im)?;
    }
    Ok(())
}

/// Read a `freq_hz,re,im` CSV trace.
pub fn read_trace_csv<R: Read>(r: R) -> Result<ComplexTrace> {
    let reader = BufReader::new(r);
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty trace file".into()))??;
    if header.trim() != "freq_hz,re,im" {
        return Err(Error::InvalidInput(format!(
            "expected header 'freq_hz,re,im', got '{header}'"
        )));
    }
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let mut next = |name: &str| -> Result<f64> {
            cols.next()
                .ok_or_else(|| {
                    Error::InvalidInput(format!("line {}: missing {name}", lineno + 2))
                })?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("line {}: {name}: {e}", lineno + 2)))
        };
        let f = next("freq_hz")?;
        let re = next("re")?;
        let im = next("im")?;
        if cols.next().is_some() {
            return Err(Error::InvalidInput(format!(
                "line {}: too many columns",
                lineno + 2
            )));
        }
        freqs.push(f);
        values.push(Complex64::new(re, im));
    }
    ComplexTrace::new(freqs, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_validation() {
        assert!(ComplexTrace::new(vec![1.0, 2.0], vec![Complex64::new(0.0, 0.0)]).is_err());
        assert!(ComplexTrace::new(vec![2.0, 1.0], vec![Complex64::ZERO; 2]).is_err());
        let t = ComplexTrace::new(vec![1.0, 2.0, 4.0], vec![Complex64::ZERO; 3]).unwrap();
        assert_eq!(t.nearest_index(2.9), 1);
        assert_eq!(t.nearest_index(3.1), 2);
        assert_eq!(t.window(2.0, 1.0).len(), 2);
    }

    #[test]
    fn model_value_at_resonance() {
        let fit = ResonanceFit {
            a_re: 0.1,
            a_im: -0.05,
            radius: 0.5,
            phi_rad: 0.2,
            kappa_hz: 8e6,
            f_r_hz: 7.3e9,
            rms_residual: 0.0,
        };
        let at_res = fit.model(fit.f_r_hz);
        let expect = Complex64::new(0.1, -0.05)
            + Complex64::new(0.0, 0.2).exp() * 2.0 * 0.5;
        assert!((at_res - expect).norm() < 1e-15);
        // Half-power points at +- kappa/2 relative to the offset.
        let half = (fit.model(fit.f_r_hz + 4e6) - Complex64::new(0.1, -0.05)).norm_sqr();
        let peak = (at_res - Complex64::new(0.1, -0.05)).norm_sqr();
        assert!((half / peak - 0.5).abs() < 1e-12);
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let t = ComplexTrace::new(
            vec![7.0e9, 7.000001e9, 7.0000021e9, 7.13e9 + 0.3],
            vec![
                Complex64::new(0.123456789012345, -1e-17),
                Complex64::new(f64::MIN_POSITIVE, 1.0 / 3.0),
                Complex64::new(-0.0, 2.5e-300),
                Complex64::new(1.797e308, -3.33),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &t).unwrap();
        let back = read_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(back.freqs, t.freqs);
        for (a, b) in back.values.iter().zip(&t.values) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(read_trace_csv("nope\n1,2,3\n".as_bytes()).is_err());
        assert!(read_trace_csv("freq_hz,re,im\n1,2\n".as_bytes()).is_err());
        assert!(read_trace_csv("freq_hz,re,im\n1,2,x\n".as_bytes()).is_err());
        assert!(read_trace_csv("freq_hz,re,im\n1,2,3,4\n".as_bytes()).is_err());
    }
}

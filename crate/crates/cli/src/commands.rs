//! The four batch commands. Each returns a process exit code:
//! 0 success, 2 input error, 3 numerical error, 4 not converged.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use plateau_core::fit::{fit_trace, read_trace_csv};
use plateau_core::network::TwoPort;
use plateau_core::{
    cascade, input_admittance, netlist_linewidth_sweep, optimize_plateau_with_init,
    qubit_t1_limit, re_admittance_lossless, FrequencyGrid, PlateauSpec, ResonatorModel,
};
use serde::Serialize;

use crate::netlist::NetlistDocument;
use crate::sweep::SweepTable;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    code
}

/// Classify a core error as input vs numerical.
fn core_exit(e: &plateau_core::Error) -> i32 {
    use plateau_core::Error::*;
    match e {
        InvalidInput(_) | TooFewPoints { .. } | GridMismatch | Io(_) => EXIT_INPUT,
        _ => EXIT_NUMERICAL,
    }
}

fn read_document(path: &Path) -> Result<NetlistDocument, i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| fail(EXIT_INPUT, format!("{}: netlist schema: {e}", path.display())))
}

fn frequency_grid(f_start_hz: f64, f_stop_hz: f64, points: usize) -> Result<FrequencyGrid, i32> {
    if points == 0 {
        return Err(fail(EXIT_INPUT, "need at least one sweep point"));
    }
    let grid = if points == 1 {
        FrequencyGrid::new(vec![TWO_PI * f_start_hz])
    } else {
        FrequencyGrid::linspace(TWO_PI * f_start_hz, TWO_PI * f_stop_hz, points)
    };
    grid.map_err(|e| fail(EXIT_INPUT, e))
}

fn write_output(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), i32> {
    let file =
        File::create(path).map_err(|e| fail(EXIT_NUMERICAL, format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(|e| fail(EXIT_NUMERICAL, format!("{}: {e}", path.display())))
}

/// Sweep Re[Y] of a netlist over a frequency range; optionally also the
/// external linewidth of a fixed-capacitance resonator retuned to each
/// grid frequency.
pub fn cmd_analyze(
    netlist_path: &Path,
    f_start_hz: f64,
    f_stop_hz: f64,
    points: usize,
    out_path: &Path,
    resonator_c_f: Option<f64>,
) -> i32 {
    let doc = match read_document(netlist_path) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let netlist = match doc.to_netlist() {
        Ok(n) => n,
        Err(e) => return fail(core_exit(&e), e),
    };
    let grid = match frequency_grid(f_start_hz, f_stop_hz, points) {
        Ok(g) => g,
        Err(code) => return code,
    };

    let mut table = if resonator_c_f.is_some() {
        SweepTable::new(&["freq_hz", "re_y_siemens", "kappa_hz"])
    } else {
        SweepTable::new(&["freq_hz", "re_y_siemens"])
    };

    let kappas: Option<Vec<Option<f64>>> = match resonator_c_f {
        Some(c_res) => {
            if !(c_res > 0.0 && c_res.is_finite()) {
                return fail(EXIT_INPUT, format!("resonator capacitance must be positive, got {c_res}"));
            }
            let model = ResonatorModel::LumpedFixedC { c_res };
            Some(
                netlist_linewidth_sweep(&netlist, &model, &grid)
                    .into_iter()
                    .map(|p| p.mode.ok().map(|m| m.kappa / TWO_PI))
                    .collect(),
            )
        }
        None => None,
    };

    for (i, omega) in grid.iter().enumerate() {
        let y = match input_admittance(&netlist, omega) {
            Ok(y) => y,
            Err(e) => return fail(core_exit(&e), e),
        };
        let mut row = vec![Some(omega / TWO_PI), Some(y.re)];
        if let Some(k) = &kappas {
            row.push(k[i]);
        }
        table.push(row);
    }
    match write_output(out_path, |w| table.write(w)) {
        Ok(()) => EXIT_OK,
        Err(code) => code,
    }
}

#[derive(Serialize)]
struct DesignDocument {
    elements: usize,
    z0_ohms: f64,
    /// Alternating series-C (farads) / shunt-L (henries) values.
    values: Vec<f64>,
    seed: u64,
    converged: bool,
    objective: f64,
    metrics: plateau_core::PlateauMetrics,
}

/// Optimize an N-element ladder for a flat plateau and write it as JSON.
#[allow(clippy::too_many_arguments)]
pub fn cmd_design(
    elements: usize,
    f_start_hz: f64,
    f_stop_hz: f64,
    target_siemens: f64,
    seed: u64,
    out_path: &Path,
    starts: usize,
    grid_points: usize,
    pole_margin_hz: f64,
    z0_ohms: f64,
) -> i32 {
    let spec = match PlateauSpec::new(
        TWO_PI * f_start_hz,
        TWO_PI * f_stop_hz,
        target_siemens,
        grid_points,
        TWO_PI * pole_margin_hz,
    ) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    let design = match optimize_plateau_with_init(elements, &spec, z0_ohms, seed, None, starts) {
        Ok(d) => d,
        Err(e) => return fail(core_exit(&e), e),
    };
    let doc = DesignDocument {
        elements,
        z0_ohms,
        values: design.filter.values().to_vec(),
        seed,
        converged: design.converged,
        objective: design.objective,
        metrics: design.metrics,
    };
    let json = serde_json::to_string_pretty(&doc).expect("design serializes");
    if let Err(code) = write_output(out_path, |w| writeln!(w, "{json}")) {
        return code;
    }
    if design.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

#[derive(Serialize)]
struct FitDocument {
    f_r_hz: f64,
    kappa_hz: f64,
    kappa_std_hz: f64,
    tau_s: f64,
    rms_residual: f64,
    converged: bool,
    per_window: Vec<plateau_core::fit::WindowFit>,
    skipped_windows_hz: Vec<f64>,
}

/// Run the full trace-fitting pipeline on a CSV trace and write JSON.
pub fn cmd_fit(trace_path: &Path, out_path: &Path) -> i32 {
    let file = match File::open(trace_path) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_INPUT, format!("{}: {e}", trace_path.display())),
    };
    let trace = match read_trace_csv(file) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_INPUT, format!("{}: {e}", trace_path.display())),
    };
    let report = match fit_trace(&trace) {
        Ok(r) => r,
        Err(e) => return fail(core_exit(&e), e),
    };
    let doc = FitDocument {
        f_r_hz: report.f_r_hz,
        kappa_hz: report.kappa_hz,
        kappa_std_hz: report.kappa_std_hz,
        tau_s: report.tau_s,
        rms_residual: report.full_fit.rms_residual,
        converged: report.converged,
        per_window: report.windows.per_window.clone(),
        skipped_windows_hz: report.windows.skipped_hz.clone(),
    };
    let json = serde_json::to_string_pretty(&doc).expect("fit serializes");
    if let Err(code) = write_output(out_path, |w| writeln!(w, "{json}")) {
        return code;
    }
    if report.converged {
        EXIT_OK
    } else {
        eprintln!("warning: fit did not fully converge; wrote best effort");
        EXIT_NUMERICAL
    }
}

/// Sweep the qubit's external decay and T1 limit across frequency.
pub fn cmd_t1(
    netlist_path: &Path,
    f_start_hz: f64,
    f_stop_hz: f64,
    points: usize,
    out_path: &Path,
) -> i32 {
    let doc = match read_document(netlist_path) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let Some((qubit, c_q)) = (match doc.qubit_spec() {
        Ok(q) => q,
        Err(e) => return fail(EXIT_INPUT, e),
    }) else {
        return fail(EXIT_INPUT, "netlist document has no qubit block");
    };
    let netlist = match doc.to_netlist() {
        Ok(n) => n,
        Err(e) => return fail(core_exit(&e), e),
    };
    let grid = match frequency_grid(f_start_hz, f_stop_hz, points) {
        Ok(g) => g,
        Err(code) => return code,
    };

    let mut table = SweepTable::new(&["freq_hz", "re_y_q_siemens", "t1_s"]);
    for omega in grid.iter() {
        let re_y = if qubit.c_c == 0.0 {
            0.0
        } else {
            let coupler = TwoPort::series_impedance(
                num_complex::Complex64::new(1.0, 0.0)
                    / num_complex::Complex64::new(0.0, omega * qubit.c_c),
            );
            let resonator = TwoPort::shunt_admittance(qubit.resonator_admittance(omega));
            let filter = match netlist.abcd(omega) {
                Ok(m) => m,
                Err(e) => return fail(core_exit(&e), e),
            };
            let full = cascade([coupler, resonator, filter].iter());
            match re_admittance_lossless(&full, netlist.termination_ohms) {
                Ok(y) => y,
                Err(e) => return fail(core_exit(&e), e),
            }
        };
        let t1 = match qubit_t1_limit(re_y, c_q) {
            Ok(t) => t,
            Err(e) => return fail(core_exit(&e), e),
        };
        table.push(vec![Some(omega / TWO_PI), Some(re_y), Some(t1)]);
    }
    match write_output(out_path, |w| table.write(w)) {
        Ok(()) => EXIT_OK,
        Err(code) => code,
    }
}

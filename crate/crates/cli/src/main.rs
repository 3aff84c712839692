//! Batch frontend: netlist sweeps, plateau design, trace fitting, and
//! qubit T1 curves. JSON for structured inputs/results, CSV for spectra.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use plateau_cli::commands;

#[derive(Parser)]
#[command(
    name = "plateau-rf",
    about = "Ladder-filter admittance sweeps, plateau design, resonator trace fits, and qubit T1 curves",
    after_help = "Exit codes: 0 success, 2 input error, 3 numerical error, 4 not converged.\n\
                  PLATEAU_RF_THREADS caps internal worker threads (the current\n\
                  implementation computes sequentially, which satisfies any cap)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the real input admittance of a netlist across a band.
    Analyze {
        /// Netlist JSON document.
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long)]
        f_start_hz: f64,
        #[arg(long)]
        f_stop_hz: f64,
        /// Number of sweep rows.
        #[arg(long)]
        points: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also report the external linewidth of a fixed-capacitance
        /// resonator retuned to each grid frequency (adds a kappa_hz column).
        #[arg(long)]
        resonator_c_f: Option<f64>,
    },
    /// Numerically design a flat-plateau ladder filter.
    Design {
        /// Number of ladder elements (alternating series C, shunt L).
        #[arg(long)]
        elements: usize,
        #[arg(long)]
        f_start_hz: f64,
        #[arg(long)]
        f_stop_hz: f64,
        /// Plateau level in siemens.
        #[arg(long)]
        target_siemens: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
        /// Independent simplex starts.
        #[arg(long, default_value_t = 16)]
        starts: usize,
        /// Band grid points for the flatness objective and metrics.
        #[arg(long, default_value_t = 101)]
        grid_points: usize,
        /// Required pole clearance above the band top, Hz. Flat designs
        /// keep their damped knee poles below the band top, so the default
        /// allows them down to 4 GHz below it.
        #[arg(long, default_value_t = -4e9, allow_hyphen_values = true)]
        pole_margin_hz: f64,
        /// Termination impedance.
        #[arg(long, default_value_t = 50.0)]
        z0_ohms: f64,
    },
    /// Fit a complex transmission trace (CSV: freq_hz,re,im).
    Fit {
        /// Input trace CSV.
        #[arg(long)]
        trace: PathBuf,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the qubit external decay and T1 limit through the netlist.
    T1 {
        /// Netlist JSON document with a qubit block.
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long)]
        f_start_hz: f64,
        #[arg(long)]
        f_stop_hz: f64,
        #[arg(long)]
        points: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    // Validate the thread cap early so a malformed value is an input error.
    if let Ok(raw) = std::env::var("PLATEAU_RF_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {}
            _ => {
                eprintln!("error: PLATEAU_RF_THREADS must be a positive integer, got '{raw}'");
                std::process::exit(commands::EXIT_INPUT);
            }
        }
    }

    let cli = Cli::parse();
    let code = match cli.command {
        Command::Analyze {
            netlist,
            f_start_hz,
            f_stop_hz,
            points,
            out,
            resonator_c_f,
        } => commands::cmd_analyze(&netlist, f_start_hz, f_stop_hz, points, &out, resonator_c_f),
        Command::Design {
            elements,
            f_start_hz,
            f_stop_hz,
            target_siemens,
            seed,
            out,
            starts,
            grid_points,
            pole_margin_hz,
            z0_ohms,
        } => commands::cmd_design(
            elements,
            f_start_hz,
            f_stop_hz,
            target_siemens,
            seed,
            &out,
            starts,
            grid_points,
            pole_margin_hz,
            z0_ohms,
        ),
        Command::Fit { trace, out } => commands::cmd_fit(&trace, &out),
        Command::T1 {
            netlist,
            f_start_hz,
            f_stop_hz,
            points,
            out,
        } => commands::cmd_t1(&netlist, f_start_hz, f_stop_hz, points, &out),
    };
    std::process::exit(code);
}

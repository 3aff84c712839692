//! Admittance engineering for sub-resonant readout filters.
//!
//! The crate covers four layers:
//!
//! - [`network`]: complex two-port (ABCD) algebra for ladder networks,
//!   terminated input admittance, and an independent nodal-analysis oracle;
//! - [`mode`]: effective parallel-LCR synthesis (resonance, effective
//!   capacitance, linewidth, T1 limits) from admittance functions;
//! - [`filter`]: the plateau machinery itself: rational-polynomial
//!   structure of Re[Y], pole placement, scaling laws, numerical design,
//!   and linewidth sweeps;
//! - [`fit`]: extraction of resonator parameters from complex transmission
//!   traces (cable delay removal, algebraic and least-squares circle fits,
//!   windowed statistics, interference backgrounds, trace synthesis).
//!
//! Angular frequency in rad/s is the internal unit everywhere; Hz appears
//! only at file-format boundaries.

pub mod error;
pub mod filter;
pub mod fit;
pub mod fixtures;
pub mod mode;
pub mod network;

pub use error::{Error, Result};
pub use filter::{
    denominator_poly, filter_poles, filter_re_admittance, linewidth_sweep, low_freq_slope,
    netlist_linewidth_sweep, optimize_plateau, optimize_plateau_with_init, plateau_metrics,
    qubit_denominator_poly, qubit_re_admittance, DenominatorPoly, LadderFilter, PlateauDesign,
    PlateauMetrics, PlateauSpec, QubitCouplingSpec, ResonatorModel,
};
pub use fit::{
    canonicalize, interference_fit, lsq_resonance_fit, remove_cable_delay, synth_trace,
    taubin_fit, windowed_fit, CircleParams, ComplexTrace, InterferenceParams, ResonanceFit,
};
pub use mode::{
    cpw_halfwave_mode, effective_capacitance, find_resonance, indirect_re_admittance, linewidth,
    qubit_t1_limit, ModeLcr, QubitMode,
};
pub use network::{
    cascade, element_abcd, input_admittance, nodal_oracle, re_admittance_lossless, CircuitElement,
    FrequencyGrid, Netlist, TwoPort,
};

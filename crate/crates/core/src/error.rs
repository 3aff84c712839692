//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an argument outside its domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The terminated-network denominator underflowed at this frequency.
    #[error("singular network response at omega = {omega} rad/s")]
    SingularFrequency { omega: f64 },

    /// The node-admittance system could not be solved.
    #[error("singular node-admittance matrix: {0}")]
    SingularMatrix(String),

    /// A matrix expected to come from a lossless network had lossy entries.
    #[error("lossless-network contract violated: {0}")]
    LosslessViolation(String),

    /// No positive-slope zero crossing of Im[Y] inside the bracket.
    #[error("no resonance bracketed in [{lo}, {hi}] rad/s")]
    NotBracketed { lo: f64, hi: f64 },

    /// More than one zero crossing of Im[Y] inside the bracket.
    #[error("ambiguous bracket [{lo}, {hi}] rad/s: {crossings} crossings of Im[Y]")]
    AmbiguousBracket { lo: f64, hi: f64, crossings: usize },

    /// The admittance slope at the requested point is not that of a resonance.
    #[error("non-resonant point: dIm[Y]/domega = {slope} at omega = {omega}")]
    NonResonantPoint { omega: f64, slope: f64 },

    /// A linear solve or interpolation was too ill-conditioned to trust.
    #[error("numerical conditioning failure: {0}")]
    Conditioning(String),

    /// Polynomial root finding did not converge.
    #[error("root finding failed: {0}")]
    RootFinding(String),

    /// Samples fell outside the domain of the requested transform.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// Points were collinear or otherwise unfit for a circle fit.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Adjacent phase samples were too far apart to unwrap reliably.
    #[error("phase unwrap failure: {0}")]
    PhaseUnwrap(String),

    /// Two traces that must share a frequency grid do not.
    #[error("frequency grids do not match")]
    GridMismatch,

    /// Not enough samples for the requested fit.
    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Synthetic transmission traces by inverting the fit model.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::fit::{ComplexTrace, InterferenceParams, ResonanceFit};

/// Evaluate the resonance-circle model on `freqs_hz`, apply a cable delay
/// e^(-i 2 pi f tau), optionally mix in an interference background, and
/// add complex Gaussian noise (`noise_sigma` per quadrature).
/// Deterministic per seed.
pub fn synth_trace(
    params: &ResonanceFit,
    freqs_hz: &[f64],
    noise_sigma: f64,
    tau_s: f64,
    interference: Option<&InterferenceParams>,
    seed: u64,
) -> Result<ComplexTrace> {
    let mut values: Vec<Complex64> = freqs_hz
        .iter()
        .map(|&f| {
            let bare = params.model(f);
            let delayed =
                bare * Complex64::new(0.0, -2.0 * std::f64::consts::PI * f * tau_s).exp();
            match interference {
                Some(p) => {
                    p.amplitude * delayed
                        + p.offset_amplitude
                            * Complex64::new(
                                0.0,
                                p.phase_rad + 2.0 * std::f64::consts::PI * f * p.delay_s,
                            )
                            .exp()
                }
                None => delayed,
            }
        })
        .collect();

    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("positive sigma");
        for v in values.iter_mut() {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            *v += Complex64::new(re, im);
        }
    }
    ComplexTrace::new(freqs_hz.to_vec(), values)
}

//! Shared fixtures for the benchmarks.

use qfi_core::{normalize, InputState, PhotonNumber};

pub fn photons(n: usize) -> PhotonNumber {
    PhotonNumber::new(n).expect("positive photon number")
}

/// A smooth, spread-out state with every amplitude nonzero.
pub fn smooth_state(n: usize) -> InputState {
    let amps: Vec<f64> = (0..=n)
        .map(|k| {
            let x = k as f64 / n as f64;
            (1.0 + x) * (-8.0 * (x - 0.6).powi(2)).exp()
        })
        .collect();
    normalize(&amps).expect("nonzero amplitudes")
}

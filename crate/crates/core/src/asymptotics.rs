//! Large-`r` asymptotic states and Fisher-information formulas.

use serde::{Deserialize, Serialize};

use crate::airy::{airy_ai, airy_ai_prime, airy_first_zero};
use crate::error::{domain, Result};
use crate::params::{LossFraction, PhotonNumber, RescaledLoss};
use crate::states::{normalize, InputState};

/// Amplitudes below this are set to zero when sampling a profile.
const CLIP: f64 = 1e-16;

/// Airy profile `Ai(s (1 - x) + mu_1)` with `s = (r / 4)^(1/3)`, the
/// single-mode optimum at large `r`. It vanishes at `x = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AiryProfile {
    pub r: f64,
    pub mu1: f64,
    pub scale: f64,
}

impl AiryProfile {
    pub fn new(r: RescaledLoss) -> Result<Self> {
        if r.value() <= 0.0 {
            return Err(domain("Airy profile needs r > 0"));
        }
        Ok(Self {
            r: r.value(),
            mu1: airy_first_zero(),
            scale: (r.value() / 4.0).cbrt(),
        })
    }

    /// Normalized continuum amplitude at `x_tilde = 1 - x`.
    pub fn amplitude(&self, x_tilde: f64) -> f64 {
        let z = self.scale * x_tilde + self.mu1;
        let norm = self.scale.sqrt() / airy_ai_prime(self.mu1).expect("mu1 in range");
        match airy_ai(z) {
            Ok(a) => norm * a,
            // far in the decaying tail
            Err(_) => 0.0,
        }
    }
}

/// Airy profile sampled at `x_tilde = 1 - n / N` and renormalized.
pub fn airy_optimal_state(n: PhotonNumber, r: RescaledLoss) -> Result<InputState> {
    let profile = AiryProfile::new(r)?;
    let nn = n.get();
    let amps: Vec<f64> = (0..=nn)
        .map(|k| {
            if k == nn {
                return 0.0;
            }
            let a = profile.amplitude(1.0 - k as f64 / nn as f64);
            if a < CLIP {
                0.0
            } else {
                a
            }
        })
        .collect();
    normalize(&amps)
}

/// Gaussian amplitude profile centred at `x* = sqrt(r1) / (sqrt(r1) +
/// sqrt(r2))` with amplitude standard deviation
/// `sigma = sqrt(2) (r1 r2)^(1/8) / (sqrt(r1) + sqrt(r2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProfile {
    pub center: f64,
    pub width: f64,
}

impl GaussianProfile {
    pub fn new(r1: RescaledLoss, r2: RescaledLoss) -> Result<Self> {
        let (a, b) = (r1.value(), r2.value());
        if a <= 0.0 || b <= 0.0 {
            return Err(domain("Gaussian profile needs r1 > 0 and r2 > 0"));
        }
        let s = a.sqrt() + b.sqrt();
        Ok(Self {
            center: a.sqrt() / s,
            width: 2f64.sqrt() * (a * b).powf(0.125) / s,
        })
    }

    pub fn amplitude(&self, x: f64) -> f64 {
        (-(x - self.center).powi(2) / (2.0 * self.width * self.width)).exp()
    }
}

/// Gaussian profile sampled at `x = n / N` and renormalized.
pub fn gaussian_optimal_state(
    n: PhotonNumber,
    r1: RescaledLoss,
    r2: RescaledLoss,
) -> Result<InputState> {
    let profile = GaussianProfile::new(r1, r2)?;
    let nn = n.get() as f64;
    let amps: Vec<f64> = (0..=n.get())
        .map(|k| {
            let a = profile.amplitude(k as f64 / nn);
            if a < CLIP {
                0.0
            } else {
                a
            }
        })
        .collect();
    normalize(&amps)
}

/// An asymptotic Fisher information `bound * bracket`. `in_regime` is false
/// when the correction has eaten the leading term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptote {
    pub value: f64,
    pub bound: f64,
    pub bracket: f64,
    pub in_regime: bool,
}

/// `(4 N^2 / r) [1 - |mu_1| (4 / r)^(1/3)]`.
pub fn qfi_asymptote_single(n: PhotonNumber, r: RescaledLoss) -> Result<Asymptote> {
    let rv = r.value();
    if rv <= 0.0 {
        return Err(domain("asymptote needs r > 0"));
    }
    let nf = n.get() as f64;
    let bound = 4.0 * nf * nf / rv;
    let bracket = 1.0 - airy_first_zero().abs() * (4.0 / rv).cbrt();
    Ok(Asymptote {
        value: bound * bracket,
        bound,
        bracket,
        in_regime: bracket > 0.0,
    })
}

/// `[4 N^2 / (sqrt(r1) + sqrt(r2))^2] [1 - 2 / (r1 r2)^(1/4)]`.
pub fn qfi_asymptote_two(n: PhotonNumber, r1: RescaledLoss, r2: RescaledLoss) -> Result<Asymptote> {
    let (a, b) = (r1.value(), r2.value());
    if a <= 0.0 || b <= 0.0 {
        return Err(domain("two-mode asymptote needs r1 > 0 and r2 > 0"));
    }
    let nf = n.get() as f64;
    let bound = 4.0 * nf * nf / (a.sqrt() + b.sqrt()).powi(2);
    let bracket = 1.0 - 2.0 / (a * b).powf(0.25);
    Ok(Asymptote {
        value: bound * bracket,
        bound,
        bracket,
        in_regime: bracket > 0.0,
    })
}

/// Photon number beyond which the loss-limited scaling takes over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverEstimate {
    pub n_c: f64,
    pub r_c: f64,
}

/// `r_c = 4 |mu_1|^3`, `N_c = r_c (1 - R) / R`.
pub fn crossover(loss: LossFraction) -> Result<CrossoverEstimate> {
    let rv = loss.value();
    if !(rv > 0.0 && rv < 1.0) {
        return Err(domain(format!("crossover needs 0 < R < 1, got {rv}")));
    }
    let r_c = 4.0 * airy_first_zero().abs().powi(3);
    Ok(CrossoverEstimate {
        n_c: r_c * (1.0 - rv) / rv,
        r_c,
    })
}

/// Standard deviation of the photon number, the width of a state.
pub fn state_width(state: &InputState) -> f64 {
    state.variance().sqrt()
}

/// Least-squares slope of `ln(width)` against `ln(N)`.
pub fn width_exponent(states: &[(usize, InputState)]) -> Result<f64> {
    if states.len() < 4 {
        return Err(domain(format!(
            "width exponent needs at least 4 states, got {}",
            states.len()
        )));
    }
    let pts: Vec<(f64, f64)> = states
        .iter()
        .map(|(n, s)| ((*n as f64).ln(), state_width(s).ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(domain("width exponent needs distinct N"));
    }
    Ok(sxy / sxx)
}

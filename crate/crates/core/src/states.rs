//! Two-mode input states `sum_n phi_n |n>_1 |N - n>_2` with real,
//! nonnegative amplitudes.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::params::PhotonNumber;
use crate::special::{binomial_pmf, ln_factorial};

const NORM_TOL: f64 = 1e-12;

/// Amplitudes `phi_0..=phi_N` of an `N`-photon two-mode state, where index
/// `n` counts the photons in mode 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputState {
    amplitudes: Vec<f64>,
}

impl InputState {
    /// Wraps amplitudes that are already normalized.
    pub fn from_amplitudes(amplitudes: Vec<f64>) -> Result<Self> {
        check_entries(&amplitudes)?;
        let norm2: f64 = amplitudes.iter().map(|a| a * a).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(domain(format!(
                "amplitudes have squared norm {norm2}, expected 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Builds a state from photon-number probabilities `p_n = phi_n^2`.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        normalize(&p.iter().map(|&x| x.max(0.0).sqrt()).collect::<Vec<_>>())
    }

    pub(crate) fn unchecked(amplitudes: Vec<f64>) -> Self {
        Self { amplitudes }
    }

    /// Total photon number `N`.
    pub fn photons(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a * a).collect()
    }

    pub fn mean_photons(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a * a)
            .sum()
    }

    /// Variance of the mode-1 photon number.
    pub fn variance(&self) -> f64 {
        let mean = self.mean_photons();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| (n as f64 - mean).powi(2) * a * a)
            .sum()
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &InputState) -> f64 {
        assert_eq!(
            self.photons(),
            other.photons(),
            "overlap of states with different N"
        );
        let ip: f64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a * b)
            .sum();
        ip * ip
    }

    /// Photon numbers carrying probability above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| *a * *a > threshold)
            .map(|(n, _)| n)
            .collect()
    }

    /// The mirror image `n -> N - n`.
    pub fn reversed(&self) -> InputState {
        let mut amplitudes = self.amplitudes.clone();
        amplitudes.reverse();
        InputState { amplitudes }
    }
}

fn check_entries(amps: &[f64]) -> Result<()> {
    if amps.len() < 2 {
        return Err(domain("a state needs at least N + 1 = 2 amplitudes"));
    }
    if let Some(bad) = amps.iter().find(|a| !a.is_finite() || **a < 0.0) {
        return Err(domain(format!(
            "amplitudes must be finite and nonnegative, found {bad}"
        )));
    }
    Ok(())
}

/// Rescales nonnegative amplitudes to unit norm.
pub fn normalize(amplitudes: &[f64]) -> Result<InputState> {
    check_entries(amplitudes)?;
    let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateState);
    }
    let mut out: Vec<f64> = amplitudes.iter().map(|a| a / norm).collect();
    // a second pass removes the rounding left by the first division
    let norm2 = out.iter().map(|a| a * a).sum::<f64>().sqrt();
    out.iter_mut().for_each(|a| *a /= norm2);
    Ok(InputState { amplitudes: out })
}

/// `(|N, 0> + |0, N>) / sqrt(2)`.
pub fn noon_state(n: PhotonNumber) -> InputState {
    let n = n.get();
    let mut amplitudes = vec![0.0; n + 1];
    amplitudes[0] = std::f64::consts::FRAC_1_SQRT_2;
    amplitudes[n] = std::f64::consts::FRAC_1_SQRT_2;
    InputState { amplitudes }
}

/// Places weight `rho` at photon number `x N` for each `(x, rho)`.
///
/// A component whose position `x N` is not an integer is split over the two
/// neighbouring integers so that both its weight and its mean position are
/// kept.
pub fn multi_component_state(n: PhotonNumber, components: &[(f64, f64)]) -> Result<InputState> {
    let nn = n.get();
    if components.is_empty() {
        return Err(Error::DegenerateState);
    }
    let total: f64 = components.iter().map(|c| c.1).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(domain(format!(
            "component weights sum to {total}, expected 1"
        )));
    }
    let mut p = vec![0.0; nn + 1];
    let mut owner: Vec<Option<usize>> = vec![None; nn + 1];
    for (idx, &(x, rho)) in components.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) {
            return Err(domain(format!("component position {x} outside [0, 1]")));
        }
        if !(rho >= 0.0) {
            return Err(domain(format!("component weight {rho} is negative")));
        }
        if components[..idx].iter().any(|c| c.0 == x) {
            return Err(domain(format!("duplicate component position {x}")));
        }
        let pos = x * nn as f64;
        let lo = pos.floor();
        let frac = pos - lo;
        let lo = lo as usize;
        let mut place = |site: usize, w: f64| -> Result<()> {
            if w == 0.0 {
                return Ok(());
            }
            match owner[site] {
                Some(o) if o != idx => return Err(Error::Collision(site)),
                _ => owner[site] = Some(idx),
            }
            p[site] += w;
            Ok(())
        };
        if frac < 1e-12 || lo == nn {
            place(lo, rho)?;
        } else if 1.0 - frac < 1e-12 {
            place(lo + 1, rho)?;
        } else {
            place(lo, rho * (1.0 - frac))?;
            place(lo + 1, rho * frac)?;
        }
    }
    InputState::from_probabilities(&p)
}

/// Spin-coherent state with binomial amplitudes
/// `phi_n = sqrt(C(N, n) t^n (1 - t)^(N - n))`.
pub fn binomial_state(n: PhotonNumber, t: f64) -> Result<InputState> {
    if !(0.0..=1.0).contains(&t) {
        return Err(domain(format!("binomial parameter {t} outside [0, 1]")));
    }
    let nn = n.get() as u64;
    let amps: Vec<f64> = (0..=nn)
        .map(|k| binomial_pmf(nn, k, t, 1.0 - t).sqrt())
        .collect();
    normalize(&amps)
}

/// Twin-Fock state `|N/2, N/2>` after a balanced beam splitter.
///
/// Only even `n` are populated, with magnitudes
/// `2^(-N/2) sqrt(C(n, n/2) C(N - n, (N - n)/2))`. The alternating signs of
/// the physical amplitudes are a phase `i^n` and are dropped.
pub fn holland_burnett_state(n: PhotonNumber) -> Result<InputState> {
    let nn = n.get();
    if nn % 2 != 0 {
        return Err(domain(format!(
            "Holland-Burnett state needs even N, got {nn}"
        )));
    }
    let half = (nn / 2) as f64;
    let ln_central = |m: u64| ln_factorial(m) - 2.0 * ln_factorial(m / 2);
    let amps: Vec<f64> = (0..=nn)
        .map(|k| {
            if k % 2 == 1 {
                0.0
            } else {
                let ln = 0.5 * (ln_central(k as u64) + ln_central((nn - k) as u64))
                    - half * std::f64::consts::LN_2;
                ln.exp()
            }
        })
        .collect();
    normalize(&amps)
}

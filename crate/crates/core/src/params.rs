//! Scalar domain types: photon number, loss fractions, the rescaled loss
//! parameter and phase precision.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Default ceiling on the total photon number accepted by [`PhotonNumber`].
pub const DEFAULT_MAX_PHOTONS: usize = 2000;

/// Loss fraction used when a damping exponent would otherwise give `R = 1`.
pub const MAX_LOSS: f64 = 1.0 - 1e-15;

/// Total number of photons `N` shared between the two modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PhotonNumber(usize);

impl PhotonNumber {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_limit(n, DEFAULT_MAX_PHOTONS)
    }

    pub fn with_limit(n: usize, max: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain("photon number must be at least 1"));
        }
        if n > max {
            return Err(domain(format!("photon number {n} exceeds the limit {max}")));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Reflectivity `R` of the beam splitter that taps photons out of a mode.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LossFraction(f64);

impl LossFraction {
    pub const ZERO: LossFraction = LossFraction(0.0);

    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || !(0.0..1.0).contains(&r) {
            return Err(domain(format!("loss fraction must lie in [0, 1), got {r}")));
        }
        Ok(Self(r))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 - R`.
    pub fn transmission(self) -> f64 {
        1.0 - self.0
    }

    pub fn is_lossless(self) -> bool {
        self.0 == 0.0
    }
}

/// Converts a damping exponent `gamma * t` into a loss fraction
/// `R = 1 - exp(-gamma t)`. Values that round to `R = 1` are clamped to
/// [`MAX_LOSS`] with a logged warning.
pub fn loss_from_damping(gamma_t: f64) -> Result<LossFraction> {
    if gamma_t.is_nan() || gamma_t < 0.0 {
        return Err(domain(format!(
            "damping exponent must be nonnegative, got {gamma_t}"
        )));
    }
    let r = -(-gamma_t).exp_m1();
    if r > MAX_LOSS {
        log::warn!("damping exponent {gamma_t} gives R = 1; clamping to {MAX_LOSS}");
        return Ok(LossFraction(MAX_LOSS));
    }
    Ok(LossFraction(r))
}

/// Loss in each of the two interferometer arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub mode1: LossFraction,
    pub mode2: LossFraction,
}

impl LossModel {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        Ok(Self {
            mode1: LossFraction::new(r1)?,
            mode2: LossFraction::new(r2)?,
        })
    }

    pub fn lossless() -> Self {
        Self {
            mode1: LossFraction::ZERO,
            mode2: LossFraction::ZERO,
        }
    }

    /// Loss in mode 1 only.
    pub fn single(r: f64) -> Result<Self> {
        Self::new(r, 0.0)
    }

    pub fn symmetric(r: f64) -> Result<Self> {
        Self::new(r, r)
    }

    pub fn is_lossless(&self) -> bool {
        self.mode1.is_lossless() && self.mode2.is_lossless()
    }

    /// At most one arm is lossy.
    pub fn is_single_mode(&self) -> bool {
        self.mode1.is_lossless() || self.mode2.is_lossless()
    }

    pub fn is_symmetric(&self) -> bool {
        self.mode1 == self.mode2
    }

    /// The same losses with the arms exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            mode1: self.mode2,
            mode2: self.mode1,
        }
    }
}

/// The control parameter `r = N R / (1 - R)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct RescaledLoss(f64);

impl RescaledLoss {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(domain(format!(
                "rescaled loss must be finite and nonnegative, got {r}"
            )));
        }
        Ok(Self(r))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Loss fraction realizing this `r` at photon number `n`: `R = r / (n + r)`.
    pub fn loss_at(self, n: usize) -> LossFraction {
        LossFraction(self.0 / (n as f64 + self.0))
    }
}

pub fn rescaled_loss(n: PhotonNumber, loss: LossFraction) -> RescaledLoss {
    let r = loss.value();
    RescaledLoss(n.get() as f64 * r / (1.0 - r))
}

/// Standard error of a phase estimate from `trials` repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Precision {
    pub delta_phi: f64,
    pub trials: u64,
}

/// Cramer-Rao limit `delta_phi = (nu F)^(-1/2)`.
pub fn precision_from_fisher(fisher: f64, trials: u64) -> Result<Precision> {
    if !(fisher > 0.0) || !fisher.is_finite() {
        return Err(domain(format!(
            "Fisher information must be positive, got {fisher}"
        )));
    }
    if trials == 0 {
        return Err(domain("at least one trial is required"));
    }
    Ok(Precision {
        delta_phi: (trials as f64 * fisher).powf(-0.5),
        trials,
    })
}

/// Fisher information reached with classical light.
///
/// Single-mode loss: `4 N (1 - R) / (1 + sqrt(1 - R))^2`, the coherent-light
/// optimum over the input beam-splitter reflectivity. Symmetric loss: one
/// unit per received photon, `N (1 - R)`.
pub fn classical_baseline(n: PhotonNumber, loss: &LossModel) -> Result<f64> {
    let nf = n.get() as f64;
    if loss.is_single_mode() {
        let r = loss.mode1.value().max(loss.mode2.value());
        let t = 1.0 - r;
        Ok(4.0 * nf * t / (1.0 + t.sqrt()).powi(2))
    } else if loss.is_symmetric() {
        Ok(nf * loss.mode1.transmission())
    } else {
        Err(Error::Unsupported(format!(
            "classical baseline needs single-mode or symmetric loss, got R1={} R2={}",
            loss.mode1.value(),
            loss.mode2.value()
        )))
    }
}

//! Helpers shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qfi_core::{normalize, InputState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Amplitudes drawn uniformly from `[0, 1)`, normalized.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> InputState {
    loop {
        let amps: Vec<f64> = (0..=n).map(|_| rng.random_range(0.0..1.0)).collect();
        if let Ok(s) = normalize(&amps) {
            return s;
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Kraus weight for losing `k` of `n` photons at loss fraction `r`.
fn kraus(n: usize, k: usize, r: f64) -> f64 {
    binomial(n, k) * r.powi(k as i32) * (1.0 - r).powi((n - k) as i32)
}

/// Output density matrix on the full two-mode Fock space, indexed by
/// `a * (N + 1) + b`, built from every pair of Kraus operators.
pub fn dense_output(amps: &[f64], r1: f64, r2: f64) -> DMatrix<f64> {
    let n = amps.len() - 1;
    let dim = (n + 1) * (n + 1);
    let mut rho = DMatrix::zeros(dim, dim);
    for k1 in 0..=n {
        for k2 in 0..=n - k1 {
            let mut v = vec![0.0; dim];
            for (a, &c) in amps.iter().enumerate() {
                let b = n - a;
                if k1 > a || k2 > b {
                    continue;
                }
                v[(a - k1) * (n + 1) + (b - k2)] = c * (kraus(a, k1, r1) * kraus(b, k2, r2)).sqrt();
            }
            for i in 0..dim {
                if v[i] == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    rho[(i, j)] += v[i] * v[j];
                }
            }
        }
    }
    rho
}

/// QFI of the phase generated by the photon number in the first mode,
/// from the full spectral decomposition of the dense output state.
pub fn dense_qfi(amps: &[f64], r1: f64, r2: f64) -> f64 {
    let n = amps.len() - 1;
    let rho = dense_output(amps, r1, r2);
    let eig = SymmetricEigen::new(rho);
    let dim = eig.eigenvalues.len();
    let gen: Vec<f64> = (0..dim).map(|i| (i / (n + 1)) as f64).collect();
    let mut f = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let (li, lj) = (eig.eigenvalues[i], eig.eigenvalues[j]);
            if li + lj <= 1e-14 {
                continue;
            }
            let g: f64 = (0..dim)
                .map(|m| eig.eigenvectors[(m, i)] * gen[m] * eig.eigenvectors[(m, j)])
                .sum();
            f += 2.0 * (li - lj).powi(2) / (li + lj) * g * g;
        }
    }
    f
}

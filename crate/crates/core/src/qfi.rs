//! Quantum Fisher information of lossy two-mode states.
//!
//! Three independent engines are provided: a branch sum for loss in one arm,
//! an eigendecomposition of each density block for arbitrary loss (in a
//! factored form with an analytic gradient, and in a dense form), and a
//! finite-difference fidelity oracle.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::complex_trace_norm;
use crate::loss::{assemble_with, clip_spectrum, Channel, LossTable};
use crate::params::{LossFraction, LossModel, PhotonNumber};
use crate::states::InputState;

/// Branch weights below this are treated as empty.
pub const MIN_WEIGHT: f64 = 1e-15;
/// Relative cutoff separating the support of a block from its kernel.
pub const EIGEN_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BranchSum,
    Eigen,
    FidelityOracle,
}

/// Contribution of block `k`: `value = sum_k weight_k * qfi_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockQfi {
    pub k: usize,
    pub weight: f64,
    pub qfi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfiResult {
    pub value: f64,
    pub upper_bound: f64,
    pub per_block: Option<Vec<BlockQfi>>,
    pub method: Method,
}

/// Upper bound for `N` photons: `4 N^2 / (sqrt(r1) + sqrt(r2))^2` with
/// `r_i = N R_i / (1 - R_i)`, which for loss in one arm reads
/// `4 N (1 - R) / R`.
pub fn qfi_upper_bound(n: PhotonNumber, loss: &LossModel) -> Result<f64> {
    if loss.is_lossless() {
        return Err(Error::Unbounded);
    }
    let nf = n.get() as f64;
    let r = |l: LossFraction| nf * l.value() / l.transmission();
    let s = r(loss.mode1).sqrt() + r(loss.mode2).sqrt();
    Ok(4.0 * nf * nf / (s * s))
}

/// State-dependent bound `4 (1 - R) / R * <n>` for loss in one arm, where
/// `n` counts photons in the lossy arm. Other configurations fall back to
/// the `N`-only bound.
pub fn qfi_upper_bound_state(state: &InputState, loss: &LossModel) -> Result<f64> {
    if loss.is_lossless() {
        return Err(Error::Unbounded);
    }
    if !loss.is_single_mode() {
        return qfi_upper_bound(PhotonNumber::new(state.photons())?, loss);
    }
    let (lossy, mean) = if loss.mode2.is_lossless() {
        (loss.mode1, state.mean_photons())
    } else {
        (loss.mode2, state.photons() as f64 - state.mean_photons())
    };
    Ok(4.0 * lossy.transmission() / lossy.value() * mean)
}

fn reported_bound(state: &InputState, loss: &LossModel) -> f64 {
    let n = state.photons() as f64;
    match qfi_upper_bound_state(state, loss) {
        Ok(b) => b.min(n * n),
        Err(_) => n * n,
    }
}

/// Branch-sum QFI for loss in mode 1 only:
/// `sum_k w_k 4 Var(n | k)` with `p(n | k) = Lambda_{n;k} phi_n^2 / w_k`.
pub fn qfi_single_mode(state: &InputState, loss: LossFraction) -> QfiResult {
    let table = LossTable::new(state.photons(), loss);
    let blocks = single_mode_blocks(state.amplitudes(), &table);
    let value = blocks.iter().map(|b| b.weight * b.qfi).sum();
    QfiResult {
        value,
        upper_bound: reported_bound(
            state,
            &LossModel {
                mode1: loss,
                mode2: LossFraction::ZERO,
            },
        ),
        per_block: Some(blocks),
        method: Method::BranchSum,
    }
}

fn single_mode_blocks(phi: &[f64], table: &LossTable) -> Vec<BlockQfi> {
    let n = phi.len() - 1;
    let p: Vec<f64> = phi.iter().map(|a| a * a).collect();
    (0..=n)
        .map(|k| {
            let (mut w, mut s1) = (0.0, 0.0);
            for nn in k..=n {
                let q = table.coefficient(nn, k) * p[nn];
                w += q;
                s1 += q * nn as f64;
            }
            if w < MIN_WEIGHT {
                return BlockQfi {
                    k,
                    weight: w,
                    qfi: 0.0,
                };
            }
            let mu = s1 / w;
            let var: f64 = (k..=n)
                .map(|nn| table.coefficient(nn, k) * p[nn] * (nn as f64 - mu).powi(2))
                .sum::<f64>()
                / w;
            BlockQfi {
                k,
                weight: w,
                qfi: 4.0 * var,
            }
        })
        .collect()
}

/// Gradient of the single-mode QFI with respect to the probabilities
/// `p_n = phi_n^2`: `4 sum_k Lambda_{n;k} (n - mu_k)^2`.
///
/// The QFI is concave in `p` and `sum_n p_n g_n` equals the QFI itself.
pub fn single_mode_gradient(p: &[f64], table: &LossTable) -> (f64, Vec<f64>) {
    let n = p.len() - 1;
    let mut grad = vec![0.0; n + 1];
    let mut value = 0.0;
    for k in 0..=n {
        let (mut w, mut s1) = (0.0, 0.0);
        for nn in k..=n {
            let q = table.coefficient(nn, k) * p[nn];
            w += q;
            s1 += q * nn as f64;
        }
        if w < MIN_WEIGHT {
            continue;
        }
        let mu = s1 / w;
        for nn in k..=n {
            let g = 4.0 * table.coefficient(nn, k) * (nn as f64 - mu).powi(2);
            grad[nn] += g;
            value += g * p[nn];
        }
    }
    (value, grad)
}

/// QFI for arbitrary loss from the spectral decomposition of each density
/// block, with the remaining mode-1 photon number as generator.
pub fn qfi_eigen(state: &InputState, loss: &LossModel) -> Result<QfiResult> {
    let channel = Channel::new(state.photons(), *loss);
    let eval = QfiEvaluator::with_channel(channel, false);
    let blocks = eval.blocks(state.amplitudes())?;
    Ok(QfiResult {
        value: blocks.iter().map(|b| b.weight * b.qfi).sum(),
        upper_bound: reported_bound(state, loss),
        per_block: Some(blocks),
        method: Method::Eigen,
    })
}

/// Same quantity as [`qfi_eigen`] computed from dense blocks diagonalized by
/// cyclic Jacobi. Slower; used as a cross-check.
pub fn qfi_eigen_dense(state: &InputState, loss: &LossModel) -> Result<QfiResult> {
    let channel = Channel::new(state.photons(), *loss);
    let blocks: Vec<BlockQfi> = (0..=state.photons())
        .into_par_iter()
        .map(|k| {
            let block = assemble_with(&channel, state, k);
            let w = block.trace();
            if w < MIN_WEIGHT {
                return Ok(BlockQfi {
                    k,
                    weight: w,
                    qfi: 0.0,
                });
            }
            let eig = block.eigen()?;
            let cut = EIGEN_CUTOFF * w;
            let keep: Vec<usize> = (0..eig.values.len())
                .filter(|&i| eig.values[i] > cut)
                .collect();
            let d = block.dim();
            let m = |i: usize| i as f64;
            let mut f = 0.0;
            for i in 0..d {
                f += 4.0 * m(i) * m(i) * block.matrix[(i, i)];
            }
            for &a in &keep {
                for &b in &keep {
                    let (la, lb) = (eig.values[a], eig.values[b]);
                    let mab: f64 = (0..d)
                        .map(|i| eig.vectors[(i, a)] * m(i) * eig.vectors[(i, b)])
                        .sum();
                    f -= 8.0 * la * lb / (la + lb) * mab * mab;
                }
            }
            Ok(BlockQfi {
                k,
                weight: w,
                qfi: f / w,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QfiResult {
        value: blocks.iter().map(|b| b.weight * b.qfi).sum(),
        upper_bound: reported_bound(state, loss),
        per_block: Some(blocks),
        method: Method::Eigen,
    })
}

/// Dispatches to the branch sum when only one arm is lossy and to the
/// eigendecomposition otherwise.
pub fn qfi(state: &InputState, loss: &LossModel) -> Result<QfiResult> {
    if loss.mode2.is_lossless() {
        Ok(qfi_single_mode(state, loss.mode1))
    } else if loss.mode1.is_lossless() {
        let mut r = qfi_single_mode(&state.reversed(), loss.mode2);
        r.upper_bound = reported_bound(state, loss);
        Ok(r)
    } else {
        qfi_eigen(state, loss)
    }
}

/// QFI from the Bures distance between the outputs at phases `0` and
/// `dphi`, extrapolated over `{dphi, dphi / 2}`.
pub fn qfi_fidelity_oracle(state: &InputState, loss: &LossModel, dphi: f64) -> Result<QfiResult> {
    qfi_fidelity_oracle_at(state, loss, 0.0, dphi)
}

/// Fidelity oracle evaluated around the base phase `phi0`.
pub fn qfi_fidelity_oracle_at(
    state: &InputState,
    loss: &LossModel,
    phi0: f64,
    dphi: f64,
) -> Result<QfiResult> {
    if !(1e-5..=1e-2).contains(&dphi) {
        return Err(domain(format!("dphi={dphi} outside [1e-5, 1e-2]")));
    }
    let channel = Channel::new(state.photons(), *loss);
    let spectra: Vec<(f64, DVector<f64>, DMatrix<f64>)> = (0..=state.photons())
        .into_par_iter()
        .map(|k| {
            let block = assemble_with(&channel, state, k);
            let w = block.trace();
            let eig = block.eigen()?;
            let keep: Vec<usize> = (0..eig.values.len())
                .filter(|&i| eig.values[i] > 1e-14 * w)
                .collect();
            let vals = DVector::from_iterator(keep.len(), keep.iter().map(|&i| eig.values[i]));
            let vecs = eig.vectors.select_columns(&keep);
            Ok((w, vals, vecs))
        })
        .collect::<Result<Vec<_>>>()?;
    let bures = |h: f64| -> f64 {
        let root_fidelity: f64 = spectra
            .iter()
            .map(|(_, vals, vecs)| block_root_fidelity(vals, vecs, phi0, phi0 + h))
            .sum();
        8.0 * (1.0 - root_fidelity) / (h * h)
    };
    let coarse = bures(dphi);
    let fine = bures(0.5 * dphi);
    Ok(QfiResult {
        value: ((4.0 * fine - coarse) / 3.0).max(0.0),
        upper_bound: reported_bound(state, loss),
        per_block: None,
        method: Method::FidelityOracle,
    })
}

/// `|| sqrt(L) (D_a U)^H (D_b U) sqrt(L) ||_1` for a block `U L U^T` rotated
/// by `D_x = diag(e^{i m x})`.
fn block_root_fidelity(vals: &DVector<f64>, vecs: &DMatrix<f64>, a: f64, b: f64) -> f64 {
    let r = vals.len();
    if r == 0 {
        return 0.0;
    }
    let d = vecs.nrows();
    let mut re = DMatrix::zeros(r, r);
    let mut im = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            let (mut sr, mut si) = (0.0, 0.0);
            for m in 0..d {
                let (ca, sa) = ((m as f64 * a).cos(), (m as f64 * a).sin());
                let (cb, sb) = ((m as f64 * b).cos(), (m as f64 * b).sin());
                // conj(e^{i m a} U_mi) * e^{i m b} U_mj
                let (xr, xi) = (ca * vecs[(m, i)], -sa * vecs[(m, i)]);
                let (yr, yi) = (cb * vecs[(m, j)], sb * vecs[(m, j)]);
                sr += xr * yr - xi * yi;
                si += xr * yi + xi * yr;
            }
            let s = (vals[i] * vals[j]).sqrt();
            re[(i, j)] = s * sr;
            im[(i, j)] = s * si;
        }
    }
    complex_trace_norm(&re, &im)
}

/// Reusable QFI evaluator at fixed `N` and loss, taking raw (not
/// necessarily normalized) amplitudes. The QFI is homogeneous of degree two
/// in the amplitudes.
#[derive(Debug, Clone)]
pub struct QfiEvaluator {
    channel: Channel,
    mode: EvalMode,
}

#[derive(Debug, Clone)]
enum EvalMode {
    /// Loss in mode 1 only.
    Single(LossTable),
    /// Loss in mode 2 only, evaluated on the mirrored state.
    Mirrored(LossTable),
    Blocks,
}

impl QfiEvaluator {
    pub fn new(n: usize, loss: LossModel) -> Self {
        Self::with_channel(Channel::new(n, loss), true)
    }

    fn with_channel(channel: Channel, branch_sum: bool) -> Self {
        let loss = channel.loss();
        let n = channel.photons();
        let mode = if branch_sum && loss.mode2.is_lossless() {
            EvalMode::Single(LossTable::new(n, loss.mode1))
        } else if branch_sum && loss.mode1.is_lossless() {
            EvalMode::Mirrored(LossTable::new(n, loss.mode2))
        } else {
            EvalMode::Blocks
        };
        Self { channel, mode }
    }

    pub fn photons(&self) -> usize {
        self.channel.photons()
    }

    pub fn loss(&self) -> LossModel {
        self.channel.loss()
    }

    pub fn value(&self, phi: &[f64]) -> Result<f64> {
        match &self.mode {
            EvalMode::Single(t) => Ok(single_value(phi, t)),
            EvalMode::Mirrored(t) => {
                let rev: Vec<f64> = phi.iter().rev().copied().collect();
                Ok(single_value(&rev, t))
            }
            EvalMode::Blocks => Ok(self.blocks(phi)?.iter().map(|b| b.weight * b.qfi).sum()),
        }
    }

    /// Value and gradient with respect to the amplitudes.
    pub fn value_and_gradient(&self, phi: &[f64]) -> Result<(f64, Vec<f64>)> {
        match &self.mode {
            EvalMode::Single(t) => Ok(single_amplitude_gradient(phi, t)),
            EvalMode::Mirrored(t) => {
                let rev: Vec<f64> = phi.iter().rev().copied().collect();
                let (v, mut g) = single_amplitude_gradient(&rev, t);
                g.reverse();
                Ok((v, g))
            }
            EvalMode::Blocks => self.block_gradient(phi),
        }
    }

    fn blocks(&self, phi: &[f64]) -> Result<Vec<BlockQfi>> {
        let state = raw_state(phi);
        (0..=self.photons())
            .into_par_iter()
            .map(|k| {
                let f = self.channel.block_factor(&state, k);
                let w = f.trace();
                if w < MIN_WEIGHT {
                    return Ok(BlockQfi {
                        k,
                        weight: w,
                        qfi: 0.0,
                    });
                }
                let (val, _) = factored_block(k, &f.columns, false)?;
                Ok(BlockQfi {
                    k,
                    weight: w,
                    qfi: val / w,
                })
            })
            .collect()
    }

    fn block_gradient(&self, phi: &[f64]) -> Result<(f64, Vec<f64>)> {
        let state = raw_state(phi);
        let n = self.photons();
        let parts: Vec<(f64, Vec<f64>)> = (0..=n)
            .into_par_iter()
            .map(|k| {
                let f = self.channel.block_factor(&state, k);
                let mut g = vec![0.0; n + 1];
                if f.trace() < MIN_WEIGHT {
                    return Ok((0.0, g));
                }
                let (val, gv) = factored_block(k, &f.columns, true)?;
                let gv = gv.expect("gradient requested");
                for (j, &k1) in f.branches.iter().enumerate() {
                    for m in 0..f.dim() {
                        g[m + k1] += gv[(m, j)] * self.channel.branch_coefficient(m, k1, k);
                    }
                }
                Ok((val, g))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut value = 0.0;
        let mut grad = vec![0.0; n + 1];
        for (v, g) in parts {
            value += v;
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        Ok((value, grad))
    }
}

/// The amplitudes wrapped without validation; only used internally where
/// the factor columns are linear in them.
fn raw_state(phi: &[f64]) -> InputState {
    crate::states::InputState::unchecked(phi.to_vec())
}

fn single_value(phi: &[f64], table: &LossTable) -> f64 {
    single_mode_blocks(phi, table)
        .iter()
        .map(|b| b.weight * b.qfi)
        .sum()
}

fn single_amplitude_gradient(phi: &[f64], table: &LossTable) -> (f64, Vec<f64>) {
    let p: Vec<f64> = phi.iter().map(|a| a * a).collect();
    let (v, gp) = single_mode_gradient(&p, table);
    (v, gp.iter().zip(phi).map(|(g, a)| 2.0 * g * a).collect())
}

/// QFI contribution `tr(rho) F_k` of one block `rho = V V^T`, and optionally
/// its gradient with respect to `V`.
fn factored_block(
    k: usize,
    v: &DMatrix<f64>,
    gradient: bool,
) -> Result<(f64, Option<DMatrix<f64>>)> {
    let (d, c) = v.shape();
    let m = DVector::from_iterator(d, (0..d).map(|i| i as f64));
    let trace: f64 = v.iter().map(|x| x * x).sum();
    let diag: f64 = (0..d)
        .map(|i| m[i] * m[i] * v.row(i).iter().map(|x| x * x).sum::<f64>())
        .sum();

    let (lambda, u) = if c <= d {
        let g = v.transpose() * v;
        let eig = g.symmetric_eigen();
        let mut sorted = crate::linalg::SymmetricEigen {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        };
        clip_spectrum(k, &mut sorted, trace)?;
        let keep: Vec<usize> = (0..c)
            .filter(|&i| sorted.values[i] > EIGEN_CUTOFF * trace)
            .collect();
        let lam = DVector::from_iterator(keep.len(), keep.iter().map(|&i| sorted.values[i]));
        let mut u = v * sorted.vectors.select_columns(&keep);
        for (j, l) in lam.iter().enumerate() {
            u.column_mut(j).scale_mut(1.0 / l.sqrt());
        }
        (lam, u)
    } else {
        let rho = v * v.transpose();
        let eig = rho.symmetric_eigen();
        let mut sorted = crate::linalg::SymmetricEigen {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        };
        clip_spectrum(k, &mut sorted, trace)?;
        let keep: Vec<usize> = (0..d)
            .filter(|&i| sorted.values[i] > EIGEN_CUTOFF * trace)
            .collect();
        let lam = DVector::from_iterator(keep.len(), keep.iter().map(|&i| sorted.values[i]));
        (lam, sorted.vectors.select_columns(&keep))
    };

    let r = lambda.len();
    let mut b = u.clone();
    for i in 0..d {
        b.row_mut(i).scale_mut(m[i]);
    }
    let ms = u.transpose() * &b;
    let mut second = 0.0;
    for i in 0..r {
        for j in 0..r {
            let (li, lj) = (lambda[i], lambda[j]);
            second += 8.0 * li * lj / (li + lj) * ms[(i, j)] * ms[(i, j)];
        }
    }
    let value = 4.0 * diag - second;
    if !gradient {
        return Ok((value, None));
    }

    // A is the real operator with i A the symmetric logarithmic derivative,
    // applied without forming it: range-range, range-kernel and kernel-range
    // parts.
    let mut a_tilde = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            let (li, lj) = (lambda[i], lambda[j]);
            a_tilde[(i, j)] = 2.0 * ms[(i, j)] * (lj - li) / (li + lj);
        }
    }
    let b_perp = &b - &u * &ms;
    let apply = |x: &DMatrix<f64>| -> DMatrix<f64> {
        let y = u.transpose() * x;
        let bx = b.transpose() * x;
        &u * (&a_tilde * &y) - (&u * (bx - &ms * &y)) * 2.0 + (&b_perp * &y) * 2.0
    };
    let scale_rows = |x: &DMatrix<f64>| -> DMatrix<f64> {
        let mut out = x.clone();
        for i in 0..d {
            out.row_mut(i).scale_mut(m[i]);
        }
        out
    };
    let av = apply(v);
    let gamma = apply(&av) - apply(&scale_rows(v)) * 2.0 + scale_rows(&av) * 2.0;
    Ok((value, Some(gamma * 2.0)))
}

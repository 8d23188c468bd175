//! Binomial photon loss: coefficients, branch weights, the density blocks
//! left after a fixed total number of photons has been lost, and the Poisson
//! kernel that replaces the binomial when `N` is large at fixed `r`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::linalg::{jacobi_eigen, SymmetricEigen};
use crate::params::{LossFraction, LossModel, RescaledLoss};
use crate::special::{binomial_pmf, poisson_pmf};
use crate::states::InputState;

/// Relative eigenvalue tolerance separating rounding noise from a broken
/// block.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// `Lambda_{n;k} = C(n, k) R^k (1 - R)^(n - k)`.
pub fn loss_coefficient(n: usize, k: usize, loss: LossFraction) -> Result<f64> {
    if k > n {
        return Err(domain(format!("lost photons k={k} exceed n={n}")));
    }
    Ok(binomial_pmf(
        n as u64,
        k as u64,
        loss.value(),
        loss.transmission(),
    ))
}

/// Triangular table of `sqrt(Lambda_{n;k})` for `0 <= k <= n <= N`.
#[derive(Debug, Clone)]
pub struct LossTable {
    loss: LossFraction,
    n_max: usize,
    sqrt: Vec<f64>,
}

impl LossTable {
    pub fn new(n_max: usize, loss: LossFraction) -> Self {
        let mut sqrt = Vec::with_capacity((n_max + 1) * (n_max + 2) / 2);
        for n in 0..=n_max {
            for k in 0..=n {
                sqrt.push(
                    binomial_pmf(n as u64, k as u64, loss.value(), loss.transmission()).sqrt(),
                );
            }
        }
        Self { loss, n_max, sqrt }
    }

    pub fn loss(&self) -> LossFraction {
        self.loss
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `sqrt(Lambda_{n;k})`, zero when `k > n`.
    #[inline]
    pub fn sqrt_coefficient(&self, n: usize, k: usize) -> f64 {
        if k > n {
            0.0
        } else {
            self.sqrt[n * (n + 1) / 2 + k]
        }
    }

    #[inline]
    pub fn coefficient(&self, n: usize, k: usize) -> f64 {
        self.sqrt_coefficient(n, k).powi(2)
    }
}

/// Probabilities `w_k` of losing exactly `k` photons in mode 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchWeights(pub Vec<f64>);

impl BranchWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// `w_k = sum_n Lambda_{n;k} phi_n^2` for loss in mode 1 only.
pub fn branch_weights(state: &InputState, loss: LossFraction) -> BranchWeights {
    let n = state.photons();
    let table = LossTable::new(n, loss);
    branch_weights_with(state, &table)
}

pub(crate) fn branch_weights_with(state: &InputState, table: &LossTable) -> BranchWeights {
    let n = state.photons();
    let p = state.probabilities();
    let mut w = vec![0.0; n + 1];
    for (nn, pn) in p.iter().enumerate() {
        if *pn == 0.0 {
            continue;
        }
        for (k, wk) in w.iter_mut().enumerate().take(nn + 1) {
            *wk += table.coefficient(nn, k) * pn;
        }
    }
    BranchWeights(w)
}

/// Precomputed loss tables for both arms at a fixed total photon number.
#[derive(Debug, Clone)]
pub struct Channel {
    n: usize,
    loss: LossModel,
    mode1: LossTable,
    mode2: LossTable,
}

impl Channel {
    pub fn new(n: usize, loss: LossModel) -> Self {
        Self {
            n,
            loss,
            mode1: LossTable::new(n, loss.mode1),
            mode2: LossTable::new(n, loss.mode2),
        }
    }

    pub fn photons(&self) -> usize {
        self.n
    }

    pub fn loss(&self) -> LossModel {
        self.loss
    }

    /// Range of `k1` (photons lost from mode 1) that can contribute to
    /// block `k`.
    pub fn branch_range(&self, k: usize) -> std::ops::RangeInclusive<usize> {
        let lo = if self.loss.mode2.is_lossless() { k } else { 0 };
        let hi = if self.loss.mode1.is_lossless() { 0 } else { k };
        lo..=hi.max(lo).min(k)
    }

    /// Branch coefficient `sqrt(Lambda1_{m+k1;k1} Lambda2_{N-m-k1;k-k1})`
    /// multiplying `phi_{m+k1}` in column `k1` of block `k`.
    #[inline]
    pub fn branch_coefficient(&self, m: usize, k1: usize, k: usize) -> f64 {
        let n1 = m + k1;
        self.mode1.sqrt_coefficient(n1, k1) * self.mode2.sqrt_coefficient(self.n - n1, k - k1)
    }

    /// Columns `u_{k1}` with `rho_k = sum_{k1} u_{k1} u_{k1}^T`. Each column
    /// is the unnormalized pure state of one `(k1, k - k1)` loss branch.
    pub fn block_factor(&self, state: &InputState, k: usize) -> BlockFactor {
        let dim = self.n - k + 1;
        let phi = state.amplitudes();
        let mut cols: Vec<(usize, Vec<f64>)> = Vec::new();
        for k1 in self.branch_range(k) {
            let col: Vec<f64> = (0..dim)
                .map(|m| self.branch_coefficient(m, k1, k) * phi[m + k1])
                .collect();
            if col.iter().any(|&v| v != 0.0) {
                cols.push((k1, col));
            }
        }
        let mut columns = DMatrix::zeros(dim, cols.len());
        for (j, (_, col)) in cols.iter().enumerate() {
            columns.set_column(j, &nalgebra::DVector::from_column_slice(col));
        }
        BlockFactor {
            k,
            branches: cols.into_iter().map(|c| c.0).collect(),
            columns,
        }
    }
}

/// Low-rank factor `V` of a density block, `rho_k = V V^T`.
#[derive(Debug, Clone)]
pub struct BlockFactor {
    pub k: usize,
    /// Value of `k1` for each column.
    pub branches: Vec<usize>,
    pub columns: DMatrix<f64>,
}

impl BlockFactor {
    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.columns.iter().map(|v| v * v).sum()
    }
}

/// Density matrix of the branch with `k` photons lost in total, written in
/// the basis of the remaining mode-1 photon number `m = 0..=N-k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensityMatrix {
    pub k: usize,
    pub matrix: DMatrix<f64>,
}

impl BlockDensityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Eigendecomposition with small negative eigenvalues clipped to zero.
    pub fn eigen(&self) -> Result<SymmetricEigen> {
        let mut eig = jacobi_eigen(&self.matrix);
        clip_spectrum(self.k, &mut eig, self.trace())?;
        Ok(eig)
    }
}

pub(crate) fn clip_spectrum(k: usize, eig: &mut SymmetricEigen, trace: f64) -> Result<()> {
    let floor = -PSD_TOLERANCE * trace.abs();
    for v in eig.values.iter_mut() {
        if *v < 0.0 {
            if *v < floor {
                return Err(Error::Integrity {
                    k,
                    min_eigenvalue: *v,
                    trace,
                });
            }
            *v = 0.0;
        }
    }
    Ok(())
}

/// Dense density block for `k` photons lost in total.
pub fn assemble_block(
    state: &InputState,
    loss: &LossModel,
    k: usize,
) -> Result<BlockDensityMatrix> {
    let n = state.photons();
    if k > n {
        return Err(domain(format!("block index k={k} exceeds N={n}")));
    }
    let channel = Channel::new(n, *loss);
    Ok(assemble_with(&channel, state, k))
}

pub(crate) fn assemble_with(channel: &Channel, state: &InputState, k: usize) -> BlockDensityMatrix {
    let f = channel.block_factor(state, k);
    let mut matrix = &f.columns * f.columns.transpose();
    // exact symmetry regardless of summation order
    let d = matrix.nrows();
    for i in 0..d {
        for j in 0..i {
            let s = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            matrix[(i, j)] = s;
            matrix[(j, i)] = s;
        }
    }
    BlockDensityMatrix { k, matrix }
}

/// All blocks `k = 0..=N`, assembled in parallel and returned in order.
pub fn assemble_all(state: &InputState, loss: &LossModel) -> Vec<BlockDensityMatrix> {
    let channel = Channel::new(state.photons(), *loss);
    (0..=state.photons())
        .into_par_iter()
        .map(|k| assemble_with(&channel, state, k))
        .collect()
}

/// `P_k(x; r) = e^(-r x) (r x)^k / k!`.
pub fn poisson_kernel(x: f64, k: usize, r: RescaledLoss) -> f64 {
    poisson_pmf(k as u64, r.value() * x)
}

/// `d/dx P_k(x; r) = r (P_{k-1} - P_k)`.
pub fn poisson_kernel_dx(x: f64, k: usize, r: RescaledLoss) -> f64 {
    let prev = if k == 0 {
        0.0
    } else {
        poisson_kernel(x, k - 1, r)
    };
    r.value() * (prev - poisson_kernel(x, k, r))
}

/// Smallest `K` such that the Poisson(`r`) mass above `K` is below `tol`.
///
/// The tail of Poisson(`r x`) grows with `x`, so the same `K` bounds the
/// discarded mass for every `x <= 1`.
pub fn truncation_index(r: RescaledLoss, tol: f64) -> usize {
    assert!(tol > 0.0, "truncation tolerance must be positive");
    let lambda = r.value();
    if lambda == 0.0 {
        return 0;
    }
    let top = (lambda + 60.0 * lambda.sqrt() + 200.0).ceil() as usize;
    // tail[K] = sum_{k > K} pmf(k), accumulated from the far end so that the
    // smallest terms are added first
    let mut tail = 0.0;
    let mut answer = top;
    for k in (0..top).rev() {
        tail += poisson_pmf((k + 1) as u64, lambda);
        if tail >= tol {
            break;
        }
        answer = k;
    }
    answer
}

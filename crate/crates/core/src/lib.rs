//! Phase estimation with lossy two-mode photonic states: optimal input
//! states, their quantum Fisher information, and the large-`N` continuum
//! description.

pub mod airy;
pub mod asymptotics;
pub mod continuum;
mod error;
pub mod linalg;
pub mod loss;
pub mod optimizer;
pub mod params;
pub mod qfi;
pub mod simplex;
pub mod special;
pub mod states;

pub use airy::{airy_ai, airy_ai_prime, airy_first_zero};
pub use asymptotics::{
    airy_optimal_state, crossover, gaussian_optimal_state, qfi_asymptote_single, qfi_asymptote_two,
    width_exponent, AiryProfile, Asymptote, CrossoverEstimate, GaussianProfile,
};
pub use continuum::{
    bifurcation_scan, continuum_qfi, local_exponent, marginal_gain, optimal_state,
    optimize_components, BifurcationRecord, BifurcationScan, ComponentOptimum, ContinuumState,
    ScanConfig, ThresholdTable,
};
pub use error::{Error, Result};
pub use loss::{
    assemble_block, branch_weights, loss_coefficient, poisson_kernel, truncation_index,
    BlockDensityMatrix, BranchWeights, Channel,
};
pub use optimizer::{
    optimize_state, qfi_gradient_single_mode, support_report, OptimizerConfig, Optimum,
    SupportReport,
};
pub use params::{
    classical_baseline, loss_from_damping, precision_from_fisher, rescaled_loss, LossFraction,
    LossModel, PhotonNumber, Precision, RescaledLoss,
};
pub use qfi::{
    qfi, qfi_eigen, qfi_eigen_dense, qfi_fidelity_oracle, qfi_single_mode, qfi_upper_bound,
    qfi_upper_bound_state, Method, QfiEvaluator, QfiResult,
};
pub use states::{
    binomial_state, holland_burnett_state, multi_component_state, noon_state, normalize, InputState,
};

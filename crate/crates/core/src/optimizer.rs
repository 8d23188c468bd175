//! Optimal finite-`N` input states.
//!
//! With loss in one arm the Fisher information is concave in the
//! probabilities `p_n = phi_n^2`, and the maximum is found by a barrier
//! Newton method with a duality-gap certificate. With loss in both arms the
//! objective is not concave; it is maximized by L-BFGS on the unit sphere of
//! amplitudes from several structured and random starts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{airy_optimal_state, gaussian_optimal_state};
use crate::continuum::ContinuumState;
use crate::error::{domain, Result};
use crate::loss::LossTable;
use crate::params::{rescaled_loss, LossFraction, LossModel, PhotonNumber};
use crate::qfi::{qfi, single_mode_gradient, QfiEvaluator, QfiResult};
use crate::simplex::BranchProblem;
use crate::states::{binomial_state, noon_state, normalize, InputState};

/// Relative duality gap `(max_n g_n - F) / F` below which a single-arm
/// optimum counts as converged. The gap bounds the distance to the global
/// maximum because the objective is concave in `p`.
pub const GAP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Tolerance on the norm of the sphere-tangent gradient, relative to
    /// `max(F, 1)`.
    pub grad_tol: f64,
    /// Sufficient-increase constant of the backtracking line search.
    pub armijo: f64,
    /// Step shrink factor of the backtracking line search.
    pub backtrack: f64,
    pub seed: u64,
    pub sparsify_threshold: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 5000,
            grad_tol: 1e-10,
            armijo: 1e-4,
            backtrack: 0.5,
            seed: 0x5eed,
            sparsify_threshold: 1e-9,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(domain("at least one restart is required"));
        }
        let positive = [
            self.grad_tol,
            self.armijo,
            self.backtrack,
            self.sparsify_threshold,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || self.backtrack >= 1.0 || self.armijo >= 1.0 {
            return Err(domain(
                "optimizer tolerances must be positive and step factors below 1",
            ));
        }
        Ok(())
    }
}

/// Where a restart began.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    Barrier,
    Noon,
    Uniform,
    Binomial,
    Gaussian,
    Airy,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub start: StartKind,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub state: InputState,
    pub qfi: QfiResult,
    /// Photon numbers with `p_n` above the sparsify threshold, ascending.
    pub support: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    pub restarts: Vec<RestartRecord>,
    /// Certified relative gap for the concave single-arm problem.
    pub duality_gap: Option<f64>,
    /// The mirror image `n -> N - n` is an equally good, distinct optimum.
    pub mirror_degenerate: bool,
    /// Objective after each accepted iteration of the winning restart
    /// (two-arm loss only).
    pub history: Vec<f64>,
}

/// Maximizes the Fisher information over `N`-photon input states.
pub fn optimize_state(
    n: PhotonNumber,
    loss: &LossModel,
    config: &OptimizerConfig,
) -> Result<Optimum> {
    config.validate()?;
    if loss.is_single_mode() {
        optimize_single_arm(n, loss, config)
    } else {
        optimize_two_arm(n, loss, config)
    }
}

fn optimize_single_arm(
    n: PhotonNumber,
    loss: &LossModel,
    config: &OptimizerConfig,
) -> Result<Optimum> {
    let nn = n.get();
    let mirrored = loss.mode2.value() > 0.0;
    let lossy = if mirrored { loss.mode2 } else { loss.mode1 };
    let table = LossTable::new(nn, lossy);
    let problem = BranchProblem::new((0..=nn).map(|v| v as f64).collect(), nn + 1, |j, k| {
        table.coefficient(j, k)
    });
    let sol = problem.maximize(None);
    let mut p = sparsify(&sol.p, config.sparsify_threshold);
    if mirrored {
        p.reverse();
    }
    let state = InputState::from_probabilities(&p)?;
    let result = qfi(&state, loss)?;
    let converged = sol.relative_gap < GAP_TOLERANCE;
    log::debug!(
        "single-arm optimum N={nn} R={}: F={} gap={:e} after {} Newton steps",
        lossy.value(),
        result.value,
        sol.relative_gap,
        sol.newton_steps
    );
    Ok(Optimum {
        support: support_of(&state, config.sparsify_threshold),
        restarts: vec![RestartRecord {
            start: StartKind::Barrier,
            value: result.value,
            converged,
            iterations: sol.newton_steps,
        }],
        qfi: result,
        state,
        converged,
        iterations: sol.newton_steps,
        duality_gap: Some(sol.relative_gap),
        mirror_degenerate: false,
        history: Vec::new(),
    })
}

fn sparsify(p: &[f64], threshold: f64) -> Vec<f64> {
    let kept: Vec<f64> = p
        .iter()
        .map(|&v| if v > threshold { v } else { 0.0 })
        .collect();
    let total: f64 = kept.iter().sum();
    kept.iter().map(|v| v / total).collect()
}

fn support_of(state: &InputState, threshold: f64) -> Vec<usize> {
    state.support(threshold)
}

fn starts(
    n: PhotonNumber,
    loss: &LossModel,
    config: &OptimizerConfig,
) -> Result<Vec<(StartKind, Vec<f64>)>> {
    let nn = n.get();
    let r1 = rescaled_loss(n, loss.mode1);
    let r2 = rescaled_loss(n, loss.mode2);
    let x_star = r1.value().sqrt() / (r1.value().sqrt() + r2.value().sqrt());
    let lossier = if r1.value() >= r2.value() { r1 } else { r2 };
    let mut airy = airy_optimal_state(n, lossier)?.amplitudes().to_vec();
    if r2.value() > r1.value() {
        airy.reverse();
    }
    let mut out = vec![
        (
            StartKind::Gaussian,
            gaussian_optimal_state(n, r1, r2)?.amplitudes().to_vec(),
        ),
        (StartKind::Noon, noon_state(n).amplitudes().to_vec()),
        (
            StartKind::Uniform,
            vec![1.0 / ((nn + 1) as f64).sqrt(); nn + 1],
        ),
        (
            StartKind::Binomial,
            binomial_state(n, x_star)?.amplitudes().to_vec(),
        ),
        (StartKind::Airy, airy),
    ];
    for i in out.len()..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(i as u64));
        let draws: Vec<f64> = (0..=nn).map(|_| Exp1.sample(&mut rng)).collect();
        // Dirichlet(1, ..., 1) probabilities
        let total: f64 = draws.iter().sum();
        out.push((
            StartKind::Random,
            draws.iter().map(|d| (d / total).sqrt()).collect(),
        ));
    }
    out.truncate(config.restarts);
    Ok(out)
}

struct Ascent {
    phi: Vec<f64>,
    converged: bool,
    iterations: usize,
    history: Vec<f64>,
}

fn optimize_two_arm(
    n: PhotonNumber,
    loss: &LossModel,
    config: &OptimizerConfig,
) -> Result<Optimum> {
    let eval = QfiEvaluator::new(n.get(), *loss);
    let seeds = starts(n, loss, config)?;
    let runs: Vec<(StartKind, Ascent)> = seeds
        .into_par_iter()
        .map(|(kind, start)| Ok((kind, sphere_lbfgs(&eval, start, config)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut candidates = Vec::with_capacity(runs.len());
    for (kind, run) in &runs {
        let p = sparsify(
            &run.phi.iter().map(|a| a * a).collect::<Vec<_>>(),
            config.sparsify_threshold,
        );
        let mut state = InputState::from_probabilities(&p)?;
        if loss.is_symmetric() && state.mean_photons() < 0.5 * n.get() as f64 {
            state = state.reversed();
        }
        let value = qfi(&state, loss)?.value;
        candidates.push((*kind, state, value));
    }
    let best_value = candidates
        .iter()
        .map(|c| c.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-9 * best_value.abs().max(1e-300);
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.2 < best_value - tie {
            continue;
        }
        let b = &candidates[best];
        if b.2 < best_value - tie || c.1.mean_photons() > b.1.mean_photons() + 1e-12 {
            best = i;
        }
    }
    let (_, state, _) = candidates[best].clone();
    let run = &runs[best].1;
    let result = qfi(&state, loss)?;
    let mirror_degenerate = loss.is_symmetric() && state.overlap(&state.reversed()) < 1.0 - 1e-6;
    let restarts = runs
        .iter()
        .zip(&candidates)
        .map(|((kind, r), c)| RestartRecord {
            start: *kind,
            value: c.2,
            converged: r.converged,
            iterations: r.iterations,
        })
        .collect();
    Ok(Optimum {
        support: support_of(&state, config.sparsify_threshold),
        converged: run.converged,
        iterations: run.iterations,
        restarts,
        qfi: result,
        state,
        duality_gap: None,
        mirror_degenerate,
        history: run.history.clone(),
    })
}

/// Objective `F(v) / |v|^2` and its gradient `(g - 2 f v) / |v|^2`.
fn sphere_objective(eval: &QfiEvaluator, v: &[f64]) -> Result<(f64, Vec<f64>)> {
    let norm2: f64 = v.iter().map(|x| x * x).sum();
    let (f, g) = eval.value_and_gradient(v)?;
    let f = f / norm2;
    let grad = g
        .iter()
        .zip(v)
        .map(|(gi, vi)| gi / norm2 - 2.0 * f * vi / norm2)
        .collect();
    Ok((f, grad))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative gradient norm accepted once the objective stops changing. Near
/// the optimum some directions have curvature hundreds of times `F`, so the
/// remaining gain along a gradient of this size is below rounding and
/// `grad_tol` itself is out of reach.
const STALL_GRAD_TOL: f64 = 1e-4;

fn sphere_lbfgs(eval: &QfiEvaluator, start: Vec<f64>, config: &OptimizerConfig) -> Result<Ascent> {
    const MEMORY: usize = 10;
    let mut v = normalize(&start.iter().map(|a| a.abs()).collect::<Vec<_>>())?
        .amplitudes()
        .to_vec();
    let (mut f, mut g) = sphere_objective(eval, &v)?;
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let mut stalls = 0;
    while iterations < config.max_iters {
        let vnorm = dot(&v, &v).sqrt();
        let gnorm = dot(&g, &g).sqrt() * vnorm;
        if gnorm <= config.grad_tol * f.max(1.0) {
            converged = true;
            break;
        }
        // two-loop recursion on the ascent problem (curvature pairs are
        // stored for -f, so the quasi-Newton matrix stays positive)
        let mut q: Vec<f64> = g.iter().map(|x| -x).collect();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y) in pairs.iter().rev() {
            let a = dot(s, &q) / dot(y, s);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = match pairs.last() {
            Some((s, y)) => dot(s, y) / dot(y, y),
            None => 0.1 / dot(&g, &g).sqrt().max(1e-300),
        };
        q.iter_mut().for_each(|x| *x *= gamma);
        for ((s, y), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = dot(y, &q) / dot(y, s);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|x| -x).collect();
        let mut slope = dot(&g, &dir);
        if !(slope > 0.0) {
            dir = g.clone();
            slope = dot(&g, &g);
            pairs.clear();
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-8 {
            let trial: Vec<f64> = v.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let (ft, gt) = sphere_objective(eval, &trial)?;
            if ft >= f + config.armijo * t * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= config.backtrack;
        }
        let Some((trial, ft, gt)) = accepted else {
            // no further increase is resolvable in floating point
            converged = gnorm <= STALL_GRAD_TOL * f.max(1.0);
            break;
        };
        iterations += 1;
        let s: Vec<f64> = trial.iter().zip(&v).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| b - a).collect();
        if dot(&s, &y) > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            pairs.push((s, y));
            if pairs.len() > MEMORY {
                pairs.remove(0);
            }
        }
        if (ft - f).abs() <= 1e-13 * ft.abs() {
            stalls += 1;
        } else {
            stalls = 0;
        }
        v = trial;
        f = ft;
        g = gt;
        history.push(f);
        let norm = dot(&v, &v).sqrt();
        if !(0.5..=2.0).contains(&norm) {
            v.iter_mut().for_each(|x| *x /= norm);
            g.iter_mut().for_each(|x| *x *= norm);
            pairs.clear();
        }
        if stalls >= 2 {
            let gn = dot(&g, &g).sqrt() * dot(&v, &v).sqrt();
            converged = gn <= STALL_GRAD_TOL * f.max(1.0);
            break;
        }
    }
    let norm = dot(&v, &v).sqrt();
    Ok(Ascent {
        phi: v.iter().map(|x| x.abs() / norm).collect(),
        converged,
        iterations,
        history,
    })
}

/// `dF/dp_n = 4 sum_k Lambda_{n;k} (n - mu_k)^2` for loss in mode 1.
pub fn qfi_gradient_single_mode(
    p: &[f64],
    n: PhotonNumber,
    loss: LossFraction,
) -> Result<Vec<f64>> {
    if p.len() != n.get() + 1 {
        return Err(domain(format!(
            "expected {} probabilities, got {}",
            n.get() + 1,
            p.len()
        )));
    }
    let total: f64 = p.iter().sum();
    if p.iter().any(|v| !(*v >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(domain("probabilities must be nonnegative and sum to 1"));
    }
    let table = LossTable::new(n.get(), loss);
    Ok(single_mode_gradient(p, &table).1)
}

/// A run of adjacent photon numbers in the support of an optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub first: usize,
    pub last: usize,
    /// Weighted mean of `n / N`.
    pub mean_x: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub clusters: Vec<Cluster>,
    pub predicted: Vec<(f64, f64)>,
    pub count_match: bool,
    /// Largest `|mean_x - x_l|` when the counts match.
    pub max_position_error: Option<f64>,
    pub max_weight_error: Option<f64>,
}

/// Groups the support of `optimum` into clusters separated by gaps larger
/// than one and compares them with continuum components.
pub fn support_report(optimum: &Optimum, prediction: &ContinuumState) -> SupportReport {
    let n = optimum.state.photons() as f64;
    let p = optimum.state.probabilities();
    let mut clusters: Vec<Cluster> = Vec::new();
    for &s in &optimum.support {
        match clusters.last_mut() {
            Some(c) if s == c.last + 1 => c.last = s,
            _ => clusters.push(Cluster {
                first: s,
                last: s,
                mean_x: 0.0,
                weight: 0.0,
            }),
        }
    }
    for c in &mut clusters {
        let w: f64 = (c.first..=c.last).map(|i| p[i]).sum();
        let m: f64 = (c.first..=c.last).map(|i| p[i] * i as f64).sum();
        c.weight = w;
        c.mean_x = m / w / n;
    }
    let predicted: Vec<(f64, f64)> = prediction
        .components()
        .iter()
        .map(|c| (c.x, c.rho))
        .collect();
    let count_match = predicted.len() == clusters.len();
    let (max_position_error, max_weight_error) = if count_match {
        let pos = clusters
            .iter()
            .zip(&predicted)
            .map(|(c, q)| (c.mean_x - q.0).abs())
            .fold(0.0, f64::max);
        let wt = clusters
            .iter()
            .zip(&predicted)
            .map(|(c, q)| (c.weight - q.1).abs())
            .fold(0.0, f64::max);
        (Some(pos), Some(wt))
    } else {
        (None, None)
    };
    SupportReport {
        clusters,
        predicted,
        count_match,
        max_position_error,
        max_weight_error,
    }
}

//! The large-`N` limit of single-arm loss at fixed `r = N R / (1 - R)`.
//!
//! States become finitely supported measures `sum_l rho_l delta(x - x_l)` on
//! `[0, 1]` and the binomial loss kernel becomes the Poisson kernel. The
//! rescaled Fisher information `F~ = F / N^2` is concave in the weights, so
//! a configuration whose marginal gain is nowhere positive is the global
//! optimum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::loss::truncation_index;
use crate::params::RescaledLoss;
use crate::simplex::BranchProblem;
use crate::special::poisson_pmf;

/// Components lighter than this are removed.
pub const WEIGHT_FLOOR: f64 = 1e-10;
/// Poisson tail mass discarded in every sum over branches.
pub const TAIL_TOLERANCE: f64 = 1e-15;
/// Positions closer than this to zero count as sitting at the origin.
pub const ORIGIN_TOLERANCE: f64 = 1e-9;
const MIN_WEIGHT: f64 = 1e-15;
const MERGE_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub x: f64,
    pub rho: f64,
}

/// Weights `rho_l` at positions `x_l`, sorted by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumState {
    components: Vec<Component>,
}

impl ContinuumState {
    pub fn new(components: &[(f64, f64)]) -> Result<Self> {
        if components.is_empty() {
            return Err(domain("a continuum state needs at least one component"));
        }
        let total: f64 = components.iter().map(|c| c.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain(format!("component weights sum to {total}")));
        }
        for (i, &(x, rho)) in components.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(domain(format!("position {x} outside [0, 1]")));
            }
            if !(rho >= WEIGHT_FLOOR) {
                return Err(domain(format!("weight {rho} below floor {WEIGHT_FLOOR}")));
            }
            if i > 0 && x <= components[i - 1].0 {
                return Err(domain("positions must be strictly increasing"));
            }
        }
        Ok(Self {
            components: components
                .iter()
                .map(|&(x, rho)| Component { x, rho })
                .collect(),
        })
    }

    /// `(0, 1/2), (1, 1/2)`.
    pub fn noon() -> Self {
        Self {
            components: vec![
                Component { x: 0.0, rho: 0.5 },
                Component { x: 1.0, rho: 0.5 },
            ],
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn has_origin(&self) -> bool {
        self.components[0].x <= ORIGIN_TOLERANCE
    }

    /// Builds a state from unsorted, possibly unnormalized components,
    /// merging coincident positions and dropping light ones.
    fn tidy(mut comps: Vec<Component>) -> Self {
        comps.retain(|c| c.rho > 0.0);
        comps.sort_by(|a, b| a.x.total_cmp(&b.x));
        let mut merged: Vec<Component> = Vec::with_capacity(comps.len());
        for c in comps {
            match merged.last_mut() {
                Some(m) if (c.x - m.x).abs() < MERGE_DISTANCE => {
                    let w = m.rho + c.rho;
                    // keep a pinned endpoint pinned
                    if m.x != 0.0 && c.x != 1.0 {
                        m.x = (m.x * m.rho + c.x * c.rho) / w;
                    } else if c.x == 1.0 {
                        m.x = 1.0;
                    }
                    m.rho = w;
                }
                _ => merged.push(c),
            }
        }
        let total: f64 = merged.iter().map(|c| c.rho).sum();
        merged.iter_mut().for_each(|c| c.rho /= total);
        if merged.len() > 1 {
            merged.retain(|c| c.rho >= WEIGHT_FLOOR);
            let total: f64 = merged.iter().map(|c| c.rho).sum();
            merged.iter_mut().for_each(|c| c.rho /= total);
        }
        Self { components: merged }
    }
}

/// `P_k(x; r)` for `k = 0..=kmax`, by recurrence outward from the mode.
fn poisson_column(lambda: f64, kmax: usize) -> Vec<f64> {
    let mut col = vec![0.0; kmax + 1];
    if lambda == 0.0 {
        col[0] = 1.0;
        return col;
    }
    let mode = (lambda.floor() as usize).min(kmax);
    col[mode] = poisson_pmf(mode as u64, lambda);
    for k in mode + 1..=kmax {
        col[k] = col[k - 1] * lambda / k as f64;
    }
    for k in (0..mode).rev() {
        col[k] = col[k + 1] * (k + 1) as f64 / lambda;
    }
    col
}

/// Branch statistics of a state at fixed `r`.
struct Branches {
    r: f64,
    kmax: usize,
    /// Conditional mean position per branch; `None` for empty branches.
    means: Vec<Option<f64>>,
    value: f64,
}

impl Branches {
    fn new(comps: &[Component], r: f64) -> Self {
        let kmax = truncation_index(RescaledLoss::new(r).expect("valid r"), TAIL_TOLERANCE);
        let cols: Vec<Vec<f64>> = comps
            .iter()
            .map(|c| poisson_column(r * c.x, kmax))
            .collect();
        let mut means = Vec::with_capacity(kmax + 1);
        let mut value = 0.0;
        for k in 0..=kmax {
            let (mut w, mut s1) = (0.0, 0.0);
            for (c, col) in comps.iter().zip(&cols) {
                w += c.rho * col[k];
                s1 += c.rho * col[k] * c.x;
            }
            if w < MIN_WEIGHT {
                means.push(None);
                continue;
            }
            let mu = s1 / w;
            for (c, col) in comps.iter().zip(&cols) {
                value += 4.0 * c.rho * col[k] * (c.x - mu).powi(2);
            }
            means.push(Some(mu));
        }
        Self {
            r,
            kmax,
            means,
            value,
        }
    }

    /// `D(x) = 4 sum_k P_k(x) (x - mu_k)^2` and its derivative in `x`.
    fn gain_terms(&self, x: f64) -> (f64, f64) {
        let col = poisson_column(self.r * x, self.kmax);
        let (mut d, mut dp) = (0.0, 0.0);
        for (k, mu) in self.means.iter().enumerate() {
            let Some(mu) = mu else { continue };
            let p = col[k];
            let prev = if k == 0 { 0.0 } else { col[k - 1] };
            let pd = self.r * (prev - p);
            let e = x - mu;
            d += 4.0 * p * e * e;
            dp += 4.0 * (pd * e * e + 2.0 * p * e);
        }
        (d, dp)
    }
}

/// Rescaled Fisher information `F~(r)` of a continuum state.
pub fn continuum_qfi(state: &ContinuumState, r: RescaledLoss) -> f64 {
    Branches::new(&state.components, r.value()).value
}

/// Gain `D(x) - F~` from moving an infinitesimal weight to `x`. At an
/// optimum it is zero on the support and nonpositive elsewhere.
pub fn marginal_gain(state: &ContinuumState, r: RescaledLoss, x: f64) -> f64 {
    let b = Branches::new(&state.components, r.value());
    b.gain_terms(x).0 - b.value
}

/// `d/dx D(x)`, the force on a component at `x`.
pub fn gain_slope(state: &ContinuumState, r: RescaledLoss, x: f64) -> f64 {
    Branches::new(&state.components, r.value()).gain_terms(x).1
}

/// A locally optimal configuration with a fixed number of components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentOptimum {
    pub state: ContinuumState,
    pub f_tilde: f64,
    /// Largest violation of the first-order conditions.
    pub residual: f64,
    /// Largest marginal gain over `[0, 1]`; nonpositive up to rounding at
    /// the global optimum. Only filled by [`optimal_state`].
    pub max_gain: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const RESIDUAL_TOL: f64 = 1e-12;
const CONVERGED_TOL: f64 = 1e-9;
const GAIN_TOL: f64 = 1e-10;

/// Maximizes `F~` over positions and weights starting from `seed` (or from
/// `m_plus_1` evenly spaced equal-weight components). Components may merge
/// or vanish but none are added.
pub fn optimize_components(
    r: RescaledLoss,
    m_plus_1: usize,
    seed: Option<&ContinuumState>,
) -> Result<ComponentOptimum> {
    if m_plus_1 < 2 {
        return Err(domain("at least two components are required"));
    }
    let comps = match seed {
        Some(s) => s.components.clone(),
        None => (0..m_plus_1)
            .map(|i| Component {
                x: i as f64 / (m_plus_1 - 1) as f64,
                rho: 1.0 / m_plus_1 as f64,
            })
            .collect(),
    };
    Ok(polish(r.value(), comps, false))
}

fn gradient(comps: &[Component], r: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let b = Branches::new(comps, r);
    let mut gx = Vec::with_capacity(comps.len());
    let mut grho = Vec::with_capacity(comps.len());
    for c in comps {
        let (d, dp) = b.gain_terms(c.x);
        grho.push(d);
        gx.push(c.rho * dp);
    }
    (b.value, gx, grho)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

struct Kkt {
    value: f64,
    gx: Vec<f64>,
    grho: Vec<f64>,
    bounds: Vec<Bound>,
    residual: f64,
}

fn kkt(comps: &[Component], r: f64, force_origin: bool) -> Kkt {
    let (value, gx, grho) = gradient(comps, r);
    let bounds: Vec<Bound> = comps
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.x <= 0.0 && (gx[i] <= 0.0 || (force_origin && i == 0)) {
                Bound::Lower
            } else if c.x >= 1.0 && gx[i] >= 0.0 {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect();
    let residual = if comps.len() == 1 {
        0.0
    } else {
        (0..comps.len())
            .map(|i| {
                let xr = if bounds[i] == Bound::Free {
                    gx[i].abs()
                } else {
                    0.0
                };
                (grho[i] - value).abs().max(xr)
            })
            .fold(0.0, f64::max)
    };
    Kkt {
        value,
        gx,
        grho,
        bounds,
        residual,
    }
}

/// Projected Newton iteration on positions and weights. With
/// `force_origin` the first component is held at `x = 0`.
fn polish(r: f64, comps: Vec<Component>, force_origin: bool) -> ComponentOptimum {
    let mut state = ContinuumState::tidy(comps);
    let mut iterations = 0;
    let mut cur = kkt(&state.components, r, force_origin);
    while iterations < 400 && cur.residual >= RESIDUAL_TOL {
        iterations += 1;
        let comps = &state.components;
        let m = comps.len();
        let free: Vec<usize> = (0..m).filter(|&i| cur.bounds[i] == Bound::Free).collect();
        let dir = newton_direction(comps, r, &free, &cur.gx, &cur.grho);
        let next = line_search(&state, r, &cur, &free, &dir, force_origin).or_else(|| {
            let mean: f64 = cur.grho.iter().sum::<f64>() / m as f64;
            let g: Vec<f64> = free
                .iter()
                .map(|&i| cur.gx[i])
                .chain(cur.grho.iter().map(|g| g - mean))
                .collect();
            line_search(&state, r, &cur, &free, &g, force_origin)
        });
        match next {
            Some((s, k)) => {
                state = s;
                cur = k;
            }
            None => break,
        }
    }
    ComponentOptimum {
        f_tilde: cur.value,
        converged: cur.residual < CONVERGED_TOL,
        residual: cur.residual,
        max_gain: None,
        iterations,
        state,
    }
}

/// Newton step for the free positions and all weights, restricted to
/// `sum rho = const` and made an ascent direction by flipping or lifting
/// nonnegative curvature.
fn newton_direction(
    comps: &[Component],
    r: f64,
    free: &[usize],
    gx: &[f64],
    grho: &[f64],
) -> Vec<f64> {
    let m = comps.len();
    let nf = free.len();
    let dim = nf + m;
    let grad_at = |c: &[Component]| -> Vec<f64> {
        let (_, a, b) = gradient(c, r);
        free.iter().map(|&i| a[i]).chain(b).collect()
    };
    let mut h = DMatrix::zeros(dim, dim);
    for v in 0..dim {
        let (mut plus, mut minus) = (comps.to_vec(), comps.to_vec());
        let (step, span) = if v < nf {
            let i = free[v];
            let e = 1e-6;
            let hi = (comps[i].x + e).min(1.0);
            let lo = (comps[i].x - e).max(0.0);
            plus[i].x = hi;
            minus[i].x = lo;
            (hi - lo, ())
        } else {
            let i = v - nf;
            let e = 1e-6 * comps[i].rho.max(1e-3);
            plus[i].rho += e;
            minus[i].rho = (minus[i].rho - e).max(0.0);
            (plus[i].rho - minus[i].rho, ())
        };
        let _ = span;
        let (gp, gm) = (grad_at(&plus), grad_at(&minus));
        for u in 0..dim {
            h[(u, v)] = (gp[u] - gm[u]) / step;
        }
    }
    let h = (&h + h.transpose()) * 0.5;
    // null-space basis of sum(d rho) = 0
    let mut z = DMatrix::zeros(dim, dim - 1);
    for a in 0..nf {
        z[(a, a)] = 1.0;
    }
    for i in 0..m - 1 {
        z[(nf + i, nf + i)] = 1.0;
        z[(nf + m - 1, nf + i)] = -1.0;
    }
    let g = DVector::from_iterator(dim, free.iter().map(|&i| gx[i]).chain(grho.iter().copied()));
    let hr = z.transpose() * &h * &z;
    let gr = z.transpose() * &g;
    let eig = hr.symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(1e-12);
    let mut step = DVector::zeros(dim - 1);
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let curvature = if *lam < -1e-10 * scale {
            -lam
        } else {
            lam.abs().max(1e-6 * scale)
        };
        let q = eig.eigenvectors.column(j);
        step += q * (q.dot(&gr) / curvature);
    }
    (z * step).iter().copied().collect()
}

/// Backtracking along `dir` (free positions first, then weights) with
/// positions clipped to `[0, 1]` and weights kept positive. Once `F~` stops
/// changing beyond rounding, a step that shrinks the KKT residual is taken.
fn line_search(
    state: &ContinuumState,
    r: f64,
    cur: &Kkt,
    free: &[usize],
    dir: &[f64],
    force_origin: bool,
) -> Option<(ContinuumState, Kkt)> {
    let comps = &state.components;
    let m = comps.len();
    let nf = free.len();
    let mut t: f64 = 1.0;
    for i in 0..m {
        let d = dir[nf + i];
        if d < 0.0 {
            t = t.min(0.99 * comps[i].rho / -d);
        }
    }
    let noise = 1e-14 * cur.value.abs().max(1e-300);
    for _ in 0..60 {
        let mut next = comps.clone();
        for (a, &i) in free.iter().enumerate() {
            next[i].x = (comps[i].x + t * dir[a]).clamp(0.0, 1.0);
        }
        for i in 0..m {
            next[i].rho = comps[i].rho + t * dir[nf + i];
        }
        let cand = ContinuumState::tidy(next);
        let k = kkt(&cand.components, r, force_origin);
        if k.value > cur.value + noise
            || (k.value >= cur.value - noise && k.residual < 0.5 * cur.residual)
        {
            return Some((cand, k));
        }
        t *= 0.5;
    }
    None
}

fn max_gain(state: &ContinuumState, r: f64, grid: usize) -> (f64, f64) {
    let b = Branches::new(&state.components, r);
    let gain = |x: f64| b.gain_terms(x).0 - b.value;
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut best_i = 0;
    for i in 0..=grid {
        let x = i as f64 / grid as f64;
        let g = gain(x);
        if g > best.1 {
            best = (x, g);
            best_i = i;
        }
    }
    // golden-section refinement around the best grid point
    let h = 1.0 / grid as f64;
    let (mut lo, mut hi) = (
        (best_i as f64 * h - h).max(0.0),
        (best_i as f64 * h + h).min(1.0),
    );
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let a = hi - phi * (hi - lo);
        let c = lo + phi * (hi - lo);
        if gain(a) > gain(c) {
            hi = c;
        } else {
            lo = a;
        }
    }
    for x in [0.5 * (lo + hi), 0.0, 1.0] {
        let g = gain(x);
        if g > best.1 {
            best = (x, g);
        }
    }
    best
}

/// Global optimum at `r`: repeated polishing and insertion of a new
/// component wherever the marginal gain is positive, until the gain is
/// nowhere positive.
pub fn optimal_state(r: RescaledLoss, seed: Option<&ContinuumState>) -> Result<ComponentOptimum> {
    let rv = r.value();
    let start = seed.cloned().unwrap_or_else(|| grid_seed(rv));
    let mut opt = polish(rv, start.components.clone(), false);
    for _ in 0..30 {
        let (x, g) = max_gain(&opt.state, rv, 1000);
        opt.max_gain = Some(g);
        if g <= GAIN_TOL {
            return Ok(opt);
        }
        let near = opt.state.components.iter().any(|c| (c.x - x).abs() < 1e-6);
        let mut comps = opt.state.components.clone();
        if near {
            // the gain peaks at an existing component: nudge it and repolish
            for c in &mut comps {
                if (c.x - x).abs() < 1e-6 {
                    c.x = x;
                }
            }
        } else {
            let eps = 1e-3;
            comps.iter_mut().for_each(|c| c.rho *= 1.0 - eps);
            comps.push(Component { x, rho: eps });
        }
        opt = polish(rv, comps, false);
    }
    // repair from the discretized global problem
    let repaired = polish(rv, grid_seed(rv).components, false);
    let (_, g) = max_gain(&repaired.state, rv, 1000);
    let mut best = if repaired.f_tilde >= opt.f_tilde {
        repaired
    } else {
        opt
    };
    if best.max_gain.is_none() {
        best.max_gain = Some(g);
    }
    best.converged = false;
    Ok(best)
}

/// Clusters of the discretized optimum on a uniform grid, solved as a
/// concave problem over the grid weights.
fn grid_seed(r: f64) -> ContinuumState {
    const POINTS: usize = 401;
    let kmax = truncation_index(RescaledLoss::new(r).expect("valid r"), TAIL_TOLERANCE);
    let xs: Vec<f64> = (0..POINTS)
        .map(|i| i as f64 / (POINTS - 1) as f64)
        .collect();
    let cols: Vec<Vec<f64>> = xs.iter().map(|&x| poisson_column(r * x, kmax)).collect();
    let problem = BranchProblem::new(xs.clone(), kmax + 1, |j, k| cols[j][k]);
    let sol = problem.maximize(None);
    let pmax = sol.p.iter().fold(0.0f64, |a, b| a.max(*b));
    let mut comps: Vec<Component> = Vec::new();
    let mut last: Option<usize> = None;
    for (j, &p) in sol.p.iter().enumerate() {
        if p <= 1e-7 * pmax {
            continue;
        }
        match (last, comps.last_mut()) {
            (Some(l), Some(c)) if j == l + 1 => {
                let w = c.rho + p;
                c.x = (c.x * c.rho + xs[j] * p) / w;
                c.rho = w;
            }
            _ => comps.push(Component { x: xs[j], rho: p }),
        }
        last = Some(j);
    }
    ContinuumState::tidy(comps)
}

/// One grid point of a bifurcation scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationRecord {
    pub r: f64,
    pub state: ContinuumState,
    pub f_tilde: f64,
    pub alpha: f64,
    pub stationarity_residual: f64,
    pub max_gain: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// A component appears at the origin (`r_m`).
    Appearance,
    /// The component at the origin moves inward (`r'_m`).
    Detachment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub label: String,
    pub kind: ThresholdKind,
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub entries: Vec<Threshold>,
}

impl ThresholdTable {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|t| t.label == label)
            .map(|t| t.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Thresholds are bisected until the bracket is below this, relative.
    pub threshold_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            threshold_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationScan {
    pub records: Vec<BifurcationRecord>,
    pub thresholds: ThresholdTable,
}

/// `n` points spaced evenly in `ln r` on `[r_min, r_max]`.
pub fn log_grid(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![r_min];
    }
    let (a, b) = (r_min.ln(), r_max.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Follows the optimum along an increasing grid of `r` and locates the
/// values where components appear at or leave the origin.
pub fn bifurcation_scan(grid: &[f64], config: &ScanConfig) -> Result<BifurcationScan> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(domain(
            "r grid must be nonempty, nonnegative and strictly increasing",
        ));
    }
    let mut records: Vec<BifurcationRecord> = Vec::with_capacity(grid.len());
    let mut seed: Option<ContinuumState> = None;
    for &r in grid {
        let rr = RescaledLoss::new(r)?;
        let opt = optimal_state(rr, seed.as_ref())?;
        if !opt.converged {
            log::warn!(
                "continuum optimum at r={r} not certified (residual {:e})",
                opt.residual
            );
        }
        seed = Some(opt.state.clone());
        records.push(BifurcationRecord {
            r,
            f_tilde: opt.f_tilde,
            alpha: f64::NAN,
            stationarity_residual: opt.residual,
            max_gain: opt.max_gain.unwrap_or(f64::NAN),
            converged: opt.converged,
            state: opt.state,
        });
    }
    let alphas = local_exponent(&records);
    for (rec, (_, a)) in records.iter_mut().zip(alphas) {
        rec.alpha = a;
    }

    let mut entries = Vec::new();
    let (mut appear, mut detach) = (1usize, 0usize);
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        match (a.state.has_origin(), b.state.has_origin()) {
            (true, false) => {
                detach += 1;
                let v = bisect_detachment(a, b.r, config.threshold_tol);
                entries.push(Threshold {
                    label: format!("r'{detach}"),
                    kind: ThresholdKind::Detachment,
                    index: detach,
                    value: v,
                });
            }
            (false, true) => {
                appear += 1;
                let v = bisect_appearance(a, b.r, config.threshold_tol);
                entries.push(Threshold {
                    label: format!("r{appear}"),
                    kind: ThresholdKind::Appearance,
                    index: appear,
                    value: v,
                });
            }
            _ => {}
        }
    }
    Ok(BifurcationScan {
        records,
        thresholds: ThresholdTable { entries },
    })
}

/// Below the detachment point the component at the origin feels an inward
/// force `D'(0) <= 0`; the root of `D'(0)` along the pinned branch is the
/// threshold.
fn bisect_detachment(below: &BifurcationRecord, above_r: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (below.r, above_r);
    let mut seed = below.state.components.clone();
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        let opt = polish(mid, seed.clone(), true);
        let b = Branches::new(&opt.state.components, mid);
        if b.gain_terms(0.0).1 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
            seed = opt.state.components;
        }
    }
    0.5 * (lo + hi)
}

/// Below the appearance point the origin has negative marginal gain on the
/// branch without a component there.
fn bisect_appearance(below: &BifurcationRecord, above_r: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (below.r, above_r);
    let mut seed = below.state.components.clone();
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        let opt = polish(mid, seed.clone(), false);
        let b = Branches::new(&opt.state.components, mid);
        if b.gain_terms(0.0).0 - b.value > 0.0 {
            hi = mid;
        } else {
            lo = mid;
            seed = opt.state.components;
        }
    }
    0.5 * (lo + hi)
}

/// `alpha(r) = -d ln F~ / d ln r` by centered differences (one-sided at the
/// ends).
pub fn local_exponent(records: &[BifurcationRecord]) -> Vec<(f64, f64)> {
    let n = records.len();
    if n < 3 {
        return records.iter().map(|r| (r.r, f64::NAN)).collect();
    }
    let slope = |a: &BifurcationRecord, b: &BifurcationRecord| {
        -(b.f_tilde.ln() - a.f_tilde.ln()) / (b.r.ln() - a.r.ln())
    };
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (records[i].r, slope(&records[a], &records[b]))
        })
        .collect()
}

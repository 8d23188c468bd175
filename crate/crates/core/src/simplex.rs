//! Maximization of branch-sum Fisher information over the probability
//! simplex.
//!
//! The objective `F(p) = 4 sum_k [sum_j L_jk p_j x_j^2 - (sum_j L_jk p_j x_j)^2 / w_k]`
//! with `w_k = sum_j L_jk p_j` is concave in `p`, so a log-barrier Newton
//! method reaches the global maximum. The duality gap `max_j g_j - F`, with
//! `g` the gradient, certifies the result.

use nalgebra::{DMatrix, DVector};

/// Kernel entries below this are dropped from the bands.
const KERNEL_FLOOR: f64 = 1e-25;
const MIN_WEIGHT: f64 = 1e-15;

/// Column `k` of the kernel restricted to the indices where it is
/// non-negligible.
#[derive(Debug, Clone)]
struct Band {
    start: usize,
    values: Vec<f64>,
}

/// A branch-sum objective: generator eigenvalues `x_j` and kernel `L_jk`.
#[derive(Debug, Clone)]
pub struct BranchProblem {
    positions: Vec<f64>,
    bands: Vec<Band>,
    scale: f64,
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub p: Vec<f64>,
    pub value: f64,
    /// `(max_j g_j - F) / F`, an upper bound on the relative suboptimality.
    pub relative_gap: f64,
    pub newton_steps: usize,
}

impl BranchProblem {
    /// `kernel(j, k)` is evaluated for every `j < positions.len()` and
    /// `k < branches`.
    pub fn new(positions: Vec<f64>, branches: usize, kernel: impl Fn(usize, usize) -> f64) -> Self {
        let d = positions.len();
        let bands = (0..branches)
            .map(|k| {
                let col: Vec<f64> = (0..d).map(|j| kernel(j, k)).collect();
                match (
                    col.iter().position(|&v| v > KERNEL_FLOOR),
                    col.iter().rposition(|&v| v > KERNEL_FLOOR),
                ) {
                    (Some(a), Some(b)) => Band {
                        start: a,
                        values: col[a..=b].to_vec(),
                    },
                    _ => Band {
                        start: 0,
                        values: Vec::new(),
                    },
                }
            })
            .collect();
        let span = positions.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Self {
            positions,
            bands,
            scale: (4.0 * span * span).max(f64::MIN_POSITIVE),
        }
    }

    pub fn dim(&self) -> usize {
        self.positions.len()
    }

    fn moments(&self, band: &Band, p: &[f64]) -> (f64, f64) {
        let (mut w, mut s1) = (0.0, 0.0);
        for (i, l) in band.values.iter().enumerate() {
            let j = band.start + i;
            let q = l * p[j];
            w += q;
            s1 += q * self.positions[j];
        }
        (w, s1)
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        let mut f = 0.0;
        for band in &self.bands {
            let (w, s1) = self.moments(band, p);
            if w < MIN_WEIGHT {
                continue;
            }
            let mu = s1 / w;
            for (i, l) in band.values.iter().enumerate() {
                let j = band.start + i;
                f += 4.0 * l * p[j] * (self.positions[j] - mu).powi(2);
            }
        }
        f
    }

    /// Value and gradient `g_j = 4 sum_k L_jk (x_j - mu_k)^2`.
    pub fn gradient(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; self.dim()];
        let mut f = 0.0;
        for band in &self.bands {
            let (w, s1) = self.moments(band, p);
            if w < MIN_WEIGHT {
                continue;
            }
            let mu = s1 / w;
            for (i, l) in band.values.iter().enumerate() {
                let j = band.start + i;
                let gj = 4.0 * l * (self.positions[j] - mu).powi(2);
                g[j] += gj;
                f += gj * p[j];
            }
        }
        (f, g)
    }

    /// Hessian `-8 sum_k h_k h_k^T / w_k` with `h_k(j) = L_jk (x_j - mu_k)`.
    fn hessian(&self, p: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        for band in &self.bands {
            let (w, s1) = self.moments(band, p);
            if w < MIN_WEIGHT {
                continue;
            }
            let mu = s1 / w;
            let v: Vec<f64> = band
                .values
                .iter()
                .enumerate()
                .map(|(i, l)| l * (self.positions[band.start + i] - mu))
                .collect();
            let c = 8.0 / w;
            for (b, vb) in v.iter().enumerate() {
                let col = band.start + b;
                for (a, va) in v.iter().enumerate().skip(b) {
                    h[(band.start + a, col)] -= c * va * vb;
                }
            }
        }
        // mirror the lower triangle
        for j in 0..d {
            for i in 0..j {
                h[(i, j)] = h[(j, i)];
            }
        }
        h
    }

    /// Log-barrier Newton ascent from `start` (uniform if `None`).
    pub fn maximize(&self, start: Option<&[f64]>) -> SimplexSolution {
        let d = self.dim();
        if d == 1 {
            return SimplexSolution {
                p: vec![1.0],
                value: 0.0,
                relative_gap: 0.0,
                newton_steps: 0,
            };
        }
        let mut p: Vec<f64> = match start {
            Some(s) => {
                // pull the start into the interior
                let mix: Vec<f64> = s
                    .iter()
                    .map(|v| 0.9 * v.max(0.0) + 0.1 / d as f64)
                    .collect();
                let t: f64 = mix.iter().sum();
                mix.iter().map(|v| v / t).collect()
            }
            None => vec![1.0 / d as f64; d],
        };
        let mut mu = 1e-2;
        let mut steps = 0;
        loop {
            // measure F in units of its current value so that the stopping
            // rule below is relative
            let f_now = self.value(&p);
            let scale = if f_now > 1e-300 {
                f_now.min(self.scale)
            } else {
                self.scale
            };
            for _ in 0..100 {
                steps += 1;
                let (f, g) = self.gradient(&p);
                let mut hs = self.hessian(&p);
                hs.scale_mut(1.0 / scale);
                let gr: Vec<f64> = (0..d).map(|j| g[j] / scale + mu / p[j]).collect();
                for j in 0..d {
                    hs[(j, j)] -= mu / (p[j] * p[j]);
                }
                // Newton system in the variables dp_j / p_j, which keeps it well
                // conditioned as the barrier weight shrinks
                let mut m = -hs;
                for j in 0..d {
                    for i in 0..d {
                        m[(i, j)] *= p[i] * p[j];
                    }
                }
                let chol = match m.clone().cholesky() {
                    Some(c) => c,
                    None => break,
                };
                let a = chol.solve(&DVector::from_iterator(d, (0..d).map(|j| p[j] * gr[j])));
                let b = chol.solve(&DVector::from_column_slice(&p));
                let nu = -p.iter().zip(a.iter()).map(|(x, y)| x * y).sum::<f64>()
                    / p.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>();
                let scaled = &a + &b * nu;
                let dec = scaled.dot(&(&m * &scaled));
                let dp: Vec<f64> = (0..d).map(|j| p[j] * scaled[j]).collect();
                if dec < 1e-24 {
                    break;
                }
                let mut t: f64 = 1.0;
                for j in 0..d {
                    if dp[j] < 0.0 {
                        t = t.min(0.99 * -p[j] / dp[j]);
                    }
                }
                let barrier =
                    |q: &[f64], fq: f64| fq / scale + mu * q.iter().map(|v| v.ln()).sum::<f64>();
                let phi0 = barrier(&p, f);
                let slope: f64 = (0..d).map(|j| gr[j] * dp[j]).sum();
                let mut accepted = None;
                while t >= 1e-12 {
                    let q: Vec<f64> = (0..d).map(|j| p[j] + t * dp[j]).collect();
                    let fq = self.value(&q);
                    if barrier(&q, fq) >= phi0 + 1e-4 * t * slope {
                        accepted = Some(q);
                        break;
                    }
                    t *= 0.5;
                }
                let Some(q) = accepted else { break };
                let s: f64 = q.iter().sum();
                p = q.iter().map(|v| v / s).collect();
            }
            if mu * (d as f64) < 1e-12 {
                break;
            }
            mu *= 0.1;
        }
        steps += self.polish_support(&mut p);
        let (value, g) = self.gradient(&p);
        let gmax = g.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        SimplexSolution {
            relative_gap: if value > 0.0 {
                (gmax - value) / value
            } else {
                0.0
            },
            p,
            value,
            newton_steps: steps,
        }
    }
}

impl BranchProblem {
    /// Active-set Newton iteration started from the clear support of the
    /// barrier solution, so that the gradient is flat on the support to
    /// rounding and no excluded site has a positive gain.
    fn polish_support(&self, p: &mut [f64]) -> usize {
        let d = p.len();
        let pmax = p.iter().fold(0.0f64, |m, v| m.max(*v));
        let mut on: Vec<bool> = p.iter().map(|&v| v > 1e-6 * pmax).collect();
        let mut tried = on.clone();
        let mut q: Vec<f64> = (0..d).map(|j| if on[j] { p[j] } else { 0.0 }).collect();
        let total: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= total);
        let mut steps = 0;
        for _ in 0..(4 * d).min(400) {
            let (f, g) = self.gradient(&q);
            let support: Vec<usize> = (0..d).filter(|&j| on[j]).collect();
            let s = support.len();
            let h = self.hessian(&q);
            let mut kkt = DMatrix::zeros(s + 1, s + 1);
            let mut rhs = DVector::zeros(s + 1);
            for (a, &i) in support.iter().enumerate() {
                for (b, &j) in support.iter().enumerate() {
                    kkt[(a, b)] = h[(i, j)];
                }
                kkt[(a, s)] = 1.0;
                kkt[(s, a)] = 1.0;
                rhs[a] = -g[i];
            }
            let Some(sol) = kkt.lu().solve(&rhs) else {
                break;
            };
            let moved = sol.rows(0, s).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if moved > 1e-15 {
                let mut t: f64 = 1.0;
                let mut blocking = None;
                for (a, &i) in support.iter().enumerate() {
                    if sol[a] < 0.0 && -q[i] / sol[a] < t {
                        t = -q[i] / sol[a];
                        blocking = Some(i);
                    }
                }
                let mut next = q.clone();
                for (a, &i) in support.iter().enumerate() {
                    next[i] = (q[i] + t * sol[a]).max(0.0);
                }
                if let Some(i) = blocking {
                    next[i] = 0.0;
                    on[i] = false;
                }
                if self.value(&next) < f - 1e-13 * f.abs() {
                    break;
                }
                let total: f64 = next.iter().sum();
                q = next.iter().map(|v| v / total).collect();
                steps += 1;
                if blocking.is_some() || moved > 1e-13 {
                    continue;
                }
            }
            // flat on the support: bring in the worst excluded site
            let (f, g) = self.gradient(&q);
            let worst = (0..d)
                .filter(|&j| !tried[j])
                .max_by(|&a, &b| g[a].total_cmp(&g[b]));
            match worst {
                Some(j) if g[j] - f > 1e-13 * f.abs() => {
                    on[j] = true;
                    tried[j] = true;
                }
                _ => break,
            }
        }
        if self.value(&q) >= self.value(p) - 1e-13 * self.value(p).abs() {
            p.copy_from_slice(&q);
        }
        steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossTable;
    use crate::params::LossFraction;

    fn single_mode(n: usize, r: f64) -> BranchProblem {
        let t = LossTable::new(n, LossFraction::new(r).unwrap());
        BranchProblem::new((0..=n).map(|v| v as f64).collect(), n + 1, |j, k| {
            t.coefficient(j, k)
        })
    }

    #[test]
    fn lossless_optimum_is_noon() {
        let sol = single_mode(6, 0.0).maximize(None);
        assert!((sol.value - 36.0).abs() < 1e-8);
        assert!((sol.p[0] - 0.5).abs() < 1e-6 && (sol.p[6] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn certified_gap_is_small() {
        let sol = single_mode(20, 0.95).maximize(None);
        assert!(sol.relative_gap < 1e-9, "gap {}", sol.relative_gap);
        assert!((sol.value - 3.0024).abs() < 1e-4);
    }

    #[test]
    fn gradient_matches_differences() {
        let prob = single_mode(5, 0.4);
        let p = [0.1, 0.2, 0.05, 0.25, 0.15, 0.25];
        let (_, g) = prob.gradient(&p);
        for j in 0..6 {
            let h = 1e-7;
            let mut a = p;
            let mut b = p;
            a[j] += h;
            b[j] -= h;
            let fd = (prob.value(&a) - prob.value(&b)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn hessian_matches_differences() {
        let prob = single_mode(4, 0.3);
        let p = [0.1, 0.3, 0.2, 0.15, 0.25];
        let h = prob.hessian(&p);
        for j in 0..5 {
            let e = 1e-6;
            let mut a = p;
            let mut b = p;
            a[j] += e;
            b[j] -= e;
            let (ga, gb) = (prob.gradient(&a).1, prob.gradient(&b).1);
            for i in 0..5 {
                assert!(((ga[i] - gb[i]) / (2.0 * e) - h[(i, j)]).abs() < 1e-5);
            }
        }
    }
}

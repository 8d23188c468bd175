//! Log-space probability mass functions.
//!
//! Binomial and Poisson masses are evaluated with the saddle-point
//! decomposition of Loader (2000): a Stirling-error term plus a deviance
//! term `bd0`. Both are accurate to a few ulps relative even when the mass
//! itself is far below `f64::MIN_POSITIVE` on a linear scale would allow
//! by naive products.

use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln n!` for integer `n`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let x = n as f64;
    (x + 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_error(n)
}

/// Stirling-series remainder `ln n! - [(n + 1/2) ln n - n + ln sqrt(2 pi)]`.
pub fn stirling_error(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n == 0 {
        return 0.0;
    }
    if n <= 15 {
        // n! is exact in f64 up to 22!
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        let x = n as f64;
        return fact.ln() - (x + 0.5) * x.ln() + x - LN_SQRT_2PI;
    }
    let x = n as f64;
    let x2 = x * x;
    if n > 500 {
        (S0 - S1 / x2) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / x2) / x2) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / x2) / x2) / x2) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / x2) / x2) / x2) / x2) / x
    }
}

/// Deviance term `x ln(x / m) + m - x`, evaluated without cancellation when
/// `x` is close to `m`.
pub fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Binomial mass `C(n, k) p^k q^(n-k)` with `q = 1 - p` supplied separately
/// so that callers holding `1 - R` exactly do not lose digits.
pub fn binomial_pmf(n: u64, k: u64, p: f64, q: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if k == 0 {
        if n == 0 {
            return 1.0;
        }
        let lc = if p < 0.1 {
            -bd0(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
        return lc.exp();
    }
    if k == n {
        let lc = if q < 0.1 {
            -bd0(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
        return lc.exp();
    }
    let kf = k as f64;
    let lc = stirling_error(n)
        - stirling_error(k)
        - stirling_error(n - k)
        - bd0(kf, nf * p)
        - bd0(nf - kf, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Poisson mass `e^(-lambda) lambda^k / k!`.
pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k == 0 {
        return (-lambda).exp();
    }
    let kf = k as f64;
    (-stirling_error(k) - bd0(kf, lambda)).exp() / (2.0 * PI * kf).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_binomial(n: u64, k: u64, p: f64) -> f64 {
        let mut c = 1.0;
        for i in 0..k {
            c = c * (n - i) as f64 / (i + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    }

    #[test]
    fn small_binomials_match_products() {
        for n in 0..30u64 {
            for k in 0..=n {
                for &p in &[0.05, 0.3, 0.5, 0.9] {
                    let a = binomial_pmf(n, k, p, 1.0 - p);
                    let b = naive_binomial(n, k, p);
                    assert!(
                        (a - b).abs() <= 1e-12 * b.max(1e-300) + 1e-300,
                        "{n} {k} {p}"
                    );
                }
            }
        }
    }

    #[test]
    fn ln_factorial_small() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-14);
        let f20: f64 = (1..=20).map(|i| i as f64).product();
        assert!((ln_factorial(20) - f20.ln()).abs() < 1e-13);
    }

    #[test]
    fn poisson_masses() {
        assert!((poisson_pmf(1, 2.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-16);
        assert!((poisson_pmf(3, 1.5) - 1.5f64.powi(3) / 6.0 * (-1.5f64).exp()).abs() < 1e-16);
        let total: f64 = (0..200).map(|k| poisson_pmf(k, 40.0)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}

//! The Airy function `Ai` and its derivative on `|z| <= 100`.
//!
//! Near the origin the Maclaurin series is summed directly. On the
//! oscillatory side the Taylor expansion of `y'' = z y` is propagated in unit
//! steps out to `z = -9`, and on the decaying side it is propagated backwards
//! from `z = 8`, where the asymptotic expansion is accurate. Beyond those
//! points the asymptotic expansions are used directly.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{domain, Result};

/// `Ai(0) = 3^(-2/3) / Gamma(2/3)`.
pub const AI_0: f64 = 0.355_028_053_887_817_24;
/// `Ai'(0) = -3^(-1/3) / Gamma(1/3)`.
pub const AI_PRIME_0: f64 = -0.258_819_403_792_806_8;

const MAX_ARG: f64 = 100.0;
const SERIES_RADIUS: f64 = 2.0;
const OSC_SWITCH: f64 = -9.0;
const DECAY_SWITCH: f64 = 8.0;

/// `Ai(z)`.
pub fn airy_ai(z: f64) -> Result<f64> {
    airy_pair(z).map(|p| p.0)
}

/// `Ai'(z)`.
pub fn airy_ai_prime(z: f64) -> Result<f64> {
    airy_pair(z).map(|p| p.1)
}

/// `(Ai(z), Ai'(z))`.
pub fn airy_pair(z: f64) -> Result<(f64, f64)> {
    if !z.is_finite() || z.abs() > MAX_ARG {
        return Err(domain(format!("Airy argument {z} outside [-100, 100]")));
    }
    Ok(if z.abs() <= SERIES_RADIUS {
        maclaurin(z)
    } else if z < 0.0 {
        if z >= OSC_SWITCH {
            let start = maclaurin(-SERIES_RADIUS);
            propagate(-SERIES_RADIUS, start, z)
        } else {
            asymptotic_negative(-z)
        }
    } else if z < DECAY_SWITCH {
        propagate(DECAY_SWITCH, asymptotic_positive(DECAY_SWITCH), z)
    } else {
        asymptotic_positive(z)
    })
}

fn maclaurin(z: f64) -> (f64, f64) {
    let z3 = z * z * z;
    // f = 1 + z^3/3! + 1.4 z^6/6! + ..., g = z + 2 z^4/4! + 2.5 z^7/7! + ...
    let (mut f, mut g) = (1.0, z);
    let (mut fp, mut gp) = (0.0, 1.0);
    let (mut tf, mut tg) = (1.0, z);
    let (mut tfp, mut tgp) = (z * z / 2.0, 1.0);
    fp += tfp;
    for k in 1..60 {
        let kf = k as f64;
        tf *= z3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        tg *= z3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        tfp *= z3 / ((3.0 * kf) * (3.0 * kf + 2.0));
        tgp *= z3 / ((3.0 * kf - 2.0) * (3.0 * kf));
        f += tf;
        g += tg;
        fp += tfp;
        gp += tgp;
        if tf.abs() + tg.abs() + tfp.abs() + tgp.abs() < 1e-18 {
            break;
        }
    }
    (AI_0 * f + AI_PRIME_0 * g, AI_0 * fp + AI_PRIME_0 * gp)
}

/// Carries `(y, y')` from `from` to `to` along `y'' = z y` in steps no
/// longer than one.
fn propagate(from: f64, start: (f64, f64), to: f64) -> (f64, f64) {
    let steps = (to - from).abs().ceil().max(1.0) as usize;
    let h = (to - from) / steps as f64;
    let (mut y, mut yp) = start;
    let mut z0 = from;
    for _ in 0..steps {
        (y, yp) = taylor_step(z0, y, yp, h);
        z0 += h;
    }
    (y, yp)
}

fn taylor_step(z0: f64, y: f64, yp: f64, h: f64) -> (f64, f64) {
    // d_n = y^(n)(z0) h^n / n!, with d_{n+2} = (z0 h^2 d_n + h^3 d_{n-1}) / ((n+1)(n+2))
    let (h2, h3) = (h * h, h * h * h);
    let mut prev = 0.0;
    let mut d0 = y;
    let mut d1 = yp * h;
    let mut val = d0 + d1;
    let mut der = d1;
    for n in 0..200 {
        let nf = n as f64;
        let d2 = (z0 * h2 * d0 + h3 * prev) / ((nf + 1.0) * (nf + 2.0));
        val += d2;
        der += (nf + 2.0) * d2;
        prev = d0;
        d0 = d1;
        d1 = d2;
        if n > 4
            && prev.abs() + d0.abs() + d1.abs() < 1e-19 * (val.abs() + der.abs() / (1.0 + h.abs()))
        {
            break;
        }
    }
    (val, der / h)
}

/// Coefficients `u_k` and `v_k` of the large-argument expansions.
fn expansion_coefficients(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![1.0];
    let mut v = vec![1.0];
    for k in 1..count {
        let kf = k as f64;
        let uk = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk);
        u.push(uk);
    }
    (u, v)
}

/// Sums `sum_k sign_k c_k t^k` until the terms stop decreasing.
fn truncated_sum(c: &[f64], t: f64, sign: impl Fn(usize) -> f64) -> f64 {
    let mut s = 0.0;
    let mut last = f64::INFINITY;
    let mut tk = 1.0;
    for (k, ck) in c.iter().enumerate() {
        let term = ck * tk;
        if term.abs() > last {
            break;
        }
        s += sign(k) * term;
        last = term.abs();
        if last < 1e-18 * s.abs() {
            break;
        }
        tk *= t;
    }
    s
}

fn asymptotic_positive(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (u, v) = expansion_coefficients(60);
    let alt = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let su = truncated_sum(&u, 1.0 / zeta, alt);
    let sv = truncated_sum(&v, 1.0 / zeta, alt);
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    (e * x.powf(-0.25) * su, -e * x.powf(0.25) * sv)
}

fn asymptotic_negative(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (u, v) = expansion_coefficients(80);
    let even = |c: &[f64]| -> Vec<f64> { c.iter().step_by(2).copied().collect() };
    let odd = |c: &[f64]| -> Vec<f64> { c.iter().skip(1).step_by(2).copied().collect() };
    let t = 1.0 / (zeta * zeta);
    let alt = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let ue = truncated_sum(&even(&u), t, alt);
    let uo = truncated_sum(&odd(&u), t, alt) / zeta;
    let ve = truncated_sum(&even(&v), t, alt);
    let vo = truncated_sum(&odd(&v), t, alt) / zeta;
    let (s, c) = (zeta - FRAC_PI_4).sin_cos();
    let a = x.powf(-0.25) / PI.sqrt() * (c * ue + s * uo);
    let ap = x.powf(0.25) / PI.sqrt() * (s * ve - c * vo);
    (a, ap)
}

/// Largest zero of `Ai`, `mu_1 = -2.33810741...`.
pub fn airy_first_zero() -> f64 {
    let ai = |z: f64| airy_ai(z).expect("argument in range");
    let (mut lo, mut hi) = (-2.4, -2.3);
    // Ai(-2.4) < 0 < Ai(-2.3)
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if ai(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..5 {
        let (a, ap) = airy_pair(z).expect("argument in range");
        let step = a / ap;
        z -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from an independent arbitrary-precision evaluation
    const REFERENCE: [(f64, f64, f64); 12] = [
        (-50.0, -0.16188142361232092, 0.96898983727674909),
        (-9.5, 0.3191032477191282, -0.10809531881187124),
        (-5.0, 0.35076100902411432, 0.32719281855444314),
        (-2.0, 0.22740742820168558, 0.61825902074169104),
        (-0.5, 0.47572809161053959, -0.20408167033954739),
        (0.7, 0.18916240039815008, -0.19985119158228048),
        (2.5, 0.01572592338047049, -0.02625088103590323),
        (5.0, 1.0834442813607442e-4, -2.4741389086846248e-4),
        (10.0, 1.1047532552898686e-10, -3.5206336767389236e-10),
        (30.0, 3.2082175915504956e-49, -1.759876581432726e-48),
        (-75.25, 0.12581537377051983, 1.2534402181534923),
        (64.0, 5.7488197223551498e-150, -4.6012986773324191e-149),
    ];

    #[test]
    fn matches_reference_values() {
        for (z, a, ap) in REFERENCE {
            let (x, xp) = airy_pair(z).unwrap();
            assert!((x - a).abs() < 1e-12, "Ai({z}) = {x}, want {a}");
            assert!((xp - ap).abs() < 1e-12, "Ai'({z}) = {xp}, want {ap}");
        }
    }

    #[test]
    fn value_at_origin() {
        assert!((airy_ai(0.0).unwrap() - 0.3550280539).abs() < 1e-10);
    }

    #[test]
    fn branches_agree_at_switch_points() {
        for z in [-9.0, -12.0, -20.0] {
            let a = propagate(-SERIES_RADIUS, maclaurin(-SERIES_RADIUS), z);
            let b = asymptotic_negative(-z);
            assert!(
                (a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10,
                "z={z}"
            );
        }
        for z in [1.5, 2.0, 3.0] {
            let a = maclaurin(z);
            let b = propagate(DECAY_SWITCH, asymptotic_positive(DECAY_SWITCH), z);
            assert!(
                (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12,
                "z={z}"
            );
        }
    }

    #[test]
    fn satisfies_airy_equation() {
        let h = 1e-3;
        let mut z = -5.0;
        while z <= 5.0 {
            let d2 = (airy_ai(z + h).unwrap() - 2.0 * airy_ai(z).unwrap()
                + airy_ai(z - h).unwrap())
                / (h * h);
            assert!((d2 - z * airy_ai(z).unwrap()).abs() < 1e-6, "z={z}");
            z += 0.25;
        }
    }

    #[test]
    fn first_zero() {
        let mu = airy_first_zero();
        assert!((mu + 2.338107).abs() < 1e-6);
        assert!((mu + 2.338_107_410_459_767).abs() < 1e-12);
        assert!(airy_ai(mu).unwrap().abs() < 1e-11);
        assert!((airy_ai_prime(mu).unwrap() - 0.701_210_822_720_690_6).abs() < 1e-10);
    }

    #[test]
    fn rejects_large_arguments() {
        assert!(airy_ai(100.5).is_err());
        assert!(airy_ai(-101.0).is_err());
        assert!(airy_ai(f64::NAN).is_err());
        assert!(airy_ai(100.0).is_ok());
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary so that every criterion reports even when an earlier one fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::Rng;

use qfi_cli::args::{BifurcationArgs, Format, OptimizeArgs, RerunArgs};
use qfi_cli::manifest::{Invocation, MANIFEST_FILE};
use qfi_core::continuum::log_grid;
use qfi_core::{
    airy_first_zero, airy_optimal_state, bifurcation_scan, binomial_state, classical_baseline,
    gaussian_optimal_state, holland_burnett_state, noon_state, optimize_state, qfi,
    qfi_asymptote_single, qfi_eigen, qfi_fidelity_oracle, qfi_single_mode, qfi_upper_bound,
    rescaled_loss, width_exponent, LossFraction, LossModel, OptimizerConfig, PhotonNumber,
    RescaledLoss, ScanConfig,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn pn(n: usize) -> PhotonNumber {
    PhotonNumber::new(n).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn heisenberg_limit() -> Verdict {
    let mut worst: f64 = 0.0;
    for n in 1..=10 {
        let f = qfi_single_mode(&noon_state(pn(n)), LossFraction::ZERO).value;
        worst = worst.max((f - (n * n) as f64).abs() / (n * n) as f64);
    }
    verdict(
        worst < 1e-9,
        format!("max |F - N^2| / N^2 = {worst:.2e} over N = 1..10"),
    )
}

fn shot_noise() -> Verdict {
    let mut worst: f64 = 0.0;
    for n in 1..=50 {
        let s = binomial_state(pn(n), 0.5).unwrap();
        let f = qfi(&s, &LossModel::lossless()).unwrap().value;
        worst = worst.max((f - n as f64).abs());
    }
    verdict(
        worst < 1e-9,
        format!("max |F - N| = {worst:.2e} over N = 1..50"),
    )
}

fn noon_golden() -> Verdict {
    let s = noon_state(pn(2));
    let loss = LossModel::single(0.5).unwrap();
    let branch = qfi_single_mode(&s, LossFraction::new(0.5).unwrap()).value;
    let eigen = qfi_eigen(&s, &loss).unwrap().value;
    let dense = common::dense_qfi(s.amplitudes(), 0.5, 0.0);
    let worst = [branch, eigen, dense]
        .iter()
        .map(|f| (f - 1.6).abs())
        .fold(0.0, f64::max);
    verdict(
        worst < 1e-10,
        format!("branch-sum {branch:.15}, eigen {eigen:.15}, dense Kraus {dense:.15}"),
    )
}

fn path_equivalence() -> Verdict {
    let mut rng = common::rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let r1 = rng.random_range(0.01..0.99);
        let s = common::random_state(&mut rng, n);
        let a = qfi_single_mode(&s, LossFraction::new(r1).unwrap()).value;
        let b = qfi_eigen(&s, &LossModel::single(r1).unwrap())
            .unwrap()
            .value;
        worst = worst.max(rel(b, a));
    }
    verdict(
        worst < 1e-8,
        format!("max relative difference {worst:.2e} over 200 states"),
    )
}

fn fidelity_equivalence() -> Verdict {
    let mut rng = common::rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=8);
        let (r1, r2) = (rng.random_range(0.01..0.99), rng.random_range(0.01..0.99));
        let loss = LossModel::new(r1, r2).unwrap();
        let s = common::random_state(&mut rng, n);
        let a = qfi_eigen(&s, &loss).unwrap().value;
        let b = qfi_fidelity_oracle(&s, &loss, 1e-3).unwrap().value;
        worst = worst.max(rel(b, a));
    }
    verdict(
        worst < 1e-3,
        format!("max relative difference {worst:.2e} over 50 states"),
    )
}

fn bound_dominance() -> Verdict {
    let mut rng = common::rng(6);
    let mut worst = f64::NEG_INFINITY;
    let mut trials = 0;
    for i in 0..1000 {
        let n = rng.random_range(1..=20);
        let r1 = rng.random_range(0.01..0.99);
        let loss = match i % 3 {
            0 => LossModel::single(r1),
            1 => LossModel::symmetric(r1),
            _ => LossModel::new(r1, rng.random_range(0.01..0.99)),
        }
        .unwrap();
        let (f, state_bound) = if i % 100 == 0 {
            let config = OptimizerConfig {
                restarts: 4,
                seed: i as u64,
                ..OptimizerConfig::default()
            };
            let opt = optimize_state(pn(n), &loss, &config).unwrap();
            (opt.qfi.value, opt.qfi.upper_bound)
        } else {
            let res = qfi(&common::random_state(&mut rng, n), &loss).unwrap();
            (res.value, res.upper_bound)
        };
        let bound = qfi_upper_bound(pn(n), &loss).unwrap().min(state_bound);
        worst = worst.max((f - bound) / bound);
        trials += 1;
    }
    verdict(
        worst <= 1e-8,
        format!(
            "max (F - F_upper) / F_upper = {worst:.2e} over {trials} trials (10 optimizer runs)"
        ),
    )
}

fn bifurcation_threshold() -> Verdict {
    let scan = bifurcation_scan(&log_grid(1e-3, 30.0, 200), &ScanConfig::default()).unwrap();
    let t = &scan.thresholds;
    let labels = ["r'1", "r2", "r'2", "r3"];
    let values: Vec<Option<f64>> = labels.iter().map(|l| t.get(l)).collect();
    if values.iter().any(Option::is_none) {
        return verdict(false, format!("missing thresholds: {values:?}"));
    }
    let v: Vec<f64> = values.into_iter().flatten().collect();
    let ordered = v.windows(2).all(|w| w[0] < w[1]);
    let close = (v[0] - 0.912957).abs() <= 5e-4;
    verdict(
        ordered && close,
        format!(
            "r'1 = {:.9}, r2 = {:.6}, r'2 = {:.6}, r3 = {:.6}",
            v[0], v[1], v[2], v[3]
        ),
    )
}

fn figure_two() -> Verdict {
    let n = pn(20);
    let config = OptimizerConfig::default();
    let single = LossModel::single(0.95).unwrap();
    let sym = LossModel::symmetric(0.95).unwrap();
    let os = optimize_state(n, &single, &config).unwrap();
    let oy = optimize_state(n, &sym, &config).unwrap();
    let gain = |f: f64, l: &LossModel| (f / classical_baseline(n, l).unwrap()).sqrt() - 1.0;
    let gs = gain(os.qfi.value, &single);
    let gy = gain(oy.qfi.value, &sym);
    let r = rescaled_loss(n, LossFraction::new(0.95).unwrap());
    let airy = airy_optimal_state(n, r).unwrap();
    let gauss = gaussian_optimal_state(n, r, r).unwrap();
    let ov_s = os.state.overlap(&airy);
    let ov_y = oy.state.overlap(&gauss);
    let ok_gain = (gs - 0.06).abs() <= 0.01 && (gy - 0.004).abs() <= 0.002;
    let ok_overlap = ov_s >= 0.99 && ov_y >= 0.99;
    verdict(
        ok_gain && ok_overlap,
        format!(
            "improvement single {:.2}% symmetric {:.2}% ({}); overlap Airy {ov_s:.4} Gaussian {ov_y:.4} ({})",
            100.0 * gs,
            100.0 * gy,
            if ok_gain { "ok" } else { "out of range" },
            if ok_overlap { "ok" } else { "below 0.99" },
        ),
    )
}

fn scaling_collapse() -> Verdict {
    let config = OptimizerConfig::default();
    let mut worst: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, symmetric) in [("single", false), ("symmetric", true)] {
        for r in [2.0, 5.0, 10.0] {
            let ratios: Vec<f64> = [10usize, 20, 40]
                .iter()
                .map(|&n| {
                    let rl = r / (n as f64 + r);
                    let loss = if symmetric {
                        LossModel::symmetric(rl)
                    } else {
                        LossModel::single(rl)
                    }
                    .unwrap();
                    let opt = optimize_state(pn(n), &loss, &config).unwrap();
                    opt.qfi.value / qfi_upper_bound(pn(n), &loss).unwrap()
                })
                .collect();
            let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
            let spread = (hi - lo) / hi;
            worst = worst.max(spread);
            worst_abs = worst_abs.max(hi - lo);
            parts.push(format!(
                "{name} r={r}: {:.3}/{:.3}/{:.3}",
                ratios[0], ratios[1], ratios[2]
            ));
        }
    }
    verdict(
        worst < 0.05,
        format!(
            "max relative spread {:.2}% ({:.2} points of F_upper); N = 10/20/40: {}",
            100.0 * worst,
            100.0 * worst_abs,
            parts.join(", ")
        ),
    )
}

fn asymptote_consistency() -> Verdict {
    let n = pn(100);
    let loss = LossModel::single(380.0 / 480.0).unwrap();
    let opt = optimize_state(n, &loss, &OptimizerConfig::default()).unwrap();
    let asym = qfi_asymptote_single(n, RescaledLoss::new(380.0).unwrap()).unwrap();
    let upper = qfi_upper_bound(n, &loss).unwrap();
    let dev = (opt.qfi.value - asym.value).abs() / upper;
    verdict(
        dev < 0.05,
        format!(
            "F_opt/F_upper = {:.4}, F_asym/F_upper = {:.4}, deviation {dev:.4}",
            opt.qfi.value / upper,
            asym.value / upper
        ),
    )
}

fn airy_zero() -> Verdict {
    let mu = airy_first_zero();
    verdict((mu + 2.338107).abs() <= 1e-6, format!("mu_1 = {mu:.12}"))
}

fn width_exponents() -> Verdict {
    let ns = [50usize, 100, 200, 400];
    let solve = |loss: LossModel, restarts: usize| -> Vec<(usize, qfi_core::InputState)> {
        let config = OptimizerConfig {
            restarts,
            ..OptimizerConfig::default()
        };
        ns.iter()
            .map(|&n| (n, optimize_state(pn(n), &loss, &config).unwrap().state))
            .collect()
    };
    let single = width_exponent(&solve(LossModel::single(0.5).unwrap(), 1)).unwrap();
    let sym = width_exponent(&solve(LossModel::symmetric(0.5).unwrap(), 3)).unwrap();
    let binom: Vec<_> = ns
        .iter()
        .map(|&n| (n, binomial_state(pn(n), 0.5).unwrap()))
        .collect();
    let control = width_exponent(&binom).unwrap();
    let ok = (single - 2.0 / 3.0).abs() <= 0.1
        && (sym - 0.75).abs() <= 0.1
        && (control - 0.5).abs() <= 0.02;
    verdict(
        ok,
        format!("single {single:.4}, symmetric {sym:.4}, binomial {control:.4} (R = 0.5)"),
    )
}

fn holland_burnett_trend() -> Verdict {
    let loss = LossModel::symmetric(0.5).unwrap();
    let ratios: Vec<f64> = [20usize, 40, 60]
        .iter()
        .map(|&n| {
            let s = holland_burnett_state(pn(n)).unwrap();
            qfi(&s, &loss).unwrap().value / qfi_upper_bound(pn(n), &loss).unwrap()
        })
        .collect();
    let in_band = ratios.iter().all(|r| (0.4..=0.6).contains(r));
    let toward = ratios
        .windows(2)
        .all(|w| (w[1] - 0.5).abs() < (w[0] - 0.5).abs());
    verdict(
        in_band && toward,
        format!(
            "F/F_upper = {:.4}, {:.4}, {:.4} at N = 20, 40, 60",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn rerun_matches(inv: Invocation, base: &Path, name: &str) -> Result<usize, String> {
    let mut inv = inv;
    inv.set_out_dir(&base.join(name));
    let first = qfi_cli::execute(&inv).map_err(|e| format!("{name}: {e}"))?;
    let again = qfi_cli::rerun(&RerunArgs {
        manifest: first.out_dir.join(MANIFEST_FILE),
        out: Some(base.join(format!("{name}-rerun"))),
    })
    .map_err(|e| format!("{name} rerun: {e}"))?;
    for d in &first.manifest.outputs {
        let a = std::fs::read(first.out_dir.join(&d.file)).map_err(|e| e.to_string())?;
        let b = std::fs::read(again.out_dir.join(&d.file)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{name}: {} differs", d.file));
        }
    }
    Ok(first.manifest.outputs.len())
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let opt = Invocation::Optimize(OptimizeArgs {
        n: 20,
        loss1: 0.95,
        loss2: 0.9,
        restarts: 8,
        seed: 11,
        out: Default::default(),
        format: Format::Csv,
    });
    let bif = Invocation::Bifurcation(BifurcationArgs {
        r_min: 1e-3,
        r_max: 30.0,
        r_steps: 200,
        log_grid: true,
        out: Default::default(),
    });
    match (
        rerun_matches(opt, dir.path(), "optimize"),
        rerun_matches(bif, dir.path(), "bifurcation"),
    ) {
        (Ok(a), Ok(b)) => verdict(
            true,
            format!("{a} optimize and {b} bifurcation files byte-identical on rerun"),
        ),
        (a, b) => verdict(false, format!("optimize: {a:?}; bifurcation: {b:?}")),
    }
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 14] = [
        (1, "Heisenberg limit", heisenberg_limit),
        (2, "shot-noise reference", shot_noise),
        (3, "NOON(2) golden", noon_golden),
        (4, "branch-sum vs eigen path", path_equivalence),
        (5, "eigen path vs fidelity oracle", fidelity_equivalence),
        (6, "upper-bound dominance", bound_dominance),
        (7, "bifurcation thresholds", bifurcation_threshold),
        (8, "N=20, R=0.95 optima", figure_two),
        (9, "scaling collapse", scaling_collapse),
        (10, "asymptote consistency", asymptote_consistency),
        (11, "Airy zero", airy_zero),
        (12, "width exponents", width_exponents),
        (13, "Holland-Burnett trend", holland_burnett_trend),
        (14, "rerun determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {id} ({name}): {} [{:.1} s]",
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 14 criteria pass");
    } else {
        println!(
            "acceptance: {} of 14 criteria fail: {failed:?}",
            failed.len()
        );
        std::process::exit(1);
    }
}

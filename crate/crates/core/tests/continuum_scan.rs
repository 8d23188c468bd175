//! Scan-level properties of the continuum optimum and its agreement with
//! finite photon numbers.

use std::sync::OnceLock;

use qfi_core::continuum::log_grid;
use qfi_core::{
    bifurcation_scan, marginal_gain, optimal_state, optimize_components, optimize_state,
    BifurcationScan, LossModel, OptimizerConfig, PhotonNumber, RescaledLoss, ScanConfig,
};

fn rl(r: f64) -> RescaledLoss {
    RescaledLoss::new(r).unwrap()
}

fn scan() -> &'static BifurcationScan {
    static SCAN: OnceLock<BifurcationScan> = OnceLock::new();
    SCAN.get_or_init(|| {
        bifurcation_scan(&log_grid(1e-3, 30.0, 200), &ScanConfig::default()).unwrap()
    })
}

#[test]
fn every_record_is_certified() {
    for rec in &scan().records {
        assert!(rec.converged, "r={}", rec.r);
        assert!(
            rec.stationarity_residual < 1e-8,
            "r={}: residual {}",
            rec.r,
            rec.stationarity_residual
        );
        let worst = (0..=1000)
            .map(|i| marginal_gain(&rec.state, rl(rec.r), i as f64 / 1000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= 1e-8, "r={}: marginal gain {worst}", rec.r);
    }
}

#[test]
fn rescaled_qfi_stays_below_bounds() {
    for rec in &scan().records {
        assert!(
            rec.f_tilde > 0.0 && rec.f_tilde <= 1.0,
            "r={}: {}",
            rec.r,
            rec.f_tilde
        );
        if rec.r >= 4.0 {
            assert!(
                rec.f_tilde <= 4.0 / rec.r * (1.0 + 1e-6),
                "r={}: {}",
                rec.r,
                rec.f_tilde
            );
        }
    }
    let last = scan().records.last().unwrap();
    assert!((last.r - 30.0).abs() < 1e-9);
    assert!(4.0 / last.r - last.f_tilde > 0.0);
}

#[test]
fn component_count_never_drops() {
    for w in scan().records.windows(2) {
        assert!(
            w[1].state.len() >= w[0].state.len(),
            "r={} -> {}",
            w[0].r,
            w[1].r
        );
    }
    assert_eq!(scan().records[0].state.len(), 2);
}

#[test]
fn thresholds_are_ordered() {
    let t = &scan().thresholds;
    let labels = ["r'1", "r2", "r'2", "r3", "r'3", "r4", "r'4"];
    let v: Vec<f64> = labels
        .iter()
        .map(|l| t.get(l).unwrap_or_else(|| panic!("{l} missing")))
        .collect();
    assert!(v.windows(2).all(|w| w[0] < w[1]), "{v:?}");
    assert!((v[0] - 0.912957).abs() < 5e-4);
}

#[test]
fn first_threshold_is_grid_independent() {
    let fine = bifurcation_scan(&log_grid(1e-3, 30.0, 400), &ScanConfig::default()).unwrap();
    let a = scan().thresholds.get("r'1").unwrap();
    let b = fine.thresholds.get("r'1").unwrap();
    assert!((a - b).abs() < 1e-5, "{a} vs {b}");
}

#[test]
fn exponent_vanishes_in_lossless_limit() {
    let first = &scan().records[0];
    assert!(
        first.alpha.abs() < 1e-2,
        "alpha({}) = {}",
        first.r,
        first.alpha
    );
    let last = scan().records.last().unwrap();
    assert!(
        last.alpha > 0.5 && last.alpha < 1.0,
        "alpha(30) = {}",
        last.alpha
    );
}

#[test]
fn origin_gain_changes_sign_at_appearance() {
    let r2 = scan().thresholds.get("r2").unwrap();
    let below = optimal_state(rl(r2 * (1.0 - 1e-3)), None).unwrap();
    assert!(!below.state.has_origin());
    assert!(marginal_gain(&below.state, rl(r2 * (1.0 - 1e-3)), 0.0) < 0.0);
    // same branch just above, before a component is added at the origin
    let above =
        optimize_components(rl(r2 * (1.0 + 1e-3)), below.state.len(), Some(&below.state)).unwrap();
    assert!(marginal_gain(&above.state, rl(r2 * (1.0 + 1e-3)), 0.0) > 0.0);
}

#[test]
fn finite_optimum_approaches_continuum() {
    let n = 200;
    for r in [1.0, 5.0, 10.0] {
        let loss = LossModel::single(r / (n as f64 + r)).unwrap();
        let opt = optimize_state(
            PhotonNumber::new(n).unwrap(),
            &loss,
            &OptimizerConfig::default(),
        )
        .unwrap();
        let cont = optimal_state(rl(r), None).unwrap();
        let diff = (opt.qfi.value / (n * n) as f64 - cont.f_tilde).abs();
        assert!(
            diff < 0.02,
            "r={r}: F/N^2 = {} vs {}",
            opt.qfi.value / (n * n) as f64,
            cont.f_tilde
        );
    }
}

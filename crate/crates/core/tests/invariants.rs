//! Property tests for states, the loss channel and the Fisher-information
//! engines.

use proptest::prelude::*;

use qfi_core::loss::{assemble_all, LossTable};
use qfi_core::qfi::qfi_fidelity_oracle_at;
use qfi_core::{
    assemble_block, binomial_state, branch_weights, classical_baseline, holland_burnett_state,
    multi_component_state, noon_state, normalize, qfi, qfi_eigen, qfi_fidelity_oracle,
    qfi_single_mode, qfi_upper_bound, rescaled_loss, InputState, LossFraction, LossModel,
    PhotonNumber,
};

fn pn(n: usize) -> PhotonNumber {
    PhotonNumber::new(n).unwrap()
}

fn norm(s: &InputState) -> f64 {
    s.amplitudes().iter().map(|a| a * a).sum()
}

fn state(max_n: usize) -> impl Strategy<Value = InputState> {
    (1..=max_n)
        .prop_flat_map(|n| prop::collection::vec(0.0f64..1.0, n + 1))
        .prop_filter_map("nonzero amplitudes", |a| normalize(&a).ok())
}

fn loss() -> impl Strategy<Value = f64> {
    0.01f64..0.99
}

/// Sorted positions at least `3 / N` apart with random weights summing to one.
fn separated_components(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    let gap = 3.0 / n as f64;
    prop::collection::vec((0.0f64..1.0, 0.05f64..1.0), 1..=4).prop_filter_map(
        "separated",
        move |raw| {
            let mut xs: Vec<f64> = raw.iter().map(|c| c.0).collect();
            xs.sort_by(f64::total_cmp);
            if xs.windows(2).any(|w| w[1] - w[0] < gap) {
                return None;
            }
            let total: f64 = raw.iter().map(|c| c.1).sum();
            let mut comps: Vec<(f64, f64)> = xs
                .into_iter()
                .zip(raw.iter().map(|c| c.1 / total))
                .collect();
            // weights must sum to one to rounding
            let s: f64 = comps.iter().map(|c| c.1).sum();
            comps[0].1 += 1.0 - s;
            Some(comps)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn constructors_are_normalized(n in 1usize..80, t in 0.0f64..=1.0, s in state(30)) {
        prop_assert!((norm(&s) - 1.0).abs() < 1e-12);
        prop_assert!((norm(&noon_state(pn(n))) - 1.0).abs() < 1e-12);
        prop_assert!((norm(&binomial_state(pn(n), t).unwrap()) - 1.0).abs() < 1e-12);
        let even = 2 * (n / 2).max(1);
        prop_assert!((norm(&holland_burnett_state(pn(even)).unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn components_keep_weight_and_mean(
        (n, comps) in (10usize..120).prop_flat_map(|n| (Just(n), separated_components(n)))
    ) {
        let s = multi_component_state(pn(n), &comps).unwrap();
        prop_assert!((norm(&s) - 1.0).abs() < 1e-12);
        let p = s.probabilities();
        for &(x, rho) in &comps {
            let pos = x * n as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n);
            let sites: Vec<usize> = if hi == lo { vec![lo] } else { vec![lo, hi] };
            let w: f64 = sites.iter().map(|&i| p[i]).sum();
            let m: f64 = sites.iter().map(|&i| p[i] * i as f64).sum();
            prop_assert!((w - rho).abs() < 1e-12, "weight {} vs {}", w, rho);
            prop_assert!((m - rho * pos).abs() < 1e-12 * n as f64, "moment {} vs {}", m, rho * pos);
        }
    }

    #[test]
    fn binomial_lossless_qfi_is_variance_identity(n in 1usize..=50, t in 0.0f64..=1.0) {
        let s = binomial_state(pn(n), t).unwrap();
        let f = qfi(&s, &LossModel::lossless()).unwrap().value;
        prop_assert!((f - 4.0 * n as f64 * t * (1.0 - t)).abs() < 1e-9);
    }

    #[test]
    fn holland_burnett_has_no_odd_terms(half in 1usize..40) {
        let s = holland_burnett_state(pn(2 * half)).unwrap();
        prop_assert!(s.amplitudes().iter().skip(1).step_by(2).all(|a| *a == 0.0));
    }

    #[test]
    fn rescaled_loss_is_monotone(n in 1usize..1000, r in 0.0f64..0.99, dr in 1e-6f64..0.009) {
        let a = rescaled_loss(pn(n), LossFraction::new(r).unwrap()).value();
        let b = rescaled_loss(pn(n + 1), LossFraction::new(r).unwrap()).value();
        let c = rescaled_loss(pn(n), LossFraction::new(r + dr).unwrap()).value();
        prop_assert!(b >= a && c > a);
    }

    #[test]
    fn block_traces_conserve_probability(s in state(10), r1 in 0.0f64..0.99, r2 in 0.0f64..0.99) {
        let loss = LossModel::new(r1, r2).unwrap();
        let total: f64 = assemble_all(&s, &loss).iter().map(|b| b.trace()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn blocks_are_positive_semidefinite(s in state(10), r1 in 0.0f64..0.99, r2 in 0.0f64..0.99) {
        let loss = LossModel::new(r1, r2).unwrap();
        for k in 0..=s.photons() {
            let b = assemble_block(&s, &loss, k).unwrap();
            let eig = b.eigen().unwrap();
            let clipped: f64 = eig.values.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
            prop_assert!(clipped < 1e-10, "k={} clipped {}", k, clipped);
        }
    }

    #[test]
    fn single_arm_blocks_are_rank_one(s in state(10), r1 in loss()) {
        let loss = LossModel::single(r1).unwrap();
        for k in 0..=s.photons() {
            let b = assemble_block(&s, &loss, k).unwrap();
            let mut vals = b.eigen().unwrap().values.iter().copied().collect::<Vec<f64>>();
            vals.sort_by(|a, b| b.total_cmp(a));
            if vals.len() > 1 {
                prop_assert!(vals[1] < 1e-10 * b.trace().max(1e-300) + 1e-300, "k={} second {}", k, vals[1]);
            }
        }
    }

    #[test]
    fn branch_weights_are_block_traces(s in state(12), r1 in 0.0f64..0.99) {
        let w = branch_weights(&s, LossFraction::new(r1).unwrap());
        let loss = LossModel::single(r1).unwrap();
        for (k, wk) in w.as_slice().iter().enumerate() {
            let t = assemble_block(&s, &loss, k).unwrap().trace();
            prop_assert!((wk - t).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_rows_sum_to_one(n in 0usize..=1000, r in 0.0f64..0.999) {
        let table = LossTable::new(n, LossFraction::new(r).unwrap());
        let sum: f64 = (0..=n).map(|k| table.coefficient(n, k)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qfi_never_exceeds_bound(s in state(12), r1 in loss(), r2 in 0.0f64..0.99) {
        let loss = LossModel::new(r1, r2).unwrap();
        let res = qfi(&s, &loss).unwrap();
        let bound = qfi_upper_bound(pn(s.photons()), &loss).unwrap();
        prop_assert!(res.value <= res.upper_bound * (1.0 + 1e-8));
        prop_assert!(res.value <= bound * (1.0 + 1e-8));
    }

    #[test]
    fn branch_sum_equals_eigen_path(s in state(12), r1 in loss()) {
        let a = qfi_single_mode(&s, LossFraction::new(r1).unwrap()).value;
        let b = qfi_eigen(&s, &LossModel::single(r1).unwrap()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-8 * a.max(1e-12), "{} vs {}", a, b);
    }

    #[test]
    fn qfi_is_non_increasing_in_loss(n in 1usize..=10, t in 0.05f64..0.95) {
        for s in [noon_state(pn(n)), binomial_state(pn(n), t).unwrap()] {
            let values: Vec<f64> = (0..10)
                .map(|i| qfi_single_mode(&s, LossFraction::new(0.1 * i as f64).unwrap()).value)
                .collect();
            for w in values.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", values);
            }
        }
    }

    #[test]
    fn near_lossless_limit_is_variance(s in state(20)) {
        let f = qfi_single_mode(&s, LossFraction::new(1e-6).unwrap()).value;
        let v = 4.0 * s.variance();
        prop_assert!((f - v).abs() <= 1e-4 * v.max(1e-12) + 1e-12, "{} vs {}", f, v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigen_path_matches_fidelity_oracle(s in state(8), r1 in loss(), r2 in loss()) {
        let loss = LossModel::new(r1, r2).unwrap();
        let a = qfi_eigen(&s, &loss).unwrap().value;
        let b = qfi_fidelity_oracle(&s, &loss, 1e-3).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-3 * a.max(1e-6), "{} vs {}", a, b);
    }

    #[test]
    fn oracle_is_phase_covariant(s in state(6), r1 in loss(), r2 in loss()) {
        let loss = LossModel::new(r1, r2).unwrap();
        let a = qfi_fidelity_oracle_at(&s, &loss, 0.0, 1e-3).unwrap().value;
        let b = qfi_fidelity_oracle_at(&s, &loss, 0.3, 1e-3).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-6 * a.max(1e-6), "{} vs {}", a, b);
    }
}

#[test]
fn classical_baseline_shot_noise_limit() {
    for n in [1usize, 10, 100, 1000] {
        let fc = classical_baseline(pn(n), &LossModel::single(1e-8).unwrap()).unwrap();
        assert!((fc - n as f64).abs() / (n as f64) < 1e-6, "N={n}: {fc}");
    }
}

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use qfi_core::continuum::{BifurcationRecord, Threshold};
use qfi_core::optimizer::RestartRecord;
use qfi_core::{
    airy_optimal_state, bifurcation_scan, classical_baseline, gaussian_optimal_state,
    optimize_state, qfi_asymptote_single, qfi_asymptote_two, qfi_upper_bound, rescaled_loss,
    Asymptote, InputState, LossModel, OptimizerConfig, PhotonNumber, QfiResult, RescaledLoss,
    ScanConfig,
};

use crate::args::{self, AsymptoteArgs, BifurcationArgs, CollapseArgs, Format, Mode, OptimizeArgs};
use crate::output::{num, OutputSet, Table};
use crate::{CliError, Status};

pub fn optimize(a: &OptimizeArgs, out: &mut OutputSet) -> Result<Status, CliError> {
    let n = PhotonNumber::new(a.n)?;
    let loss = LossModel::new(a.loss1, a.loss2)?;
    let config = OptimizerConfig {
        restarts: a.restarts,
        seed: a.seed,
        ..OptimizerConfig::default()
    };
    let opt = optimize_state(n, &loss, &config)?;
    if !opt.converged {
        log::warn!("optimizer did not converge; writing best state found");
    }

    let (profile_name, profile) = matching_profile(n, &loss)?;
    let overlap = profile.as_ref().map(|p| opt.state.overlap(p));
    let baseline = classical_baseline(n, &loss).ok();
    let summary = OptimizeSummary {
        n: a.n,
        loss1: a.loss1,
        loss2: a.loss2,
        qfi: opt.qfi.clone(),
        converged: opt.converged,
        iterations: opt.iterations,
        support: opt.support.clone(),
        duality_gap: opt.duality_gap,
        mirror_degenerate: opt.mirror_degenerate,
        mean_photons: opt.state.mean_photons(),
        width: opt.state.variance().sqrt(),
        classical_baseline: baseline,
        improvement: baseline.map(|fc| (opt.qfi.value / fc).sqrt() - 1.0),
        asymptote: asymptote_for(n, &loss)?,
        profile: profile_name,
        profile_overlap: overlap,
        restarts: opt.restarts.clone(),
    };

    let phi = opt.state.amplitudes();
    let p = opt.state.probabilities();
    let prof: Vec<f64> = match &profile {
        Some(s) => s.amplitudes().to_vec(),
        None => vec![f64::NAN; phi.len()],
    };
    match a.format {
        Format::Csv => {
            let mut t = Table::new("state", &["n", "phi_n", "p_n", "profile_phi"]);
            for i in 0..phi.len() {
                t.row(&[i.to_string(), num(phi[i]), num(p[i]), num(prof[i])]);
            }
            out.write("state.csv", &t.into_string())?;
        }
        Format::Json => {
            let doc = StateDoc {
                schema: "lossqfi-state/1",
                phi: phi.to_vec(),
                p,
                profile_phi: profile.map(|s| s.amplitudes().to_vec()),
            };
            out.write_json("state.json", &doc)?;
        }
    }
    out.write_json("summary.json", &summary)?;
    Ok(if opt.converged {
        Status::Success
    } else {
        Status::Partial
    })
}

#[derive(Serialize)]
struct StateDoc {
    schema: &'static str,
    phi: Vec<f64>,
    p: Vec<f64>,
    profile_phi: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct OptimizeSummary {
    n: usize,
    loss1: f64,
    loss2: f64,
    qfi: QfiResult,
    converged: bool,
    iterations: usize,
    support: Vec<usize>,
    duality_gap: Option<f64>,
    mirror_degenerate: bool,
    mean_photons: f64,
    width: f64,
    classical_baseline: Option<f64>,
    /// `sqrt(F / F_c) - 1`.
    improvement: Option<f64>,
    asymptote: Option<Asymptote>,
    profile: Option<&'static str>,
    profile_overlap: Option<f64>,
    restarts: Vec<RestartRecord>,
}

/// Airy profile for loss in one arm, Gaussian for loss in both.
fn matching_profile(
    n: PhotonNumber,
    loss: &LossModel,
) -> Result<(Option<&'static str>, Option<InputState>), CliError> {
    let (l1, l2) = (loss.mode1, loss.mode2);
    Ok(match (l1.is_lossless(), l2.is_lossless()) {
        (true, true) => (None, None),
        (false, true) => (
            Some("airy"),
            Some(airy_optimal_state(n, rescaled_loss(n, l1))?),
        ),
        (true, false) => (
            Some("airy"),
            Some(airy_optimal_state(n, rescaled_loss(n, l2))?.reversed()),
        ),
        (false, false) => {
            let s = gaussian_optimal_state(n, rescaled_loss(n, l1), rescaled_loss(n, l2))?;
            (Some("gaussian"), Some(s))
        }
    })
}

fn asymptote_for(n: PhotonNumber, loss: &LossModel) -> Result<Option<Asymptote>, CliError> {
    let (l1, l2) = (loss.mode1, loss.mode2);
    Ok(match (l1.is_lossless(), l2.is_lossless()) {
        (true, true) => None,
        (false, true) => Some(qfi_asymptote_single(n, rescaled_loss(n, l1))?),
        (true, false) => Some(qfi_asymptote_single(n, rescaled_loss(n, l2))?),
        (false, false) => Some(qfi_asymptote_two(
            n,
            rescaled_loss(n, l1),
            rescaled_loss(n, l2),
        )?),
    })
}

pub fn bifurcation(a: &BifurcationArgs, out: &mut OutputSet) -> Result<Status, CliError> {
    let grid = args::grid(a.r_min, a.r_max, a.r_steps, a.log_grid).map_err(CliError::Usage)?;
    let scan = bifurcation_scan(&grid, &ScanConfig::default())?;

    let mut comps = Table::new("components", &["r", "component_index", "x", "rho"]);
    let mut curve = Table::new(
        "curve",
        &[
            "r",
            "f_tilde",
            "alpha",
            "stationarity_residual",
            "max_gain",
            "converged",
        ],
    );
    for rec in &scan.records {
        for (i, c) in rec.state.components().iter().enumerate() {
            comps.row(&[num(rec.r), i.to_string(), num(c.x), num(c.rho)]);
        }
        curve.row(&curve_row(rec));
    }
    let mut th = Table::new("thresholds", &["label", "kind", "index", "r_value"]);
    for t in &scan.thresholds.entries {
        th.row(&threshold_row(t));
    }
    out.write("components.csv", &comps.into_string())?;
    out.write("curve.csv", &curve.into_string())?;
    out.write("thresholds.csv", &th.into_string())?;

    let failed = scan.records.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        log::warn!(
            "{failed} of {} grid points not certified",
            scan.records.len()
        );
    }
    Ok(if failed == scan.records.len() {
        Status::Partial
    } else {
        Status::Success
    })
}

fn curve_row(rec: &BifurcationRecord) -> [String; 6] {
    [
        num(rec.r),
        num(rec.f_tilde),
        num(rec.alpha),
        num(rec.stationarity_residual),
        num(rec.max_gain),
        rec.converged.to_string(),
    ]
}

fn threshold_row(t: &Threshold) -> [String; 4] {
    let kind = match t.kind {
        qfi_core::continuum::ThresholdKind::Appearance => "appearance",
        qfi_core::continuum::ThresholdKind::Detachment => "detachment",
    };
    [
        t.label.clone(),
        kind.to_string(),
        t.index.to_string(),
        num(t.value),
    ]
}

struct Cell {
    n: usize,
    loss: f64,
    r: f64,
}

pub fn collapse(a: &CollapseArgs, out: &mut OutputSet) -> Result<Status, CliError> {
    let mut cells = Vec::new();
    for &n in &a.n_list {
        PhotonNumber::new(n)?;
        let nf = n as f64;
        match (&a.r_list, &a.loss_list) {
            (Some(rs), _) => {
                for &r in rs {
                    RescaledLoss::new(r)?;
                    cells.push(Cell {
                        n,
                        loss: r / (nf + r),
                        r,
                    });
                }
            }
            (None, Some(ls)) => {
                for &l in ls {
                    qfi_core::LossFraction::new(l)?;
                    cells.push(Cell {
                        n,
                        loss: l,
                        r: nf * l / (1.0 - l),
                    });
                }
            }
            (None, None) => {
                return Err(CliError::Usage(
                    "one of --r-list or --loss-list is required".into(),
                ))
            }
        }
    }
    let config = OptimizerConfig {
        restarts: a.restarts,
        seed: a.seed,
        ..OptimizerConfig::default()
    };
    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|c| evaluate_cell(c, a.mode, &config))
        .collect();

    let mut t = Table::new(
        "collapse",
        &[
            "N",
            "R",
            "r",
            "F_opt",
            "F_upper",
            "ratio",
            "converged",
            "status",
        ],
    );
    let mut all_ok = true;
    for (c, res) in cells.iter().zip(&results) {
        let (f, up, conv, status) = match res {
            Ok((f, up, conv)) => (
                *f,
                *up,
                *conv,
                if *conv {
                    "ok".to_string()
                } else {
                    "not_converged".to_string()
                },
            ),
            Err(e) => (
                f64::NAN,
                f64::NAN,
                false,
                format!("error: {}", e.to_string().replace(',', ";")),
            ),
        };
        all_ok &= conv;
        t.row(&[
            c.n.to_string(),
            num(c.loss),
            num(c.r),
            num(f),
            num(up),
            num(f / up),
            conv.to_string(),
            status,
        ]);
    }
    out.write("collapse.csv", &t.into_string())?;
    Ok(if all_ok {
        Status::Success
    } else {
        Status::Partial
    })
}

type CellResult = Result<(f64, f64, bool), qfi_core::Error>;

fn evaluate_cell(c: &Cell, mode: Mode, config: &OptimizerConfig) -> CellResult {
    let n = PhotonNumber::new(c.n)?;
    let loss = match mode {
        Mode::Single => LossModel::single(c.loss)?,
        Mode::Symmetric => LossModel::symmetric(c.loss)?,
    };
    let opt = optimize_state(n, &loss, config)?;
    let upper = qfi_upper_bound(n, &loss)?;
    Ok((opt.qfi.value, upper, opt.converged))
}

pub fn asymptote(a: &AsymptoteArgs, out: &mut OutputSet) -> Result<Status, CliError> {
    let (start, stop, steps) = args::parse_range(&a.r_range).map_err(CliError::Usage)?;
    let grid = args::grid(start, stop, steps, a.log_grid).map_err(CliError::Usage)?;
    let n = PhotonNumber::new(a.n)?;
    let mut t = Table::new(
        "asymptote",
        &["r", "F_asym", "F_upper", "bracket", "in_regime"],
    );
    for r in grid {
        let rr = RescaledLoss::new(r)?;
        let asym = match a.mode {
            Mode::Single => qfi_asymptote_single(n, rr)?,
            Mode::Symmetric => qfi_asymptote_two(n, rr, rr)?,
        };
        t.row(&[
            num(r),
            num(asym.value),
            num(asym.bound),
            num(asym.bracket),
            asym.in_regime.to_string(),
        ]);
    }
    out.write("asymptote.csv", &t.into_string())?;
    Ok(Status::Success)
}

/// Output directory for a rerun when none is given.
pub fn default_rerun_dir(manifest: &Path) -> std::path::PathBuf {
    manifest.parent().unwrap_or(Path::new(".")).join("rerun")
}

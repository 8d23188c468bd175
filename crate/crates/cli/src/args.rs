use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "lossqfi",
    version,
    about = "Optimal phase-estimation states under photon loss"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal N-photon state for a loss configuration.
    Optimize(OptimizeArgs),
    /// Continuum optimum as a function of r, with bifurcation thresholds.
    Bifurcation(BifurcationArgs),
    /// Optimal Fisher information relative to the linear bound over a grid.
    Collapse(CollapseArgs),
    /// Asymptotic Fisher information curves.
    Asymptote(AsymptoteArgs),
    /// Re-execute a run from its manifest and verify the output digests.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub loss1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub loss2: f64,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BifurcationArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub r_min: f64,
    #[arg(long, default_value_t = 30.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 200)]
    pub r_steps: usize,
    /// Space the grid evenly in ln r instead of r.
    #[arg(long)]
    pub log_grid: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CollapseArgs {
    /// Comma-separated photon numbers.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    /// Comma-separated rescaled losses r; R = r / (N + r) for each N.
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "loss_list",
        required_unless_present = "loss_list"
    )]
    pub r_list: Option<Vec<f64>>,
    /// Comma-separated loss fractions R.
    #[arg(long, value_delimiter = ',')]
    pub loss_list: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Mode::Single)]
    pub mode: Mode,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AsymptoteArgs {
    #[arg(long, value_enum, default_value_t = Mode::Single)]
    pub mode: Mode,
    /// `start:stop:steps`.
    #[arg(long, default_value = "1:1000:200")]
    pub r_range: String,
    #[arg(long)]
    pub log_grid: bool,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; defaults to the manifest's own directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `start:stop:steps`.
pub fn parse_range(spec: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:steps, got {spec:?}"));
    }
    let start: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("bad start {:?}: {e}", parts[0]))?;
    let stop: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad stop {:?}: {e}", parts[1]))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|e| format!("bad steps {:?}: {e}", parts[2]))?;
    if !(start.is_finite() && stop.is_finite()) || stop < start || steps == 0 {
        return Err(format!(
            "range {spec:?} must satisfy start <= stop and steps >= 1"
        ));
    }
    Ok((start, stop, steps))
}

/// `steps` points from `start` to `stop`, evenly in `r` or in `ln r`.
pub fn grid(start: f64, stop: f64, steps: usize, log: bool) -> Result<Vec<f64>, String> {
    if steps == 1 {
        return Ok(vec![start]);
    }
    if log && start <= 0.0 {
        return Err("a logarithmic grid needs a positive start".into());
    }
    let span = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            let t = i as f64 / span;
            if log {
                (start.ln() + (stop.ln() - start.ln()) * t).exp()
            } else {
                start + (stop - start) * t
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("1:10:5").unwrap(), (1.0, 10.0, 5));
        assert!(parse_range("1:10").is_err());
        assert!(parse_range("10:1:5").is_err());
        assert!(parse_range("1:10:0").is_err());
    }

    #[test]
    fn grids_hit_endpoints() {
        let g = grid(1.0, 100.0, 3, true).unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12 && (g[2] - 100.0).abs() < 1e-12);
        assert_eq!(grid(0.0, 1.0, 5, false).unwrap()[2], 0.5);
        assert!(grid(0.0, 1.0, 5, true).is_err());
    }
}

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::args::{AsymptoteArgs, BifurcationArgs, CollapseArgs, OptimizeArgs};
use crate::output::OutputDigest;

pub const MANIFEST_SCHEMA: &str = "lossqfi-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

/// A command together with every parameter that influences its output.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Optimize(OptimizeArgs),
    Bifurcation(BifurcationArgs),
    Collapse(CollapseArgs),
    Asymptote(AsymptoteArgs),
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Optimize(_) => "optimize",
            Invocation::Bifurcation(_) => "bifurcation",
            Invocation::Collapse(_) => "collapse",
            Invocation::Asymptote(_) => "asymptote",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Invocation::Optimize(a) => Some(a.seed),
            Invocation::Collapse(a) => Some(a.seed),
            _ => None,
        }
    }

    fn parameters(&self) -> serde_json::Result<serde_json::Value> {
        match self {
            Invocation::Optimize(a) => serde_json::to_value(a),
            Invocation::Bifurcation(a) => serde_json::to_value(a),
            Invocation::Collapse(a) => serde_json::to_value(a),
            Invocation::Asymptote(a) => serde_json::to_value(a),
        }
    }

    /// Rebuilds an invocation from a manifest; the output directory is left
    /// empty for the caller to fill in.
    pub fn from_manifest(manifest: &RunManifest) -> anyhow::Result<Self> {
        let p = manifest.parameters.clone();
        Ok(match manifest.command.as_str() {
            "optimize" => Invocation::Optimize(serde_json::from_value(p)?),
            "bifurcation" => Invocation::Bifurcation(serde_json::from_value(p)?),
            "collapse" => Invocation::Collapse(serde_json::from_value(p)?),
            "asymptote" => Invocation::Asymptote(serde_json::from_value(p)?),
            other => anyhow::bail!("unknown command {other:?} in manifest"),
        })
    }

    pub fn out_dir(&self) -> &Path {
        match self {
            Invocation::Optimize(a) => &a.out,
            Invocation::Bifurcation(a) => &a.out,
            Invocation::Collapse(a) => &a.out,
            Invocation::Asymptote(a) => &a.out,
        }
    }

    pub fn set_out_dir(&mut self, dir: &Path) {
        let slot = match self {
            Invocation::Optimize(a) => &mut a.out,
            Invocation::Bifurcation(a) => &mut a.out,
            Invocation::Collapse(a) => &mut a.out,
            Invocation::Asymptote(a) => &mut a.out,
        };
        *slot = dir.to_path_buf();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn new(
        inv: &Invocation,
        wall_time_seconds: f64,
        outputs: Vec<OutputDigest>,
    ) -> anyhow::Result<Self> {
        Ok(Self {
            schema: MANIFEST_SCHEMA.to_string(),
            command: inv.name().to_string(),
            parameters: inv.parameters()?,
            seed: inv.seed(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds,
            outputs,
        })
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)?;
        let m: RunManifest = serde_json::from_str(&text)?;
        if m.schema != MANIFEST_SCHEMA {
            anyhow::bail!("unsupported manifest schema {:?}", m.schema);
        }
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

//! Command-line front-end: every command writes plain data files plus a
//! manifest from which the run can be repeated and verified.

pub mod args;
pub mod commands;
pub mod manifest;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use args::{Cli, Command, RerunArgs};
use manifest::{Invocation, RunManifest, MANIFEST_FILE};
use output::OutputSet;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_INTEGRITY: i32 = 4;

/// Whether every part of a run converged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Partial,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("integrity: {0}")]
    Integrity(String),
    #[error(transparent)]
    Internal(#[from] anyhow::Error),
}

impl From<qfi_core::Error> for CliError {
    fn from(e: qfi_core::Error) -> Self {
        match e {
            qfi_core::Error::Integrity { .. } => CliError::Integrity(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Integrity(_) => EXIT_INTEGRITY,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Success => EXIT_OK,
            Status::Partial => EXIT_PARTIAL,
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let inv = match cli.command {
        Command::Optimize(a) => Invocation::Optimize(a),
        Command::Bifurcation(a) => Invocation::Bifurcation(a),
        Command::Collapse(a) => Invocation::Collapse(a),
        Command::Asymptote(a) => Invocation::Asymptote(a),
        Command::Rerun(a) => return rerun(&a),
    };
    execute(&inv)
}

/// Runs one command and writes its outputs and manifest.
pub fn execute(inv: &Invocation) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut out = OutputSet::create(inv.out_dir())?;
    let status = match inv {
        Invocation::Optimize(a) => commands::optimize(a, &mut out)?,
        Invocation::Bifurcation(a) => commands::bifurcation(a, &mut out)?,
        Invocation::Collapse(a) => commands::collapse(a, &mut out)?,
        Invocation::Asymptote(a) => commands::asymptote(a, &mut out)?,
    };
    let manifest = RunManifest::new(inv, start.elapsed().as_secs_f64(), out.digests.clone())?;
    manifest.write(out.dir())?;
    Ok(Outcome {
        status,
        out_dir: out.dir().to_path_buf(),
        manifest,
    })
}

/// Repeats a recorded run and checks every output against its digest.
pub fn rerun(a: &RerunArgs) -> Result<Outcome, CliError> {
    let original = RunManifest::read(&a.manifest)?;
    let mut inv = Invocation::from_manifest(&original)?;
    let dir = a
        .out
        .clone()
        .unwrap_or_else(|| commands::default_rerun_dir(&a.manifest));
    if dir.join(MANIFEST_FILE) == a.manifest {
        return Err(CliError::Usage(
            "rerun output directory must differ from the original".into(),
        ));
    }
    inv.set_out_dir(&dir);
    let outcome = execute(&inv)?;
    let fresh = &outcome.manifest.outputs;
    for want in &original.outputs {
        match fresh.iter().find(|d| d.file == want.file) {
            Some(got) if got.sha256 == want.sha256 => {}
            Some(got) => {
                return Err(CliError::Integrity(format!(
                    "{}: digest {} differs from recorded {}",
                    want.file, got.sha256, want.sha256
                )))
            }
            None => {
                return Err(CliError::Integrity(format!(
                    "{} was not reproduced",
                    want.file
                )))
            }
        }
    }
    if fresh.len() != original.outputs.len() {
        return Err(CliError::Integrity(
            "rerun produced a different set of files".into(),
        ));
    }
    Ok(outcome)
}

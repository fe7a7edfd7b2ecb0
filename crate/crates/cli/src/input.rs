//! Resolving sets from names and files, and command errors.

use std::path::Path;

use kscert::catalog::{builtin_vectors, parse, VectorSet};
use kscert::constructor::peres33_alternate;

use crate::{Opts, EXIT_NUMERIC, EXIT_USAGE};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(kscert::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<kscert::Error> for CliError {
    fn from(e: kscert::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn code(&self) -> u8 {
        use kscert::Error::*;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(Solver(_) | Bracket(_) | Alignment(_) | Sdp(_)) => EXIT_NUMERIC,
            CliError::Core(_) => EXIT_USAGE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// A built-in name, `peres33-alt`, a built-in name with `-conj`, or a path
/// to a JSON vector set.
pub fn resolve(name: &str) -> CliResult<VectorSet> {
    let path = Path::new(name);
    if path.is_file() {
        return Ok(parse(&read_file(path)?)?);
    }
    if name == "peres33-alt" {
        return Ok(peres33_alternate()?);
    }
    if let Some(base) = name.strip_suffix("-conj") {
        return Ok(builtin_vectors(base)?.conjugated());
    }
    Ok(builtin_vectors(name)?)
}

/// The name given by `--set`, if any, without loading anything.
pub fn set_name(opts: &Opts) -> Option<&str> {
    opts.set.as_deref()
}

/// The vector set selected by `--set` or `--file`.
pub fn vector_set(opts: &Opts) -> CliResult<VectorSet> {
    match (&opts.set, &opts.file) {
        (Some(_), Some(_)) => usage("give either --set or --file, not both"),
        (Some(s), None) => resolve(s),
        (None, Some(f)) => Ok(parse(&read_file(f)?)?),
        (None, None) => usage("this command needs --set or --file"),
    }
}

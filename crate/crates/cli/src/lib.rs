//! Library side of the `ptel` command: spec files, directive runner and
//! report types, shared by the binary and the acceptance tests.

pub mod run;
pub mod spec;

use std::path::{Path, PathBuf};

use serde::Serialize;

use ptel::program::{parse_program, Program};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: ptel::Error },
    #[error(transparent)]
    Core(#[from] ptel::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn core(&self) -> Option<&ptel::Error> {
        match self {
            CliError::InFile { source, .. } | CliError::Core(source) => Some(source),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            _ => self.core().map_or("error", ptel::Error::kind),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.core() {
            Some(ptel::Error::Budget(_)) => EXIT_BUDGET,
            _ => EXIT_USAGE,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string_pretty(&Body {
            error: self.kind(),
            message: self.to_string(),
        })
        .expect("plain struct serializes")
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Attach the file name to parse errors.
pub fn in_file<T>(path: &Path, r: ptel::Result<T>) -> Result<T, CliError> {
    r.map_err(|source| CliError::InFile {
        path: path.to_path_buf(),
        source,
    })
}

/// Parse a program and apply `var=value` overrides of initial values.
pub fn load_program(path: &Path, inits: &[String]) -> Result<Program, CliError> {
    let mut p = in_file(path, parse_program(&read(path)?))?;
    for item in inits {
        let (var, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--init expects var=value, found `{item}`")))?;
        let value: i64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--init: `{value}` is not an integer")))?;
        p.set_initial(var.trim(), value)?;
    }
    Ok(p)
}

pub fn load_spec(path: &Path) -> Result<spec::SpecFile, CliError> {
    in_file(path, spec::parse_spec(&read(path)?))
}

pub fn load_proofs(path: &Path) -> Result<Vec<ptel::proof::Derivation>, CliError> {
    in_file(path, ptel::proof::parse_derivations(&read(path)?))
}

use std::collections::BTreeMap;
use std::fmt::{self, Display};
use std::path::{Path, PathBuf};

use stopping_core::Error;

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Numerical(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid arguments: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::TooLarge(_) | Error::Io(_) => {
                CliError::Invalid(e.to_string())
            }
            Error::Numerical(_) | Error::Lp(_) => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Invalid(msg.into()))
}

/// Everything needed to rerun a command, echoed as the first line of its output.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub out: Option<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            params: BTreeMap::new(),
            out: None,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// `command=... k1=v1 k2=v2 ... out=...`, keys sorted.
    pub fn to_line(&self) -> String {
        let mut parts = vec![format!("command={}", self.command)];
        parts.extend(self.params.iter().map(|(k, v)| format!("{k}={}", quote(v))));
        parts.push(format!("version={}", env!("CARGO_PKG_VERSION")));
        if let Some(p) = &self.out {
            parts.push(format!("out={}", quote(&p.display().to_string())));
        }
        parts.join(" ")
    }
}

fn quote(v: &str) -> String {
    if v.is_empty() || v.chars().any(char::is_whitespace) {
        format!("{v:?}")
    } else {
        v.to_string()
    }
}

/// Full-precision value, or `nan` for a missing one.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Manifest comment, header and rows as one text block.
pub fn csv(manifest: &RunManifest, header: &str, rows: &[String]) -> String {
    let mut out = format!("# {}\n{header}\n", manifest.to_line());
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}

pub fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

use std::fmt;
use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(weaksup::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(weaksup::Error::FlaggedRuns { .. }) => 3,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data(e) => e.fmt(f),
        }
    }
}

impl From<weaksup::Error> for CliError {
    fn from(e: weaksup::Error) -> Self {
        CliError::Data(e)
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Writes through a temporary file in the target directory and renames it
/// into place, so `path` is either untouched or complete.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Data(weaksup::Error::io(path, e));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

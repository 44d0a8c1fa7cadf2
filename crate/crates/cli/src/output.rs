//! Output files: commented header, shortest round-trip numbers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest decimal string that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// `#`-prefixed provenance block: tool version, subcommand, resolved config.
pub fn header(command: &str, config: &RunConfig) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# ccluster {VERSION} {command}");
    let _ = writeln!(h, "# seed = {}", config.run.seed);
    for line in config.to_toml().lines() {
        if line.is_empty() {
            let _ = writeln!(h, "#");
        } else {
            let _ = writeln!(h, "# {line}");
        }
    }
    h
}

/// A file waiting to be written; nothing touches disk until every file of a
/// run is ready.
pub struct Pending {
    pub name: &'static str,
    pub body: String,
}

pub fn write_all(dir: &Path, files: &[Pending]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    files
        .iter()
        .map(|f| {
            let path = dir.join(f.name);
            fs::write(&path, &f.body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

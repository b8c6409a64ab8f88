//! Command-line front end for `fracext-core`: `solve`, `extend` and `study`,
//! with CSV or JSON output.

pub mod config;
pub mod output;
pub mod run;

use std::fs;
use std::io::Write;

use anyhow::{Context, Result};

use config::{Format, RunConfig};

/// Executes a parsed configuration and writes the result to `--out` or
/// stdout.
pub fn run_and_emit(cfg: &RunConfig) -> Result<()> {
    let table = run::execute(cfg)?;
    let text = match cfg.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json()?,
    };
    match &cfg.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

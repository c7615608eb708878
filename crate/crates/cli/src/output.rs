//! CSV formatting and atomic file output.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[String]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, values: impl IntoIterator<Item = f64>) {
        let cells: Vec<String> = values.into_iter().map(fmt_f64).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename, so an error never leaves partial output.
/// `None` writes to stdout.
pub fn write_atomic(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::Io(e.to_string()));
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

//! Output staging: everything is rendered in memory first, then each file
//! is written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Stage};

/// 17 significant digits, enough to round-trip any f64.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io {
            stage: "output",
            source: e.into(),
        };
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(&row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io {
            stage: "output",
            source: e.into_error(),
        })?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io {
            stage: "output",
            source: e.into(),
        })?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|f| f.0.as_str()).collect()
    }

    pub fn write_all(self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).stage("output")?;
        for (name, bytes) in self.files {
            write_atomic(&dir.join(name), &bytes)?;
        }
        Ok(())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).stage("output")?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).stage("output")?;
    tmp.write_all(bytes).stage("output")?;
    tmp.persist(path).map_err(|e| CliError::Io {
        stage: "output",
        source: e.error,
    })?;
    Ok(())
}

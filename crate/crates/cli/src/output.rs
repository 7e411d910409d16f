//! Deterministic file output: CSV with 17 significant digits, '.' decimal,
//! comma separator and a header row; JSON with stable (declaration-order)
//! keys. Files are written whole, after all computation finished.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// 17 significant digits; enough to round-trip any f64.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt(v),
        None => "nan".to_string(),
    }
}

pub struct CsvTable {
    buffer: String,
    columns: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut buffer = header.join(",");
        buffer.push('\n');
        Self { buffer, columns: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width mismatch");
        self.buffer.push_str(&cells.join(","));
        self.buffer.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buffer
    }
}

/// Collects finished artifacts and writes them all at once, so failed runs
/// leave no partial output behind.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn add_csv(&mut self, name: &str, table: CsvTable) {
        self.files.push((name.to_string(), table.into_string()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.files.push((name.to_string(), body));
        Ok(())
    }

    pub fn write(self) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, body) in self.files {
            let path = self.dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

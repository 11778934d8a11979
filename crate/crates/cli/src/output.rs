//! Output directory with provenance headers on every emitted file.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use qparity::io::formats::format_f64;
use qparity::io::TsvWriter;

use crate::svg::Chart;
use crate::CliError;

pub const TOOL: &str = concat!("qparity ", env!("CARGO_PKG_VERSION"));

pub struct Output {
    dir: PathBuf,
    meta: Vec<(&'static str, String)>,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn create(dir: &Path, command: &str, seed: u64, config_sha256: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            meta: vec![
                ("tool", TOOL.to_string()),
                ("config_sha256", config_sha256.to_string()),
                ("seed", seed.to_string()),
                ("command", command.to_string()),
            ],
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Table writer preloaded with the provenance header.
    pub fn table(&self, header: &[&str]) -> TsvWriter {
        self.table_with(&[], header)
    }

    pub fn table_with(&self, extra: &[(&str, String)], header: &[&str]) -> TsvWriter {
        let mut meta: Vec<(&str, String)> = self.meta.iter().map(|(k, v)| (*k, v.clone())).collect();
        meta.extend(extra.iter().cloned());
        TsvWriter::new(&meta, header)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_table(&mut self, name: &str, w: TsvWriter) -> Result<PathBuf, CliError> {
        self.write(name, &w.finish())
    }

    pub fn write_svg(&mut self, name: &str, chart: &Chart) -> Result<PathBuf, CliError> {
        let fields: Vec<String> = self.meta.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        let text = format!("<!-- {} -->\n{}", fields.join("; "), chart.render());
        self.write(name, &text)
    }

    pub fn write_report(&mut self, name: &str, report: &Report) -> Result<PathBuf, CliError> {
        let mut w = self.table(&["key", "value"]);
        for (k, v) in &report.entries {
            w.row(&[k.clone(), v.clone()]);
        }
        self.write_table(name, w)
    }
}

/// Ordered key/value fit report.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn text(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn num(&mut self, key: impl Into<String>, value: f64) {
        self.entries.push((key.into(), format_f64(value)));
    }
}

//! Tables written as unit-annotated CSV or JSON, and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub unit: String,
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<ColumnSpec>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column(&mut self, name: impl Into<String>, unit: &str) {
        self.columns.push(ColumnSpec { name: name.into(), unit: unit.into() });
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut head = String::new();
        for c in &self.columns {
            head.push_str(&format!("# name={}, unit={}\n", c.name, c.unit));
        }
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(head.into_bytes());
        for row in &self.rows {
            let cells = row.iter().map(|c| match c {
                Cell::Num(x) => fmt_num(*x),
                Cell::Text(s) => s.clone(),
            });
            w.write_record(cells).map_err(|e| CliError::io("formatting csv", e.into()))?;
        }
        w.into_inner().map_err(|e| CliError::io("formatting csv", e.into_error()))
    }

    /// Aligned text for the terminal, units in the header.
    pub fn to_text(&self) -> String {
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|c| if c.unit == "none" { c.name.clone() } else { format!("{} [{}]", c.name, c.unit) })
            .collect();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| match c {
                        Cell::Num(x) => format!("{x:.12e}"),
                        Cell::Text(s) => s.clone(),
                    })
                    .collect()
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        for line in std::iter::once(&header).chain(&rows) {
            let cells: Vec<String> = line.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    /// Column-major JSON: `{"columns": [{"name", "unit", "values"}]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let columns: Vec<serde_json::Value> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let values: Vec<&Cell> = self.rows.iter().map(|r| &r[i]).collect();
                serde_json::json!({ "name": c.name, "unit": c.unit, "values": values })
            })
            .collect();
        serde_json::json!({ "columns": columns })
    }

    /// Writes `<dir>/<stem>.<ext>` and returns the file name.
    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> CliResult<OutputFile> {
        let file = format!("{stem}.{}", format.extension());
        let bytes = match format {
            Format::Csv => self.to_csv()?,
            Format::Json => pretty(&self.to_json())?,
        };
        write_bytes(&dir.join(&file), &bytes)?;
        Ok(OutputFile { file, rows: self.rows.len(), format })
    }
}

pub fn pretty<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| CliError::io("serializing json", e.into()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let ctx = || format!("writing {}", path.display());
    let mut f = BufWriter::new(File::create(path).map_err(|e| CliError::io(ctx(), e))?);
    f.write_all(bytes).and_then(|_| f.flush()).map_err(|e| CliError::io(ctx(), e))
}

/// Writes to stdout; a reader that has gone away (`| head`) is not an error.
pub fn emit(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("writing to stdout", e)),
        _ => Ok(()),
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub rows: usize,
    pub format: Format,
}

pub const MANIFEST_VERSION: u32 = 1;

/// Record of a run; its `scenario` re-ingests as the input that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub command: String,
    pub scenario: Scenario,
    pub outputs: Vec<OutputFile>,
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, scenario: Scenario, outputs: Vec<OutputFile>, summary: serde_json::Value) -> Self {
        Manifest {
            manifest_version: MANIFEST_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            command: command.into(),
            scenario,
            outputs,
            summary,
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join("manifest.json");
        write_bytes(&path, &pretty(self)?)?;
        Ok(path)
    }
}

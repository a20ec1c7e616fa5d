use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use rydpair::atomic::DataFileInfo;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Table,
}

/// Provenance echoed at the top of every output.
#[derive(Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub data_source: String,
    pub data_files: Vec<DataFileInfo>,
    pub config: Value,
}

impl Metadata {
    fn csv_header(&self) -> String {
        let mut s = format!(
            "# {} {}\n# command: {}\n# data: {}\n",
            self.tool, self.version, self.command, self.data_source
        );
        for f in &self.data_files {
            s.push_str(&format!("# sha256 {}: {}\n", f.name, f.sha256));
        }
        s.push_str(&format!("# config: {}\n", self.config));
        s
    }
}

pub struct Envelope {
    pub format: Format,
    pub destination: Option<PathBuf>,
    pub metadata: Metadata,
}

impl Envelope {
    /// Writes a CSV body or a JSON `{metadata, data}` document.
    pub fn emit(
        &self,
        csv_body: impl FnOnce() -> Result<String>,
        data: impl FnOnce() -> Value,
    ) -> Result<()> {
        let text = match self.format {
            Format::Csv | Format::Table => {
                let mut s = self.metadata.csv_header();
                s.push_str(&csv_body()?);
                s
            }
            Format::Json => {
                let doc = json!({ "metadata": self.metadata, "data": data() });
                let mut s = serde_json::to_string_pretty(&doc)?;
                s.push('\n');
                s
            }
        };
        self.write(&text)
    }

    pub fn write(&self, text: &str) -> Result<()> {
        match &self.destination {
            Some(path) => {
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
                Ok(())
            }
        }
    }
}

/// Minimal CSV row writer for numeric tables.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

//! Deterministic table writers (CSV always, markdown on request) and the
//! per-run manifest.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// A rectangular table with a fixed header, rendered identically on every
/// run with the same inputs.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> anyhow::Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn write_markdown(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = String::new();
        text.push_str(&format!("| {} |\n", self.header.join(" | ")));
        text.push_str(&format!(
            "|{}|\n",
            self.header.iter().map(|_| " --- ").collect::<Vec<_>>().join("|")
        ));
        for row in &self.rows {
            text.push_str(&format!("| {} |\n", row.join(" | ")));
        }
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Fixed-precision float renderer so outputs are byte-stable.
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.6}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_else(|| "NA".to_string())
}

/// Writes one table in the requested formats; returns the files written.
pub struct OutputSink {
    pub dir: PathBuf,
    pub markdown: bool,
    pub written: Vec<String>,
}

impl OutputSink {
    pub fn new(dir: &Path, markdown: bool) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), markdown, written: Vec::new() })
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> anyhow::Result<()> {
        let csv_path = self.dir.join(format!("{name}.csv"));
        table.write_csv(&csv_path)?;
        self.written.push(format!("{name}.csv"));
        if self.markdown {
            let md_path = self.dir.join(format!("{name}.md"));
            table.write_markdown(&md_path)?;
            self.written.push(format!("{name}.md"));
        }
        Ok(())
    }

    pub fn write_file(&mut self, name: &str, content: &str) -> anyhow::Result<()> {
        std::fs::write(self.dir.join(name), content)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<S: Serialize> {
    pub subcommand: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub settings: S,
    pub outputs: Vec<String>,
}

pub fn config_hash(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Write `<subcommand>_manifest.json` recording config hash, seed, settings,
/// and produced files.
pub fn write_manifest<S: Serialize>(
    sink: &mut OutputSink,
    manifest: &Manifest<S>,
) -> anyhow::Result<()> {
    let name = format!("{}_manifest.json", manifest.subcommand);
    let text = serde_json::to_string_pretty(manifest)?;
    sink.write_file(&name, &(text + "\n"))?;
    Ok(())
}

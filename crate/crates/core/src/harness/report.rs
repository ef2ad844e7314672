//! CSV tables and JSON summaries on disk.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// Output of an experiment: a main CSV table, a JSON summary and optional
/// extra tables.
pub trait Report {
    /// File stem of the outputs.
    fn id(&self) -> &'static str;

    fn write_csv(&self, out: &mut dyn Write) -> Result<()>;

    fn summary(&self) -> serde_json::Value;

    /// Additional `(file stem suffix, writer)` tables.
    fn extra_tables(&self) -> Vec<(&'static str, Box<dyn Fn(&mut dyn Write) -> Result<()> + '_>)> {
        Vec::new()
    }
}

/// JSON summary layout shared by all experiments.
#[derive(Serialize)]
pub struct Summary<C: Serialize, M: Serialize> {
    pub experiment: &'static str,
    pub seed: u64,
    pub config: C,
    pub metrics: M,
}

impl<C: Serialize, M: Serialize> Summary<C, M> {
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("summaries serialize")
    }
}

/// Writes `<dir>/<id>.csv`, `<dir>/<id>.json` and the extra tables, and
/// returns the paths written.
pub fn write_report(report: &dyn Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let id = report.id();
    let mut paths = Vec::new();

    let csv_path = dir.join(format!("{id}.csv"));
    let mut out = BufWriter::new(File::create(&csv_path)?);
    report.write_csv(&mut out)?;
    out.flush()?;
    paths.push(csv_path);

    for (suffix, write) in report.extra_tables() {
        let path = dir.join(format!("{id}-{suffix}.csv"));
        let mut out = BufWriter::new(File::create(&path)?);
        write(&mut out)?;
        out.flush()?;
        paths.push(path);
    }

    let json_path = dir.join(format!("{id}.json"));
    let mut out = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut out, &report.summary())?;
    writeln!(out)?;
    out.flush()?;
    paths.push(json_path);
    Ok(paths)
}

/// Serializes `rows` as CSV with a header.
pub fn write_rows<S: Serialize>(out: &mut dyn Write, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

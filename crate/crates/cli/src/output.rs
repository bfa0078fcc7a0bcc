//! Writing tables and summaries to stdout or an output directory.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::commands::Artifacts;
use crate::config::{ConfigError, ExperimentConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            other => Err(ConfigError(format!("format must be text or csv, got {other:?}"))),
        }
    }
}

/// The CSV table without any comment line.
pub fn csv_body(a: &Artifacts) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&a.header)?;
    for row in &a.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

fn text_table(a: &Artifacts) -> String {
    let mut widths: Vec<usize> = a.header.iter().map(|h| h.len()).collect();
    for row in &a.rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:>w$}")).collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(&a.header);
    out.push('\n');
    for row in &a.rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

pub fn emit(cfg: &ExperimentConfig, a: &Artifacts, format: Format, out: Option<&Path>) -> io::Result<()> {
    let body = csv_body(a)?;
    let mut stdout = io::stdout().lock();
    match format {
        Format::Csv => stdout.write_all(&body)?,
        Format::Text => {
            for line in &a.summary {
                writeln!(stdout, "{line}")?;
            }
            if !a.rows.is_empty() {
                writeln!(stdout)?;
                stdout.write_all(text_table(a).as_bytes())?;
            }
        }
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let mut csv = format!("# rigidity-lab {} generated at unix time {stamp}\n", cfg.command).into_bytes();
        csv.extend_from_slice(&body);
        fs::write(dir.join(format!("{}.csv", cfg.command)), csv)?;
        let mut summary = cfg.to_text();
        summary.push('\n');
        for line in &a.summary {
            summary.push_str(line);
            summary.push('\n');
        }
        if let Some(v) = &a.violation {
            summary.push_str(&format!("invariant violated: {v}\n"));
        }
        fs::write(dir.join(format!("{}-summary.txt", cfg.command)), summary)?;
    }
    Ok(())
}

//! CSV and JSON writers with the provenance header.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use crate::{CliError, OutArgs};

/// Directory for outputs when `--out` is not given.
pub const OUT_DIR_VAR: &str = "QWPERSIST_OUT_DIR";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn destination(out: &OutArgs, default_name: &str) -> Option<PathBuf> {
    out.out.clone().or_else(|| std::env::var_os(OUT_DIR_VAR).map(|dir| PathBuf::from(dir).join(default_name)))
}

fn open(out: &OutArgs, default_name: &str) -> Result<Box<dyn Write>, CliError> {
    match destination(out, default_name) {
        Some(path) => {
            let file = File::create(&path)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

/// Full-precision float: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn write_csv(out: &OutArgs, default_name: &str, invocation: &[String], table: &Table) -> Result<(), CliError> {
    let mut sink = open(out, default_name)?;
    writeln!(sink, "# qwpersist {VERSION} {}", invocation.join(" "))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    let csv_err = |e: csv::Error| CliError::Usage(e.to_string());
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Wraps `body` with the generator name, version and flags.
pub fn write_json(
    out: &OutArgs,
    default_name: &str,
    invocation: &[String],
    key: &str,
    body: serde_json::Value,
) -> Result<(), CliError> {
    let mut doc = serde_json::Map::new();
    doc.insert(
        "generator".into(),
        serde_json::json!({ "name": "qwpersist", "version": VERSION, "args": invocation }),
    );
    doc.insert(key.into(), body);
    let mut sink = open(out, default_name)?;
    serde_json::to_writer_pretty(&mut sink, &doc).map_err(|e| CliError::Numeric(e.to_string()))?;
    writeln!(sink)?;
    sink.flush()?;
    Ok(())
}

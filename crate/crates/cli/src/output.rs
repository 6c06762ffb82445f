//! Artifact writing: a `meta` + `data` JSON envelope, or CSV with the same
//! meta JSON on a `#`-prefixed first line. Floating-point numbers are
//! serialized with 17 significant digits in both formats, so written
//! artifacts parse back bit-exactly.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::{CliError, RunConfig};

/// Reproducibility header embedded in every artifact.
#[derive(Debug, Serialize)]
pub struct Meta {
    /// Library version the artifact was produced with.
    pub version: &'static str,
    /// Fully resolved run configuration (defaults filled in); re-running it
    /// reproduces the artifact byte for byte.
    pub config: RunConfig,
    /// Non-fatal issues encountered during the run.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: &'a Meta,
    data: &'a T,
}

/// Tabular rendering of a command's data for the CSV format.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// A float with 17 significant digits: enough to reproduce the exact bits on
/// read-back.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON formatter that writes floats via [`format_float`], delegating layout
/// to the wrapped formatter.
struct PreciseFloats<F> {
    inner: F,
}

impl<F: Formatter> Formatter for PreciseFloats<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            // JSON has no non-finite literals
            writer.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

fn to_json_pretty<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        PreciseFloats {
            inner: PrettyFormatter::new(),
        },
    );
    value.serialize(&mut ser)?;
    Ok(buf)
}

fn to_json_compact<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        PreciseFloats {
            inner: CompactFormatter,
        },
    );
    value.serialize(&mut ser)?;
    Ok(buf)
}

/// Render the artifact and write it to `output` (stdout when `None`).
pub fn emit<T: Serialize>(
    output: Option<&Path>,
    format: crate::OutputFormat,
    meta: &Meta,
    data: &T,
    table: &CsvTable,
) -> Result<(), CliError> {
    let mut bytes = match format {
        crate::OutputFormat::Json => to_json_pretty(&Envelope { meta, data })?,
        crate::OutputFormat::Csv => {
            let mut buf = Vec::new();
            buf.extend_from_slice(b"# meta: ");
            buf.extend_from_slice(&to_json_compact(meta)?);
            buf.push(b'\n');
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(&table.header)?;
            for row in &table.rows {
                w.write_record(row)?;
            }
            w.into_inner()
                .map_err(|e| CliError::Config(format!("could not flush the CSV buffer: {e}")))?
        }
    };
    if bytes.last() != Some(&b'\n') {
        bytes.push(b'\n');
    }
    match output {
        Some(path) => std::fs::write(path, &bytes)?,
        None => io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

//! Number formatting and output sinks.
//!
//! Every floating-point value is written with 17 significant digits so that
//! it parses back to the identical `f64`.

use crate::error::CliResult;
use serde_json::{Number, Value};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

/// Formats `x` with 17 significant digits.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// A JSON number carrying 17 significant digits; non-finite values map to `null`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Number::from_str(&fmt(x))
            .map(Value::Number)
            .unwrap_or(Value::Null)
    } else {
        Value::Null
    }
}

/// Opens `path` for writing, or standard output when `path` is `None` or `-`.
pub fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(Box::new(BufWriter::new(File::create(p)?))),
        _ => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

/// CSV writer with `,` delimiter and `\n` line endings.
pub fn csv_writer(out: Box<dyn Write>) -> csv::Writer<Box<dyn Write>> {
    csv::WriterBuilder::new()
        .delimiter(b',')
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Writes pretty-printed JSON followed by a newline.
pub fn write_json(path: Option<&Path>, value: &Value) -> CliResult<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

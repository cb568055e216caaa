use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::args::OutputFormat;

/// Compact JSON with every float written to 17 significant digits, which
/// makes parse/serialize round trips byte-identical.
struct SigDigits;

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }
}

/// Serialize with [`SigDigits`]; non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits);
    value.serialize(&mut ser).expect("serializing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// One command's result in a format-neutral shape: a JSON document and a
/// flat table for CSV and plain-text output.
pub struct Rendered {
    pub json: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub warnings: Vec<String>,
}

impl Rendered {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => {
                let mut s = to_json(&self.json);
                s.push('\n');
                s
            }
            OutputFormat::Csv => self.csv(),
            OutputFormat::Table => self.table(),
        }
    }

    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("CSV is UTF-8")
    }

    fn table(&self) -> String {
        let mut out = String::new();
        if self.rows.len() == 1 {
            // a single record reads better as key/value lines
            let width = self.header.iter().map(String::len).max().unwrap_or(0);
            for (k, v) in self.header.iter().zip(&self.rows[0]) {
                out.push_str(&format!("{k:<width$}  {v}\n"));
            }
        } else {
            let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
            for r in &self.rows {
                for (w, v) in widths.iter_mut().zip(r) {
                    *w = (*w).max(v.len());
                }
            }
            let line = |cells: &[String]| {
                let parts: Vec<String> = cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, &w)| format!("{c:>w$}"))
                    .collect();
                parts.join("  ") + "\n"
            };
            out.push_str(&line(&self.header));
            for r in &self.rows {
                out.push_str(&line(r));
            }
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn indexed(prefix: &str, m: usize) -> impl Iterator<Item = String> + '_ {
    (0..m).map(move |i| format!("{prefix}{i}"))
}

//! CSV and JSONL output. Every CSV starts with a `# schema=1` comment line
//! followed by the column header.

use std::fmt::Display;
use std::io::Write;

use crate::error::Result;

pub const SCHEMA_LINE: &str = "# schema=1";

pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, header: &[&str]) -> Result<Self> {
        writeln!(out, "{SCHEMA_LINE}")?;
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter { out, columns: header.len() })
    }

    pub fn row(&mut self, fields: &[&dyn Display]) -> Result<()> {
        debug_assert_eq!(fields.len(), self.columns);
        let mut first = true;
        for f in fields {
            if !first {
                self.out.write_all(b",")?;
            }
            first = false;
            write!(self.out, "{f}")?;
        }
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Append one JSON object as a line.
pub fn write_jsonl<W: Write, T: serde::Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Parse a CSV produced by [`CsvWriter`] into its header and string rows.
pub fn read_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines();
    if lines.next()? != SCHEMA_LINE {
        return None;
    }
    let header: Vec<String> = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Some((header, rows))
}

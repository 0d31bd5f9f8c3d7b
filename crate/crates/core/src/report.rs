//! CSV output conventions: comma separated, LF line endings, one `#` comment
//! line with the parameter tuple ahead of the header row.

use std::io::Write;

use crate::error::Result;

pub fn csv_writer<W: Write>(mut out: W, comment: &str) -> Result<csv::Writer<W>> {
    writeln!(out, "# {}", comment.replace('\n', " "))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out))
}

/// Shortest round-trip rendering; infinities as `inf`/`-inf`.
pub fn num(v: f64) -> String {
    crate::exponents::fmt_f64(v)
}

//! CSV and number formatting shared by every writer.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Shortest decimal text that parses back to exactly `v`.
///
/// Plain notation for moderate magnitudes, scientific otherwise.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// CSV writer with `\n` line endings.
pub fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Creates `dir` and writes `name` inside it through `f`.
pub fn write_file<F>(dir: &Path, name: &str, f: F) -> Result<PathBuf>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut out = BufWriter::new(File::create(&path)?);
    f(&mut out)?;
    out.flush()?;
    Ok(path)
}

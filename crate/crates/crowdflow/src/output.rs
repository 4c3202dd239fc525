//! CSV and manifest writers. All numeric output is printed with 17
//! significant digits so runs can be audited and reproduced bit for bit;
//! nothing time- or host-dependent is ever written.

use crate::error::Result;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<CsvWriter> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter { out })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        let mut line = String::with_capacity(values.len() * 26);
        for (k, v) in values.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        writeln!(self.out, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Minimal CSV reader for the compare tooling and tests: a header row
/// followed by float rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .map(|h| h.split(',').map(|s| s.trim().to_string()).collect())
        .unwrap_or_default();
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match row {
            Ok(r) => rows.push(r),
            Err(e) => return Err(crate::error::Error::Parse(format!("{path:?}: {e}"))),
        }
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_doubles() {
        let dir = std::env::temp_dir().join("crowdflow_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let vals = [0.1, 1.0 / 3.0, 2.5e-17, -1.2345678901234567e8];
        let mut w = CsvWriter::create(&path, &["a", "b", "c", "d"]).unwrap();
        w.row(&vals).unwrap();
        w.finish().unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header, vec!["a", "b", "c", "d"]);
        for (x, y) in vals.iter().zip(&rows[0]) {
            assert_eq!(x.to_bits(), y.to_bits(), "{x} did not survive the round trip");
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}

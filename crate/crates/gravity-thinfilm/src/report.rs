//! Deterministic report emission: CSV with 17-significant-digit decimals
//! and JSON summaries. Identical inputs produce byte-identical files.

use crate::error::Result;
use std::fmt::Write as _;
use std::path::Path;

/// Format a float with 17 significant digits (round-trips exactly in f64).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// A simple CSV table builder.
pub struct Csv {
    buf: String,
    cols: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Csv {
            buf,
            cols: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.cols, "csv row width mismatch");
        let _ = writeln!(self.buf, "{}", cells.join(","));
    }

    pub fn row_floats(&mut self, cells: &[f64]) {
        let strs: Vec<String> = cells.iter().map(|&x| fmt17(x)).collect();
        self.row(&strs);
    }

    pub fn contents(&self) -> &str {
        &self.buf
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.buf)?;
        Ok(())
    }
}

/// Write a serde-serializable summary as pretty JSON.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::error::Error::Input(format!("json serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_round_trips() {
        for &x in &[
            std::f64::consts::PI,
            -1.0 / 3.0,
            1e-300,
            6.02e23,
            -0.2306746944710547,
        ] {
            let s = fmt17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s} did not round-trip");
        }
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["a", "b"]);
        c.row_floats(&[1.0, 2.5]);
        let lines: Vec<&str> = c.contents().lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "a,b");
        assert!(lines[1].starts_with("1.0000000000000000e0,"));
    }
}

//! Plain CSV tables with a header row.

use std::fmt::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Rows are accumulated in memory and written in one go.
#[derive(Debug, Clone)]
pub struct CsvTable {
    columns: usize,
    text: String,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut text = String::new();
        let names: Vec<&str> = header.iter().map(|h| h.as_ref()).collect();
        text.push_str(&names.join(","));
        text.push('\n');
        Self {
            columns: header.len(),
            text,
        }
    }

    /// Appends one row of already formatted cells.
    pub fn push<S: AsRef<str>>(&mut self, cells: &[S]) -> Result<()> {
        if cells.len() != self.columns {
            return Err(Error::Dimension(format!(
                "row has {} cells, header has {}",
                cells.len(),
                self.columns
            )));
        }
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(c.as_ref());
        }
        self.text.push('\n');
        Ok(())
    }

    /// Appends a numeric row.
    pub fn push_numbers(&mut self, values: impl IntoIterator<Item = f64>) -> Result<()> {
        let mut row = String::new();
        let mut count = 0;
        for v in values {
            if count > 0 {
                row.push(',');
            }
            let _ = write!(row, "{}", number(v));
            count += 1;
        }
        if count != self.columns {
            return Err(Error::Dimension(format!(
                "row has {count} cells, header has {}",
                self.columns
            )));
        }
        self.text.push_str(&row);
        self.text.push('\n');
        Ok(())
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

/// Shortest round-trip decimal form; `nan`/`inf` spelled out.
pub fn number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_and_round_trippable() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push_numbers([0.1, -2.5e-12]).unwrap();
        t.push(&["x", "y"]).unwrap();
        assert!(t.push_numbers([1.0]).is_err());
        let lines: Vec<&str> = t.as_str().lines().collect();
        assert_eq!(lines[0], "a,b");
        let parsed: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(parsed, vec![0.1, -2.5e-12]);
        assert_eq!(number(f64::NAN), "nan");
    }
}

//! Tabular output: CSV with six significant digits and a markdown mirror.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => sci(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(k: usize) -> Self {
        Cell::Int(k)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Scientific notation with six significant digits; non-finite values spelled out.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.5e}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Drops a column by name, if present.
    pub fn without(mut self, name: &str) -> Self {
        if let Some(k) = self.header.iter().position(|h| h == name) {
            self.header.remove(k);
            for r in &mut self.rows {
                r.remove(k);
            }
        }
        self
    }

    pub fn to_csv(&self, timestamp: bool) -> Result<String> {
        let mut out = Vec::new();
        if timestamp {
            writeln!(out, "{}", timestamp_line())?;
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r.iter().map(Cell::render))?;
            }
            w.flush()?;
        }
        Ok(String::from_utf8(out)?)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("| {} |\n", self.header.join(" | "));
        s.push_str(&format!("|{}\n", "---|".repeat(self.header.len())));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| c.render().replace('|', "\\|")).collect();
            s.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        s
    }
}

pub fn timestamp_line() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("# generated at unix time {secs}")
}

/// Writes `text` to `dir/name`, creating the directory, or to standard output without a directory.
pub fn emit(dir: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
            let path = d.join(name);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sci(1.294e-3), "1.29400e-3");
        assert_eq!(sci(-35.0), "-3.50000e1");
        assert_eq!(sci(0.0), "0.00000e0");
        assert_eq!(sci(f64::NAN), "NaN");
        assert_eq!(sci(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_quotes_and_markdown_escapes() {
        let mut t = Table::new(&["name", "value"]);
        t.push(vec!["a,b".into(), 2.5.into()]);
        t.push(vec!["x|y".into(), Cell::Empty]);
        assert_eq!(
            t.to_csv(false).unwrap(),
            "name,value\n\"a,b\",2.50000e0\nx|y,\n"
        );
        assert!(t.to_markdown().contains("x\\|y"));
        assert!(t.to_csv(true).unwrap().starts_with("# generated"));
    }

    #[test]
    fn drop_column() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1usize.into(), 2usize.into()]);
        let t = t.without("a").without("missing");
        assert_eq!(t.header, vec!["b"]);
        assert_eq!(t.rows[0], vec![Cell::Int(2)]);
    }
}

//! Result tables and artifact files.

use serde::Serialize;
use std::io;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Doubles carry 17 significant digits, enough for an exact round trip.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Float(x) => x.to_string().to_lowercase(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<i64> for Cell {
    fn from(n: i64) -> Self {
        Cell::Int(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_lowercase()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Comma-separated, LF-terminated CSV.
    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// Space-separated rendering of an integer list, for table cells.
pub fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'a str,
    pub seed: u64,
    pub config_hash: String,
    pub config: &'a str,
    pub parallel: bool,
    pub wall_time_seconds: f64,
    pub files: [&'static str; 2],
}

/// Writes `result.csv`, `result.json` and `manifest.json` into `dir`,
/// creating it if needed.
pub fn write_artifacts(dir: &Path, table: &Table, json: &serde_json::Value, manifest: &Manifest) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("result.csv"), table.to_csv()?)?;
    let mut body = serde_json::to_vec_pretty(json)?;
    body.push(b'\n');
    std::fs::write(dir.join("result.json"), body)?;
    let mut body = serde_json::to_vec_pretty(manifest)?;
    body.push(b'\n');
    std::fs::write(dir.join("manifest.json"), body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            let s = Cell::Float(x).render();
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn csv_dialect() {
        let mut t = Table::new(&["Theta", "gap"]);
        t.push(vec![1.5.into(), "a,b".into()]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "theta,gap\n1.5000000000000000e0,\"a,b\"\n");
    }
}

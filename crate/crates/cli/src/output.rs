//! CSV tables with an embedded provenance block, written atomically.

use std::io::Write;
use std::path::Path;

use crate::config::{Command, RunConfig};
use crate::fail::Failure;

const FENCE: &str = "# ---";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // `{}` prints the shortest string that parses back to the same f64
            Cell::Num(x) => format!("{x}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
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
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// The document: provenance comments, the header row, then the data rows.
pub fn render(table: &Table, command: Command, config: &RunConfig) -> String {
    let mut out = format!(
        "# udn {} {}\n# configuration (replay with `udn rerun <file>`)\n{FENCE}\n",
        env!("CARGO_PKG_VERSION"),
        command.name()
    );
    let replay = RunConfig {
        command: Some(command),
        output: None,
        ..config.clone()
    };
    for line in replay.to_toml().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str(FENCE);
    out.push('\n');

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns).expect("in-memory write");
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8"));
    out
}

/// Recovers the configuration embedded by [`render`].
pub fn provenance(document: &str) -> Result<RunConfig, Failure> {
    let mut lines = document.lines().skip_while(|l| *l != FENCE);
    if lines.next().is_none() {
        return Err(Failure::config("no provenance block found"));
    }
    let mut text = String::new();
    for line in lines {
        if line == FENCE {
            return RunConfig::parse(&text);
        }
        let body = line
            .strip_prefix("# ")
            .or_else(|| line.strip_prefix('#'))
            .ok_or_else(|| Failure::config("provenance block is not closed"))?;
        text.push_str(body);
        text.push('\n');
    }
    Err(Failure::config("provenance block is not closed"))
}

/// Writes through a temporary file in the target directory and renames it,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::io(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(content.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.scenario.rho_per_km2 = 600.0;
        cfg.sweep.rho = vec![300.0, 1e3];
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![0.1.into(), Cell::Empty]);
        let doc = render(&t, Command::Limit, &cfg);
        assert!(doc.ends_with("a,b\n0.1,\n"));
        let back = provenance(&doc).unwrap();
        assert_eq!(back.command, Some(Command::Limit));
        assert_eq!(back.scenario, cfg.scenario);
        assert_eq!(back.sweep, cfg.sweep);
    }

    #[test]
    fn floats_print_exactly() {
        for x in [0.1, 1.0 / 3.0, 2.5e-17, 1e6] {
            assert_eq!(Cell::Num(x).render().parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_atomic(&path, "one\n").unwrap();
        write_atomic(&path, "two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

//! CSV tables collected in memory and written once at the end of a run.

use std::fs;
use std::path::{Path, PathBuf};

use semilab::kernel::snapshot::write_snapshot;
use semilab::{Grid, KernelOperator};

use crate::{CliError, ScenarioConfig};

/// Shortest round-trip scientific notation, so equal runs give equal bytes.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

/// `# config=<hash> model=<m> h=<h> n=<n> x_max=<x> seed=<s>`
pub fn header_line(cfg: &ScenarioConfig, grid: &Grid) -> String {
    format!(
        "# config={} model={} h={} n={} x_max={} seed={}\n",
        cfg.hash(),
        cfg.model,
        num(grid.h()),
        grid.n(),
        num(grid.x_max()),
        cfg.seed
    )
}

#[derive(Debug, Clone)]
pub struct Table {
    header: String,
    columns: Vec<String>,
    rows: Vec<String>,
}

impl Table {
    pub fn new(cfg: &ScenarioConfig, grid: &Grid, columns: &[&str]) -> Self {
        Self {
            header: header_line(cfg, grid),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.columns.len());
        self.rows.push(fields.join(","));
    }

    /// Appends already formatted lines (each ending in a newline).
    pub fn push_raw(&mut self, lines: &str) {
        self.rows.extend(lines.lines().map(str::to_owned));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = self.header.clone();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

/// Files of one run, flushed together by [`Output::write`].
#[derive(Debug, Default)]
pub struct Output {
    files: Vec<(String, String)>,
}

impl Output {
    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_owned(), contents));
    }

    pub fn add_table(&mut self, name: &str, table: &Table) {
        self.add(name, table.render());
    }

    pub fn add_snapshot(&mut self, name: &str, omega: &KernelOperator) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write_snapshot(omega, &mut buf)?;
        self.add(name, String::from_utf8(buf).expect("snapshot is ascii"));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, contents) in &self.files {
            let path = dir.join(name);
            fs::write(&path, contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

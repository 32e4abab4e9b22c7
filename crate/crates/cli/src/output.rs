use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use wwr_core::mc::format_significant;

use crate::config::RunConfig;

/// A CSV table of numbers with a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut w: W, digits: usize) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_significant(x, digits)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    }
}

/// Where command output goes: files under `output.dir`, or standard output.
pub struct Sink<'a> {
    cfg: &'a RunConfig,
}

impl<'a> Sink<'a> {
    pub fn new(cfg: &'a RunConfig) -> Result<Self> {
        if let Some(dir) = &cfg.out_dir {
            fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        }
        Ok(Self { cfg })
    }

    pub fn has_dir(&self) -> bool {
        self.cfg.out_dir.is_some()
    }

    /// Writes a file under the output directory, or to stdout without one.
    pub fn emit(&self, name: &str, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<Option<PathBuf>> {
        match &self.cfg.out_dir {
            Some(dir) => {
                let path = dir.join(name);
                let file = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
                let mut w = BufWriter::new(file);
                write(&mut w).with_context(|| format!("cannot write {}", path.display()))?;
                w.flush()?;
                eprintln!("wrote {}", path.display());
                Ok(Some(path))
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                write(&mut lock).context("cannot write to stdout")?;
                Ok(None)
            }
        }
    }

    pub fn table(&self, name: &str, table: &Table) -> Result<Option<PathBuf>> {
        self.emit(name, |w| table.write(w, self.cfg.precision))
    }
}

/// A number formatted for use inside a file name or a column label.
pub fn label(x: f64) -> String {
    format_significant(x, 6)
}

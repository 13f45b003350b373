use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{io_error, CliError, Result};

/// Output directory of one command, stamping every file with the run's
/// provenance line.
pub struct Output {
    dir: PathBuf,
    provenance: String,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(config: &RunConfig) -> Result<Self> {
        fs::create_dir_all(&config.out_dir).map_err(io_error(&config.out_dir))?;
        Ok(Self {
            dir: config.out_dir.clone(),
            provenance: config.provenance(),
            written: Vec::new(),
        })
    }

    pub fn header_lines(&self) -> Vec<String> {
        vec![self.provenance.clone()]
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Opens `name` for writing; the caller writes the provenance header.
    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        let file = File::create(&path).map_err(io_error(&path))?;
        self.written.push(path);
        Ok(BufWriter::new(file))
    }

    /// Writes a CSV table after the provenance header.
    pub fn table<I>(&mut self, name: &str, columns: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let mut out = self.create(name)?;
        writeln!(out, "# {}", self.provenance).map_err(io_error(&path))?;
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
        w.write_record(columns).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(io_error(&path))?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.path(name);
        let mut out = self.create(name)?;
        writeln!(out, "# {}", self.provenance).map_err(io_error(&path))?;
        out.write_all(body.as_bytes()).map_err(io_error(&path))?;
        out.flush().map_err(io_error(&path))
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

pub fn open(path: &Path, what: &str) -> Result<File> {
    require_file(path, what)?;
    File::open(path).map_err(io_error(path))
}

pub fn num(v: f64) -> String {
    v.to_string()
}

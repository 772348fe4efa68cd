use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use tempfile::NamedTempFile;

use crate::error::CliResult;

/// Writes files into one directory, each tagged with the run's config and version.
pub struct Output {
    dir: PathBuf,
    meta: Value,
}

impl Output {
    pub fn new<C: Serialize>(dir: &Path, command: &str, seed: u64, config: &C) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            meta: json!({
                "version": sigdelta::VERSION,
                "command": command,
                "seed": seed,
                "config": serde_json::to_value(config)?,
            }),
        })
    }

    /// Temp file in the target directory, renamed into place once `body` succeeds.
    pub fn write_with<F>(&self, name: &str, body: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut dyn Write) -> CliResult<()>,
    {
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        {
            let mut w = BufWriter::new(tmp.as_file_mut());
            body(&mut w)?;
            w.flush()?;
        }
        tmp.as_file().sync_all()?;
        let path = self.dir.join(name);
        tmp.persist(&path).map_err(|e| e.error)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn json(&self, name: &str, body: Value) -> CliResult<PathBuf> {
        let mut doc = self.meta.clone();
        if let (Some(d), Value::Object(b)) = (doc.as_object_mut(), body) {
            d.extend(b);
        }
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, &doc)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// `# {meta}` line, then a header row and the records.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        self.write_with(name, |w| {
            self.csv_preamble(w)?;
            let mut c = csv::Writer::from_writer(w);
            c.write_record(header)?;
            for r in rows {
                c.write_record(r)?;
            }
            c.flush()?;
            Ok(())
        })
    }

    pub fn csv_preamble(&self, w: &mut dyn Write) -> CliResult<()> {
        writeln!(w, "# {}", self.meta)?;
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    sigdelta::export::fmt_f64(x)
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

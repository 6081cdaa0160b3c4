//! Atomic file output: everything is written to a temporary file in the
//! target directory and renamed into place.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Write through `f` into `name`, replacing any existing file at once.
    pub fn write_with<F>(&self, name: &str, f: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut dyn Write) -> CliResult<()>,
    {
        let target = self.path(name);
        let tmp = NamedTempFile::new_in(&self.root).map_err(|e| CliError::io(&self.root, e))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            f(&mut w)?;
            w.flush().map_err(|e| CliError::io(&target, e))?;
        }
        tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(oamspec_core::Error::from)?;
            w.write_all(b"\n").map_err(|e| CliError::io(Path::new(name), e))
        })
    }

    pub fn write_text(&self, name: &str, text: &str) -> CliResult<PathBuf> {
        self.write_with(name, |w| {
            w.write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new(name), e))
        })
    }
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn open(path: &Path) -> CliResult<fs::File> {
    fs::File::open(path).map_err(|e| CliError::io(path, e))
}

/// Relative paths in a config file are resolved against the file's directory.
pub fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base.and_then(Path::parent) {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

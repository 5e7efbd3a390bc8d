//! Atomic artifact writes and the run manifest.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Collects the files of one command run.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Writes `name` through a temporary file in the same directory, then renames it
    /// into place.
    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let tmp =
            tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            fill(&mut w).map_err(|e| CliError::io(&path, e))?;
            w.flush().map_err(|e| CliError::io(&path, e))?;
        }
        tmp.as_file()
            .sync_all()
            .map_err(|e| CliError::io(&path, e))?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            let perms = std::fs::Permissions::from_mode(0o644);
            tmp.as_file()
                .set_permissions(perms)
                .map_err(|e| CliError::io(&path, e))?;
        }
        tmp.persist(&path)
            .map_err(|e| CliError::io(&path, e.error))?;
        let data = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileRecord {
            path: name.to_string(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(&data)),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Config(format!("cannot serialise {name}: {e}")))?;
        self.write(name, |w| writeln!(w, "{text}"))
    }

    /// Writes `<command>_manifest.json` with the effective config, stamps and the
    /// checksums of every file written so far.
    pub fn finish<C: Serialize>(
        mut self,
        command: &str,
        config: &C,
        stamps: Value,
    ) -> Result<PathBuf, CliError> {
        let manifest = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "effective_config": config,
            "stamps": stamps,
            "files": self.files,
        });
        let name = format!("{command}_manifest.json");
        self.write_json(&name, &manifest)
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use tempfile::TempDir;

use crate::config::ExperimentConfig;
use crate::{runtime, CliError};

/// Root for run directories when no output path is given.
pub const OUTPUT_ROOT_VAR: &str = "CTWS_OUTPUT_ROOT";

pub fn resolve_output(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    match &cfg.output {
        Some(p) => p.clone(),
        None => std::env::var_os(OUTPUT_ROOT_VAR)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("ctws-runs"))
            .join(name),
    }
}

/// Artifacts go to a hidden sibling directory first and are renamed into
/// place only when the whole run succeeded. Dropping without `commit`
/// deletes them.
pub struct Staging {
    tmp: TempDir,
    dest: PathBuf,
}

impl Staging {
    pub fn new(dest: &Path) -> Result<Self, CliError> {
        if dest.exists() {
            return Err(CliError::Usage(format!(
                "output directory {} already exists",
                dest.display()
            )));
        }
        let parent = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(runtime("creating output root"))?;
        let tmp = tempfile::Builder::new()
            .prefix(".ctws-partial-")
            .tempdir_in(&parent)
            .map_err(runtime("creating staging directory"))?;
        Ok(Staging {
            tmp,
            dest: dest.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        self.tmp.path()
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.tmp.path().join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(runtime("creating artifact directory"))?;
        }
        fs::write(&path, bytes).map_err(runtime(&format!("writing {name}")))
    }

    pub fn commit(self) -> Result<PathBuf, CliError> {
        let tmp = self.tmp.keep();
        fs::rename(&tmp, &self.dest).map_err(|e| {
            let _ = fs::remove_dir_all(&tmp);
            CliError::Runtime(format!("moving results to {}: {e}", self.dest.display()))
        })?;
        Ok(self.dest)
    }
}

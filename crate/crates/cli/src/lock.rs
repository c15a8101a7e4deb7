//! Output-directory lock: one pipeline invocation per out dir.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::errors::StageError;

pub struct OutDirLock {
    path: PathBuf,
}

impl OutDirLock {
    /// Creates `.occumap.lock` in `out_dir`, failing if it exists.
    pub fn acquire(out_dir: &Path) -> Result<Self, StageError> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join(".occumap.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut file) => {
                let _ = writeln!(file, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(StageError::usage(format!(
                    "output directory is locked by another run (remove `{}` if stale)",
                    path.display()
                )))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutDirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

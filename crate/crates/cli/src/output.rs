use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::NamedTempFile;

/// Files written by one command. Each file is written to a temporary
/// sibling and renamed into place; unless [`Outputs::commit`] is called,
/// everything written so far is removed on drop.
pub struct Outputs {
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new() -> Self {
        Self {
            written: Vec::new(),
            committed: false,
        }
    }

    pub fn write<F>(&mut self, dest: &Path, produce: F) -> Result<()>
    where
        F: FnOnce(&Path) -> Result<()>,
    {
        let dir = dest.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
        produce(tmp.path()).with_context(|| format!("writing {}", dest.display()))?;
        tmp.persist(dest).with_context(|| format!("writing {}", dest.display()))?;
        self.written.push(dest.to_owned());
        Ok(())
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.written {
                let _ = std::fs::remove_file(path);
            }
        }
    }
}

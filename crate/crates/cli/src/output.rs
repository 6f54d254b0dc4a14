//! Outputs written under temporary names and moved into place only once a
//! command has succeeded. Anything still staged when dropped is deleted.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

#[derive(Debug, Default)]
pub struct Staged {
    pending: Vec<(PathBuf, PathBuf)>,
}

fn staging_name(dest: &Path) -> PathBuf {
    let name = dest.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    dest.with_file_name(format!(".{name}.partial-{}", std::process::id()))
}

fn remove(path: &Path) {
    let _ = if path.is_dir() {
        fs::remove_dir_all(path)
    } else {
        fs::remove_file(path)
    };
}

impl Staged {
    pub fn new() -> Self {
        Staged::default()
    }

    /// Temporary path to write instead of `dest`; parent directories are
    /// created as needed.
    pub fn path(&mut self, dest: &Path) -> Result<PathBuf> {
        if let Some(parent) = dest.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        let tmp = staging_name(dest);
        remove(&tmp);
        self.pending.push((tmp.clone(), dest.to_path_buf()));
        Ok(tmp)
    }

    /// Moves every staged output to its destination. A staged directory is
    /// merged into an existing destination entry by entry.
    pub fn commit(mut self) -> Result<()> {
        for (tmp, dest) in std::mem::take(&mut self.pending) {
            if tmp.is_dir() && dest.is_dir() {
                for entry in fs::read_dir(&tmp).with_context(|| format!("reading {}", tmp.display()))? {
                    let entry = entry?;
                    let target = dest.join(entry.file_name());
                    remove(&target);
                    fs::rename(entry.path(), &target).with_context(|| format!("moving into {}", target.display()))?;
                }
                remove(&tmp);
            } else {
                if dest.is_dir() {
                    remove(&dest);
                }
                fs::rename(&tmp, &dest).with_context(|| format!("moving {} into place", dest.display()))?;
            }
        }
        Ok(())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        for (tmp, _) in &self.pending {
            remove(tmp);
        }
    }
}

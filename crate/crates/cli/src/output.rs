//! Atomic output: files and directories are staged next to their final
//! location and renamed into place only once complete.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::failure::{CmdResult, Failure, ResultExt};
use crate::manifest::sha256_hex;

/// Refuses to clobber an existing path unless `force` is set.
pub fn ensure_free(path: &Path, force: bool) -> CmdResult<()> {
    if path.exists() && !force {
        return Err(Failure::usage(format!("'{}' already exists; pass --force to overwrite", path.display())));
    }
    Ok(())
}

fn sibling(path: &Path, tag: &str) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.{tag}-{}", std::process::id()))
}

/// Writes a set of files, all or nothing. Each is staged beside its target
/// and only renamed once every write has succeeded.
pub fn write_files_atomic(files: &[(&Path, &[u8])]) -> CmdResult<()> {
    let mut staged: Vec<(PathBuf, &Path)> = Vec::new();
    let result = (|| -> anyhow::Result<()> {
        for (path, bytes) in files {
            let tmp = sibling(path, "tmp");
            staged.push((tmp.clone(), path));
            fs::write(&tmp, bytes).with_context(|| format!("cannot write '{}'", path.display()))?;
        }
        for (tmp, path) in &staged {
            fs::rename(tmp, path).with_context(|| format!("cannot move output into '{}'", path.display()))?;
        }
        Ok(())
    })();
    if result.is_err() {
        for (tmp, _) in &staged {
            let _ = fs::remove_file(tmp);
        }
    }
    result.runtime()
}

/// An output directory under construction. Dropped without `commit`, it
/// removes everything written so far.
pub struct StagedDir {
    staging: PathBuf,
    target: PathBuf,
    digests: BTreeMap<String, String>,
    committed: bool,
}

impl StagedDir {
    pub fn new(target: &Path) -> CmdResult<Self> {
        let staging = sibling(target, "tmp");
        if staging.exists() {
            fs::remove_dir_all(&staging).ok();
        }
        fs::create_dir_all(&staging)
            .with_context(|| format!("cannot create output directory next to '{}'", target.display()))
            .runtime()?;
        Ok(Self { staging, target: target.to_path_buf(), digests: BTreeMap::new(), committed: false })
    }

    /// Writes `bytes` at a `/`-separated path relative to the directory.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> CmdResult<()> {
        let path = self.staging.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("cannot create '{rel}'")).runtime()?;
        }
        fs::write(&path, bytes).with_context(|| format!("cannot write '{rel}'")).runtime()?;
        self.digests.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn digests(&self) -> &BTreeMap<String, String> {
        &self.digests
    }

    /// Swaps the staged directory into place, replacing any existing one.
    pub fn commit(mut self) -> CmdResult<()> {
        let backup = sibling(&self.target, "old");
        let had_old = self.target.exists();
        if had_old {
            fs::rename(&self.target, &backup)
                .with_context(|| format!("cannot replace '{}'", self.target.display()))
                .runtime()?;
        }
        if let Err(e) = fs::rename(&self.staging, &self.target) {
            if had_old {
                let _ = fs::rename(&backup, &self.target);
            }
            return Err(Failure::runtime(
                anyhow::Error::new(e).context(format!("cannot move output into '{}'", self.target.display())),
            ));
        }
        self.committed = true;
        if had_old {
            let _ = if backup.is_dir() { fs::remove_dir_all(&backup) } else { fs::remove_file(&backup) };
        }
        Ok(())
    }
}

impl Drop for StagedDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

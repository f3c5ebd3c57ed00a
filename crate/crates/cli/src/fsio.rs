//! File reading and all-or-nothing file writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Reads a UTF-8 file.
pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Writes several files so that none appears until all have been written:
/// each goes to a temporary file next to its target and is renamed into
/// place at the end.
pub fn write_all_atomic(files: &[(PathBuf, String)]) -> CliResult<()> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, contents) in files {
        let dir = parent_dir(path);
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
        tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
        tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    }
    Ok(())
}

/// Writes one file atomically.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    write_all_atomic(&[(path.to_path_buf(), contents.to_string())])
}

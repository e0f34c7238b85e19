//! Small filesystem helpers shared by the file formats.

use std::fs;
use std::path::Path;

use crate::error::FormatError;

pub fn read_file(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(|e| FormatError::io(path, e))
}

/// Writes `bytes` to a dot-prefixed temp file in the destination directory,
/// then renames over `path`, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| {
            FormatError::io(
                path,
                std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"),
            )
        })?;
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| FormatError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| FormatError::io(path, e))
}

/// Creates the directory (and parents) if it does not already exist.
pub fn ensure_dir(path: &Path) -> Result<(), FormatError> {
    fs::create_dir_all(path).map_err(|e| FormatError::io(path, e))
}

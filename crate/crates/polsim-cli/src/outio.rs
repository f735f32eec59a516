//! Output plumbing: stdout-or-file emission with atomic file writes.

use crate::commands::CliError;
use std::fs;
use std::path::Path;

/// Writes through a sibling temp file and a rename, so a crashed or
/// rejected run never leaves a partial artifact at the final path.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!("{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, contents)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Validation(format!("cannot move output to {}: {e}", path.display())))
}

/// Sends an artifact to the output file, or stdout when none was named.
pub fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

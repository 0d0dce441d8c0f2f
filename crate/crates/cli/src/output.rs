//! Output-file helpers. Artifacts are written once, atomically: content
//! goes to a temporary sibling first and is renamed into place, so readers
//! never observe a half-written file.

use std::io::Write as _;
use std::path::Path;

/// Writes `content` to `dir/name` via a temporary file in the same
/// directory, creating `dir` if needed.
pub fn write_atomic(dir: &Path, name: &str, content: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, dir.join(name))
}

//! File formats: CSV tables, scene JSON and standalone HTML.

pub mod html;
pub mod scene;
pub mod tabular;

use std::io::Write;
use std::path::Path;

use crate::error::Result;

pub use html::{export_html, Template};
pub use scene::{build_scene, Provenance, Scene, SceneOptions, SCHEMA_VERSION};
pub use tabular::{load_csv, read_csv, write_csv, write_matrix_csv, CsvOptions};

/// Writes `bytes` to a temporary file beside `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

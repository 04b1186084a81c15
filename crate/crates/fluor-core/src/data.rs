//! Location of the bundled data tables (CMFs and standard illuminants).

use std::path::PathBuf;

/// Directory holding the bundled tables. `FLUOR_DATA_DIR` overrides the
/// crate-relative default.
pub fn data_dir() -> PathBuf {
    match std::env::var_os("FLUOR_DATA_DIR") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"),
    }
}

pub fn data_file(name: &str) -> PathBuf {
    data_dir().join(name)
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dichotomy::io::{canonical_json, MatrixJson};
use dichotomy::CMatrix;
use serde_json::Value;

use crate::failure::Failure;

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Failure::contract(format!("output path {} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Failure::contract(format!("cannot write {}: {e}", path.display()))
    })
}

/// Sends `contents` to `path`, or to stdout without one.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

pub fn json(value: &Value) -> String {
    canonical_json(value)
}

pub fn matrix(m: &CMatrix) -> Value {
    serde_json::to_value(MatrixJson::from_matrix(m)).expect("matrix JSON is serialisable")
}

/// `u.csv` → `u.residuals.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or_else(|| "output".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}"))
}

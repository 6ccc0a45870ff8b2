//! Atomic file output: content goes to a temporary sibling first and is
//! renamed into place only once fully written.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub struct Artifact {
    path: PathBuf,
    bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(path: impl Into<PathBuf>, bytes: Vec<u8>) -> Self {
        Self { path: path.into(), bytes }
    }
}

/// `report.csv` -> `report.json`.
pub fn sidecar_json(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = OsString::from(".");
    name.push(path.file_name().unwrap_or_default());
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display())))
}

/// Stages every artifact before renaming any, so a failure leaves no
/// partial set behind.
pub fn write_all(artifacts: &[Artifact]) -> io::Result<()> {
    for (i, a) in artifacts.iter().enumerate() {
        if artifacts[..i].iter().any(|b| b.path == a.path) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("two outputs would both be written to {}", a.path.display()),
            ));
        }
    }
    let mut staged = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let tmp = temp_sibling(&a.path);
        let written = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(&a.bytes)?;
            f.sync_all()
        });
        if let Err(e) = written {
            let _ = fs::remove_file(&tmp);
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(io::Error::new(e.kind(), format!("cannot write {}: {e}", a.path.display())));
        }
        staged.push((tmp, &a.path));
    }
    for (tmp, path) in &staged {
        fs::rename(tmp, path)
            .map_err(|e| io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

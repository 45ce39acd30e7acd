//! Result files. Every file is written as `<name>.partial` and renamed once
//! complete, so an interrupted or failed run never leaves an unmarked file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cavarray_core::dynamics::Trajectory;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "CAVARRAY_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "cavarray-out";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(Self {
            root,
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    /// Writes `bytes` to `name` through a `.partial` file and records its checksum.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = write_atomic(&self.root, name, bytes)?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileRecord {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, &to_json(value)?)
    }

    pub fn write_trajectory(&mut self, name: &str, traj: &Trajectory) -> Result<PathBuf> {
        self.write(name, &trajectory_csv(traj)?)
    }
}

fn write_atomic(root: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = root.join(name);
    let partial = root.join(format!("{name}.partial"));
    let mut f = fs::File::create(&partial).map_err(|e| CliError::io(&partial, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&partial, e))?;
    f.sync_all().map_err(|e| CliError::io(&partial, e))?;
    drop(f);
    fs::rename(&partial, &path).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Serialize(e.to_string())
}

/// One row per sample: `time` followed by every recorded column.
pub fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["time".to_string()];
    header.extend(traj.columns.iter().cloned());
    w.write_record(&header).map_err(csv_error)?;
    for (i, t) in traj.times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(traj.values.iter().map(|c| c[i].to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Serialize(e.to_string()))
}

/// Rows as `(header, records)` for small tables.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.write_record(r).map_err(csv_error)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Serialize(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorRecord {
    pub total_excitation: u32,
    pub photon_cap: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// The config with every default written out.
    pub config: String,
    pub dispersion: String,
    pub sector: Option<SectorRecord>,
    pub basis_dimension: Option<usize>,
    pub effective_dimension: Option<usize>,
    pub seedless: bool,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl Manifest {
    /// Recomputes every checksum against the files next to the manifest.
    pub fn verify(&self, root: &Path) -> Result<()> {
        for f in &self.files {
            let path = root.join(&f.name);
            let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            let sum = sha256_hex(&bytes);
            if sum != f.sha256 {
                return Err(CliError::field(
                    format!("manifest.files[{}]", f.name),
                    format!("checksum {sum} does not match recorded {}", f.sha256),
                ));
            }
        }
        Ok(())
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_NAME);
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_partial_and_records_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("a.txt", b"abc").unwrap();
        assert!(!dir.path().join("a.txt.partial").exists());
        assert_eq!(fs::read(dir.path().join("a.txt")).unwrap(), b"abc");
        assert_eq!(
            out.files()[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        out.write("a.txt", b"abcd").unwrap();
        assert_eq!(out.files().len(), 1);
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("x.csv", b"time\n0\n").unwrap();
        let m = Manifest {
            command: "test".into(),
            version: "0".into(),
            config: String::new(),
            dispersion: "cosine-of-sum".into(),
            sector: None,
            basis_dimension: None,
            effective_dimension: None,
            seedless: true,
            wall_clock_seconds: 0.0,
            files: out.files().to_vec(),
        };
        m.verify(dir.path()).unwrap();
        fs::write(dir.path().join("x.csv"), b"time\n1\n").unwrap();
        assert!(m.verify(dir.path()).is_err());
    }

    #[test]
    fn table_has_header() {
        let bytes = table_csv(&["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n1,2\n");
    }
}

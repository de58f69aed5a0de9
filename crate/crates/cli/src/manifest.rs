//! Run manifest: config echo, timing, validity horizon and checksummed
//! artifact listing.

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub struct ManifestEntry {
    pub rel_path: String,
    pub sha256: String,
}

pub struct RunManifest {
    pub version: String,
    pub start_unix: u64,
    pub end_unix: u64,
    pub t_valid: f64,
    pub t_end_effective: f64,
    pub weighted_data_norm: f64,
    pub abort: Option<String>,
    pub config_echo: String,
    pub artifacts: Vec<ManifestEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex::encode(hasher.finalize()))
}

impl RunManifest {
    pub fn add_artifact(&mut self, run_dir: &Path, rel_path: &str) -> Result<()> {
        let sha = sha256_file(&run_dir.join(rel_path))?;
        self.artifacts.push(ManifestEntry {
            rel_path: rel_path.to_string(),
            sha256: sha,
        });
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dirac2d run manifest");
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "start_unix = {}", self.start_unix);
        let _ = writeln!(s, "end_unix = {}", self.end_unix);
        let _ = writeln!(s, "t_valid = {:.16e}", self.t_valid);
        let _ = writeln!(s, "t_end_effective = {:.16e}", self.t_end_effective);
        let _ = writeln!(s, "weighted_data_norm = {:.16e}", self.weighted_data_norm);
        if let Some(reason) = &self.abort {
            let _ = writeln!(s, "abort = {reason}");
        }
        let _ = writeln!(s, "[config]");
        for line in self.config_echo.lines() {
            let _ = writeln!(s, "  {line}");
        }
        let _ = writeln!(s, "[artifacts]");
        for a in &self.artifacts {
            let _ = writeln!(s, "artifact = {} sha256:{}", a.rel_path, a.sha256);
        }
        s
    }

    pub fn write(&self, run_dir: &Path) -> Result<PathBuf> {
        let path = run_dir.join("manifest.txt");
        std::fs::write(&path, self.render())?;
        Ok(path)
    }
}

/// Re-read a manifest and verify that every listed artifact exists and
/// matches its checksum.
pub fn verify_manifest(run_dir: &Path) -> Result<usize> {
    let text = std::fs::read_to_string(run_dir.join("manifest.txt"))?;
    let mut checked = 0;
    for line in text.lines() {
        let Some(rest) = line.strip_prefix("artifact = ") else {
            continue;
        };
        let Some((rel, sha)) = rest.rsplit_once(" sha256:") else {
            bail!("malformed artifact line: {line}");
        };
        let actual = sha256_file(&run_dir.join(rel))?;
        if actual != sha {
            bail!("checksum mismatch for {rel}: manifest {sha}, file {actual}");
        }
        checked += 1;
    }
    Ok(checked)
}

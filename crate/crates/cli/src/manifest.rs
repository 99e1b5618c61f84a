use gamedyn::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// Written next to the outputs of every command as `<command>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputFile>,
    pub summary: serde_json::Value,
    pub wall_clock_seconds: f64,
}

/// Collects output files for one command run.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    /// Writes `name` through `fill` and records its checksum.
    pub fn write(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.dir.join(name);
        std::fs::write(&path, &buf)?;
        self.files.push(OutputFile { path, sha256: hex::encode(Sha256::digest(&buf)) });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value).map_err(|e| gamedyn::Error::Io(e.to_string()))?;
            buf.push(b'\n');
            Ok(())
        })
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<PathBuf> {
        manifest.outputs = self.files;
        let path = self.dir.join(format!("{}.manifest.json", manifest.command));
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| gamedyn::Error::Io(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

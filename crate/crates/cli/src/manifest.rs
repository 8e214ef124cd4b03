use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use hill4bp::integrate::Tolerances;

/// Everything a command produced, before it is written to disk.
#[derive(Debug, Default)]
pub struct Outputs {
    /// `(file name, contents)` pairs relative to the output directory.
    pub files: Vec<(String, String)>,
    pub warnings: Vec<String>,
    /// Short result printed on stdout.
    pub summary: Value,
}

impl Outputs {
    pub fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn json(&mut self, name: impl Into<String>, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.file(name, text);
        Ok(())
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub tolerances: Tolerances,
    pub code_version: String,
    pub parallel: bool,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

/// Writes the outputs and the manifest; returns the manifest path.
pub fn write(dir: &Path, manifest: &RunManifest, outputs: &Outputs) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, contents) in &outputs.files {
        let p = dir.join(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
    }
    let path = dir.join(format!("{}.manifest.json", manifest.command));
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

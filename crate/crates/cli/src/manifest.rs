use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use cfx_core::config::ExperimentConfig;

use crate::failure::{Failure, Outcome};
use crate::settings::write_file;

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub kind: String,
    pub path: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

/// Record of one command: what ran, with which settings, and what it wrote.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub artifacts: Vec<Artifact>,
    pub timings: Vec<Timing>,
    #[serde(skip)]
    clock: Option<(String, Instant)>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        RunManifest {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            artifacts: Vec::new(),
            timings: Vec::new(),
            clock: None,
        }
    }

    pub fn start(&mut self, stage: &str) {
        self.stop();
        self.clock = Some((stage.into(), Instant::now()));
    }

    pub fn stop(&mut self) {
        if let Some((stage, t)) = self.clock.take() {
            self.timings.push(Timing {
                stage,
                seconds: t.elapsed().as_secs_f64(),
            });
        }
    }

    pub fn artifact(&mut self, kind: &str, path: &Path) {
        self.artifacts.push(Artifact {
            kind: kind.into(),
            path: path.to_path_buf(),
        });
    }

    /// Writes the manifest after checking that every listed artifact exists.
    pub fn write(mut self, path: &Path) -> Outcome {
        self.stop();
        if let Some(missing) = self.artifacts.iter().find(|a| !a.path.exists()) {
            return Err(Failure::runtime(format!(
                "manifest lists {} which was not written",
                missing.path.display()
            )));
        }
        let mut json = serde_json::to_string_pretty(&self).map_err(|e| Failure::runtime(e.to_string()))?;
        json.push('\n');
        write_file(path, json.as_bytes())
    }
}

//! Reading experiment files and resolving where artifacts go.

use std::fs;
use std::path::{Path, PathBuf};

use cfx_core::config::ExperimentConfig;

use crate::args::RunArgs;
use crate::failure::{Failure, Outcome};

/// A parsed config plus the directory its relative paths are anchored to.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub out_root: PathBuf,
}

impl Loaded {
    /// Per-dataset artifact directory.
    pub fn dataset_dir(&self) -> PathBuf {
        self.out_root.join(self.config.dataset.id())
    }

    pub fn cloud_model_path(&self) -> PathBuf {
        match &self.config.cloud.model_path {
            Some(p) => self.base_dir.join(p),
            None => self.dataset_dir().join("cloud").join("model.json"),
        }
    }
}

/// Parses TOML, naming the dotted path of any field that fails to deserialize.
pub fn parse(text: &str) -> Outcome<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Failure::Config(e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().message().to_owned();
        if path == "." {
            Failure::Config(inner)
        } else {
            Failure::Config(format!("{path}: {inner}"))
        }
    })
}

pub fn load(args: &RunArgs) -> Outcome<Loaded> {
    let text =
        fs::read_to_string(&args.config).map_err(|e| Failure::Config(format!("{}: {e}", args.config.display())))?;
    let config = parse(&text).map_err(|f| match f {
        Failure::Config(m) => Failure::Config(format!("{}: {m}", args.config.display())),
        other => other,
    })?;
    config.validate()?;
    let base_dir = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out_root = match (&args.out_dir, &config.output.dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => base_dir.join(d),
        (None, None) => PathBuf::from("cfx-out"),
    };
    Ok(Loaded {
        config,
        base_dir,
        out_root,
    })
}

pub fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("{}: {e}", dir.display())))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(path, bytes).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

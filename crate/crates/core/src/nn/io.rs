//! Versioned JSON model files.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so
//! save → load reproduces every weight bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Layer, MlpModel};
use crate::{Error, Result};

pub const FORMAT_NAME: &str = "cfx-mlp";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    input_dim: usize,
    layers: Vec<Layer>,
}

pub fn write_model<W: Write>(model: &MlpModel, mut w: W) -> Result<()> {
    let file = ModelFile {
        format: FORMAT_NAME.to_owned(),
        version: FORMAT_VERSION,
        input_dim: model.input_dim(),
        layers: model.layers().to_vec(),
    };
    serde_json::to_writer_pretty(&mut w, &file).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::Format(e.to_string()))
}

pub fn read_model<R: Read>(r: R) -> Result<MlpModel> {
    let file: ModelFile = serde_json::from_reader(r).map_err(|e| Error::Format(e.to_string()))?;
    if file.format != FORMAT_NAME {
        return Err(Error::Format(format!("unknown format `{}`", file.format)));
    }
    if file.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {} (expected {FORMAT_VERSION})",
            file.version
        )));
    }
    let model = MlpModel::from_layers(file.layers)?;
    if model.input_dim() != file.input_dim {
        return Err(Error::Format("input_dim does not match first layer".into()));
    }
    Ok(model)
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_model(model, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(std::io::BufReader::new(f))
}

//! Versioned on-disk model format: one JSON document with explicit arrays,
//! readable without the configuration that produced it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ArnModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct ModelFileRef<'a> {
    format_version: u32,
    model: &'a ArnModel,
}

#[derive(Deserialize)]
struct ModelFileOwned {
    model: ArnModel,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

pub fn to_model_json(model: &ArnModel) -> String {
    let mut text = serde_json::to_string(&ModelFileRef {
        format_version: FORMAT_VERSION,
        model,
    })
    .expect("model serialization cannot fail");
    text.push('\n');
    text
}

pub fn from_model_json(text: &str) -> Result<ArnModel> {
    let probe: VersionProbe = serde_json::from_str(text)
        .map_err(|e| Error::ModelFormat(format!("not a model file: {e}")))?;
    if probe.format_version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "format version {} is not supported (expected {})",
            probe.format_version, FORMAT_VERSION
        )));
    }
    let file: ModelFileOwned = serde_json::from_str(text)
        .map_err(|e| Error::ModelFormat(format!("malformed model file: {e}")))?;
    file.model.validate()?;
    Ok(file.model)
}

pub fn save_model(model: &ArnModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_model_json(model)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ArnModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_model_json(&text)
}

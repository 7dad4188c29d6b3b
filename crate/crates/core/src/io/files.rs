use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ClassifierModel;
use crate::tables::{JointTable, Schema};

pub const FORMAT_VERSION: u32 = 1;

/// How a model was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub alpha: f64,
    /// Edge-weight scheme or learning mode, human readable.
    pub scheme: String,
    pub seed: Option<u64>,
    /// Pseudo-random generator used for any sampling.
    pub generator: String,
    pub tool_version: String,
    pub prune_eps: Option<f64>,
}

impl Provenance {
    pub fn new(alpha: f64, scheme: impl Into<String>) -> Self {
        Provenance {
            alpha,
            scheme: scheme.into(),
            seed: None,
            generator: super::GENERATOR.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            prune_eps: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub schema: Schema,
    pub model: ClassifierModel,
    pub provenance: Provenance,
}

impl ModelFile {
    pub fn new(schema: Schema, model: ClassifierModel, provenance: Provenance) -> Self {
        ModelFile { format_version: FORMAT_VERSION, schema, model, provenance }
    }
}

/// Pretty JSON with keys sorted at every level and shortest round-trip
/// decimals.
pub fn model_to_text(file: &ModelFile) -> Result<String> {
    let value = serde_json::to_value(file)?;
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_text(text: &str) -> Result<ModelFile> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let version = value.get("format_version").and_then(serde_json::Value::as_u64);
    match version {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => return Err(Error::Version(v as u32)),
        None => return Err(Error::Malformed("missing format_version".into())),
    }
    let file: ModelFile = serde_json::from_str(text)?;
    file.model.validate(&file.schema)?;
    Ok(file)
}

/// Writes to a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut BufWriter<&File>) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<()> {
    let text = model_to_text(file)?;
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    model_from_text(&std::fs::read_to_string(path)?)
}

/// A dense reference distribution on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointFile {
    pub schema: Schema,
    /// Row-major over the schema, first variable slowest.
    pub probs: Vec<f64>,
}

pub fn save_joint(path: &Path, table: &JointTable) -> Result<()> {
    let file = JointFile { schema: table.schema().clone(), probs: table.probs().to_vec() };
    let mut text = serde_json::to_string_pretty(&serde_json::to_value(&file)?)?;
    text.push('\n');
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

pub fn load_joint(path: &Path) -> Result<JointTable> {
    let file: JointFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    JointTable::new(file.schema, file.probs)
}

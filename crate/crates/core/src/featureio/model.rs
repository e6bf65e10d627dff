//! Versioned JSON model files.
//!
//! Layout: one JSON object holding `schema_version`, `kind`, and the model's
//! own fields at the top level.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// A model that can be stored with [`save_model`].
pub trait Persist: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

pub fn model_to_string<M: Persist>(model: &M) -> Result<String> {
    let mut value = serde_json::to_value(model).map_err(|e| Error::Model(e.to_string()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Model("model must serialize to an object".into()))?;
    obj.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    obj.insert("kind".into(), Value::from(M::KIND));
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::Model(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn model_from_str<M: Persist>(text: &str) -> Result<M> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Model("model file must hold a JSON object".into()))?;
    let version = obj
        .remove("schema_version")
        .ok_or_else(|| Error::Model("missing field `schema_version`".into()))?;
    let version = version
        .as_u64()
        .ok_or_else(|| Error::Model(format!("schema_version must be an integer, got {version}")))?;
    if version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion { found: version, expected: SCHEMA_VERSION });
    }
    match obj.remove("kind") {
        Some(Value::String(kind)) if kind == M::KIND => {}
        Some(other) => {
            return Err(Error::Model(format!("expected a `{}` model, found {other}", M::KIND)))
        }
        None => return Err(Error::Model("missing field `kind`".into())),
    }
    serde_json::from_value(value).map_err(|e| Error::Model(e.to_string()))
}

pub fn save_model<M: Persist>(model: &M, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = model_to_string(model)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model<M: Persist>(path: impl AsRef<Path>) -> Result<M> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text).map_err(|e| match e {
        Error::Model(msg) => Error::Model(format!("{}: {msg}", path.display())),
        other => other,
    })
}

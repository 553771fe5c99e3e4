//! Native network document: TOML with a format tag, a version, the per-unit base and
//! `[[bus]]` / `[[branch]]` tables. Output is deterministic (ids ascending, fixed
//! field order) so emitted files diff cleanly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Branch, Bus, GridError, Network};

pub const FORMAT_TAG: &str = "gridheal-network";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NativeError {
    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl NativeError {
    pub fn code(&self) -> &'static str {
        match self {
            NativeError::SchemaViolation { .. } => "SchemaViolation",
            NativeError::Grid(GridError::NoSlack) => "NoSlackBus",
            NativeError::Grid(e) => e.code(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    base_mva: f64,
    #[serde(default, rename = "bus")]
    buses: Vec<Bus>,
    #[serde(default, rename = "branch")]
    branches: Vec<Branch>,
}

pub fn parse_native(text: &str) -> Result<Network, NativeError> {
    let de = toml::Deserializer::parse(text).map_err(|e| NativeError::SchemaViolation {
        path: ".".into(),
        message: e.message().to_string(),
    })?;
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| NativeError::SchemaViolation {
        path: e.path().to_string(),
        message: e.inner().message().to_string(),
    })?;
    if doc.format != FORMAT_TAG {
        return Err(NativeError::SchemaViolation {
            path: "format".into(),
            message: format!("expected {FORMAT_TAG:?}, found {:?}", doc.format),
        });
    }
    if doc.version != FORMAT_VERSION {
        return Err(NativeError::SchemaViolation {
            path: "version".into(),
            message: format!("unsupported version {}", doc.version),
        });
    }
    Ok(Network::new(doc.buses, doc.branches, doc.base_mva)?)
}

pub fn emit_native(net: &Network) -> String {
    let doc = Document {
        format: FORMAT_TAG.into(),
        version: FORMAT_VERSION,
        base_mva: net.base_mva(),
        buses: net.buses().to_vec(),
        branches: net.branches().to_vec(),
    };
    toml::to_string(&doc).expect("network documents always serialize")
}

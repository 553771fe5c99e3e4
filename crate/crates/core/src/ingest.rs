//! Network loading from text in either supported format.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdf::{parse_cdf, CdfError};
use crate::grid::Network;
use crate::native::{parse_native, NativeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkFormat {
    Cdf,
    Native,
}

impl FromStr for NetworkFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cdf" => Ok(NetworkFormat::Cdf),
            "native" => Ok(NetworkFormat::Native),
            other => Err(format!("unknown network format {other:?}")),
        }
    }
}

impl NetworkFormat {
    /// CDF files announce their bus section; anything else is taken as native.
    pub fn sniff(text: &str) -> Self {
        if text.contains("BUS DATA FOLLOWS") {
            NetworkFormat::Cdf
        } else {
            NetworkFormat::Native
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error(transparent)]
    Cdf(#[from] CdfError),
    #[error(transparent)]
    Native(#[from] NativeError),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Cdf(e) => e.code(),
            IngestError::Native(e) => e.code(),
        }
    }
}

pub fn parse_network(text: &str, format: Option<NetworkFormat>) -> Result<Network, IngestError> {
    match format.unwrap_or_else(|| NetworkFormat::sniff(text)) {
        NetworkFormat::Cdf => Ok(parse_cdf(text)?),
        NetworkFormat::Native => Ok(parse_native(text)?),
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::optimize::PredictedBounds;

use super::{PlantModelGraph, TrainReport};

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing bundle: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("bundle schema version {0} not supported (expected {BUNDLE_SCHEMA_VERSION})")]
    Version(u32),
}

/// Trained graph plus what the optimizer needs to use it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub schema_version: u32,
    pub graph: PlantModelGraph,
    /// Admissible ranges for the predicted header flows and temperature.
    pub bounds: PredictedBounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<TrainReport>,
}

impl ModelBundle {
    pub fn new(graph: PlantModelGraph, bounds: PredictedBounds, report: Option<TrainReport>) -> Self {
        Self { schema_version: BUNDLE_SCHEMA_VERSION, graph, bounds, report }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        let b: ModelBundle = serde_json::from_str(text)?;
        if b.schema_version != BUNDLE_SCHEMA_VERSION {
            return Err(BundleError::Version(b.schema_version));
        }
        Ok(b)
    }

    pub fn save(&self, path: &Path) -> Result<(), BundleError> {
        std::fs::write(path, self.to_json()).map_err(|source| BundleError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, BundleError> {
        let text = std::fs::read_to_string(path).map_err(|source| BundleError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}

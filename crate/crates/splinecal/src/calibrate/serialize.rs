//! Versioned JSON persistence for fitted calibrators.
//!
//! The file is a single JSON object carrying `schema_version`, a `kind` tag
//! (`spline`, `platt`, `isotonic`, `clipping`, `multiclass`), and the
//! calibrator's parameters at full precision. Floats round-trip exactly, so
//! a reloaded calibrator predicts bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Calibrator;
use crate::error::{CalibError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CalibratorFile {
    schema_version: u32,
    #[serde(flatten)]
    calibrator: Calibrator,
}

/// Serialize to pretty JSON at `path`.
pub fn save_calibrator(cal: &Calibrator, path: impl AsRef<Path>) -> Result<()> {
    let file = CalibratorFile {
        schema_version: SCHEMA_VERSION,
        calibrator: cal.clone(),
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| CalibError::CorruptFile {
        reason: e.to_string(),
    })?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Load, checking the schema version before anything else and validating
/// structural invariants after parsing.
pub fn load_calibrator(path: impl AsRef<Path>) -> Result<Calibrator> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CalibError::FileNotFound {
                path: path.to_path_buf(),
            }
        } else {
            CalibError::Io(e)
        }
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&raw).map_err(|e| CalibError::CorruptFile {
            reason: e.to_string(),
        })?;
    let found = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| CalibError::CorruptFile {
            reason: "missing schema_version".to_string(),
        })? as u32;
    if found != SCHEMA_VERSION {
        return Err(CalibError::SchemaVersionMismatch {
            found,
            supported: SCHEMA_VERSION,
        });
    }
    let file: CalibratorFile =
        serde_json::from_value(value).map_err(|e| CalibError::CorruptFile {
            reason: e.to_string(),
        })?;
    file.calibrator.validate()?;
    Ok(file.calibrator)
}

//! Reading and writing instances, scenarios, solutions and reports.
//!
//! Instances travel either as one JSON [`InstanceDocument`] or as a bundle of
//! CSV files, one per parameter. Every loader validates the instance before
//! returning it; the `*_unchecked` variants exist for tools that want to
//! report violations themselves.

mod csv_bundle;
mod json;
mod store;

use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::instance::ValidationReport;

pub use csv_bundle::{
    parse_csv_bundle, parse_csv_bundle_unchecked, read_csv_bundle, read_csv_bundle_unchecked, render_csv_bundle,
    write_csv_bundle, CSV_FILES,
};
pub use json::{
    parse_instance_document, parse_instance_document_unchecked, render_instance_document, DocumentMetadata,
    InstanceDocument, INSTANCE_SCHEMA_VERSION,
};
pub use store::{ScenarioStore, StoreError, StoredScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFormat {
    Json,
    CsvBundle,
}

/// Where in an input a problem was found. Rows and columns are 1-based and
/// count the CSV header as row 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Location {
    pub file: Option<String>,
    pub row: Option<usize>,
    pub column: Option<usize>,
    /// JSON path such as `X_triples[3].slot`.
    pub path: Option<String>,
}

impl Location {
    pub fn cell(file: &str, row: usize, column: usize) -> Self {
        Self {
            file: Some(file.to_string()),
            row: Some(row),
            column: Some(column),
            path: None,
        }
    }

    pub fn row(file: &str, row: usize) -> Self {
        Self {
            file: Some(file.to_string()),
            row: Some(row),
            ..Self::default()
        }
    }

    pub fn file(file: &str) -> Self {
        Self {
            file: Some(file.to_string()),
            ..Self::default()
        }
    }

    pub fn path(path: impl Into<String>) -> Self {
        Self {
            path: Some(path.into()),
            ..Self::default()
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(file) = &self.file {
            parts.push(file.clone());
        }
        if let Some(path) = &self.path {
            parts.push(path.clone());
        }
        if let Some(row) = self.row {
            parts.push(format!("row {row}"));
        }
        if let Some(column) = self.column {
            parts.push(format!("column {column}"));
        }
        if parts.is_empty() {
            f.write_str("input")
        } else {
            f.write_str(&parts.join(", "))
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{location}: {message}")]
    Parse { location: Location, message: String },
    #[error("unsupported schema_version {found} (supported: {supported})")]
    UnsupportedSchema { found: u64, supported: u32 },
    #[error("missing required files: {}", .0.join(", "))]
    MissingFiles(Vec<String>),
    #[error("instance fails validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IoError {
    pub(crate) fn at(location: Location, message: impl Into<String>) -> Self {
        IoError::Parse {
            location,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(file: Option<&str>, e: &serde_json::Error) -> Self {
        IoError::Parse {
            location: Location {
                file: file.map(str::to_string),
                row: Some(e.line()),
                column: Some(e.column()),
                path: None,
            },
            message: e.to_string(),
        }
    }
}

/// Pretty JSON with a trailing newline, for scenarios, solutions and reports.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes to JSON");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::json(None, &e))
}

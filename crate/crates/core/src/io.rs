//! Problem files and machine-readable result records.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::census::CensusEntry;
use crate::geometry::{rotation_orbit_dimension, MassSystem};

/// Mass sums further than this from one are rescaled with a warning.
pub const MASS_SUM_WARN: f64 = 1e-9;

/// Input file: `{n, d, alpha, masses, coordinates?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpecFile {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub masses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<Vec<f64>>>,
}

/// A rejected input, naming the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid `{field}`: {message}")]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl ValidationError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

/// A validated problem: the normalized mass system and optional points.
#[derive(Debug, Clone)]
pub struct Problem {
    pub system: Arc<MassSystem>,
    pub coordinates: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<String>,
}

impl ProblemSpecFile {
    pub fn from_json(text: &str) -> Result<Self, ValidationError> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            // serde_json names missing or unknown fields in backticks
            let field = msg.split('`').nth(1).unwrap_or("spec").to_string();
            ValidationError::new(field, msg)
        })
    }

    pub fn load(path: &Path) -> Result<Self, ValidationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ValidationError::new("spec", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<Problem, ValidationError> {
        if self.n < 2 {
            return Err(ValidationError::new("n", format!("need at least 2 bodies, got {}", self.n)));
        }
        if self.d < 1 {
            return Err(ValidationError::new("d", "dimension must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ValidationError::new("alpha", format!("must be > 0, got {}", self.alpha)));
        }
        if self.masses.len() != self.n {
            return Err(ValidationError::new(
                "masses",
                format!("expected {} entries, got {}", self.n, self.masses.len()),
            ));
        }
        if let Some((j, m)) = self.masses.iter().enumerate().find(|(_, m)| !(**m > 0.0 && m.is_finite())) {
            return Err(ValidationError::new(format!("masses[{j}]"), format!("must be > 0, got {m}")));
        }
        if let Some(rows) = &self.coordinates {
            if rows.len() != self.n {
                return Err(ValidationError::new(
                    "coordinates",
                    format!("expected {} points, got {}", self.n, rows.len()),
                ));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != self.d {
                    return Err(ValidationError::new(
                        format!("coordinates[{i}]"),
                        format!("expected {} components, got {}", self.d, row.len()),
                    ));
                }
                if row.iter().any(|x| !x.is_finite()) {
                    return Err(ValidationError::new(format!("coordinates[{i}]"), "non-finite component"));
                }
            }
        }
        let mut warnings = Vec::new();
        let total: f64 = self.masses.iter().sum();
        if (total - 1.0).abs() > MASS_SUM_WARN {
            warnings.push(format!("masses sum to {total}; rescaled to 1"));
        }
        let system = MassSystem::normalized(self.masses.clone(), self.d, self.alpha)
            .map_err(|e| ValidationError::new("masses", e.to_string()))?;
        Ok(Problem { system: Arc::new(system), coordinates: self.coordinates.clone(), warnings })
    }
}

/// One census class as emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusRecord {
    pub class_id: usize,
    pub distance_vector: Vec<f64>,
    pub chirality: i8,
    pub potential: f64,
    pub lambda: f64,
    pub morse_index: usize,
    pub kernel_dim: usize,
    pub orbit_dim: usize,
    pub fixed_point_index: Option<i32>,
    pub nondegenerate: bool,
    pub theorem_verified: bool,
    pub representative_coordinates: Vec<Vec<f64>>,
}

impl From<&CensusEntry> for CensusRecord {
    fn from(e: &CensusEntry) -> Self {
        let spectrum = e.analysis.spectrum.as_ref();
        Self {
            class_id: e.class_id,
            distance_vector: e.key.distance_vector.clone(),
            chirality: e.key.chirality,
            potential: e.potential,
            lambda: e.lambda,
            morse_index: spectrum.map_or(0, |s| s.morse_index),
            kernel_dim: spectrum.map_or(0, |s| s.kernel_dim),
            orbit_dim: spectrum.map_or_else(|| rotation_orbit_dimension(&e.representative.q), |s| s.orbit_dim),
            fixed_point_index: e.analysis.index_by_determinant,
            nondegenerate: e.analysis.nondegenerate(),
            theorem_verified: e.analysis.verified(),
            representative_coordinates: e.representative.q.points(),
        }
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "class_id",
    "distance_vector",
    "chirality",
    "potential",
    "lambda",
    "morse_index",
    "kernel_dim",
    "orbit_dim",
    "fixed_point_index",
    "nondegenerate",
    "theorem_verified",
    "representative_coordinates",
];

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn split_floats(s: &str) -> Result<Vec<f64>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|x| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect()
}

impl CensusRecord {
    /// CSV fields in header order. Vectors are `;`-separated, coordinate rows
    /// `|`-separated, and a missing index is an empty field.
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.class_id.to_string(),
            join_floats(&self.distance_vector),
            self.chirality.to_string(),
            self.potential.to_string(),
            self.lambda.to_string(),
            self.morse_index.to_string(),
            self.kernel_dim.to_string(),
            self.orbit_dim.to_string(),
            self.fixed_point_index.map(|i| i.to_string()).unwrap_or_default(),
            self.nondegenerate.to_string(),
            self.theorem_verified.to_string(),
            self.representative_coordinates.iter().map(|p| join_floats(p)).collect::<Vec<_>>().join("|"),
        ]
    }

    pub fn from_csv_fields(fields: &[&str]) -> Result<Self, String> {
        if fields.len() != CSV_HEADER.len() {
            return Err(format!("expected {} fields, got {}", CSV_HEADER.len(), fields.len()));
        }
        fn parse<T: std::str::FromStr>(s: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            s.parse::<T>().map_err(|e| format!("{s:?}: {e}"))
        }
        Ok(Self {
            class_id: parse(fields[0])?,
            distance_vector: split_floats(fields[1])?,
            chirality: parse(fields[2])?,
            potential: parse(fields[3])?,
            lambda: parse(fields[4])?,
            morse_index: parse(fields[5])?,
            kernel_dim: parse(fields[6])?,
            orbit_dim: parse(fields[7])?,
            fixed_point_index: if fields[8].is_empty() { None } else { Some(parse(fields[8])?) },
            nondegenerate: parse(fields[9])?,
            theorem_verified: parse(fields[10])?,
            representative_coordinates: if fields[11].is_empty() {
                Vec::new()
            } else {
                fields[11].split('|').map(split_floats).collect::<Result<_, _>>()?
            },
        })
    }
}

pub fn records_to_json(records: &[CensusRecord]) -> String {
    serde_json::to_string_pretty(records).expect("records serialize")
}

pub fn records_to_csv(records: &[CensusRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        w.write_record(r.csv_fields()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn records_from_csv(text: &str) -> Result<Vec<CensusRecord>, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(format!("unexpected header {header:?}"));
    }
    reader
        .records()
        .map(|row| {
            let row = row.map_err(|e| e.to_string())?;
            let fields: Vec<&str> = row.iter().collect();
            CensusRecord::from_csv_fields(&fields)
        })
        .collect()
}

/// Key/value table used for the CSV form of single reports.
pub fn key_values_to_csv(rows: &[(String, String)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["quantity", "value"]).expect("in-memory write");
    for (k, v) in rows {
        w.write_record([k, v]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

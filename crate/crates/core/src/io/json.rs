//! The canonical JSON instance document.
//!
//! Entities are referenced by id everywhere. `W` is faculty by slot, `alpha`
//! and `C` are course by faculty, `M` is course by slot, all row-major. The
//! obsolete schedule is a sparse list of `(course, faculty, slot)` triples.

use std::collections::HashMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{IoError, Location};
use crate::grid::{Array3, Matrix};
use crate::instance::{ConflictPair, Course, FacultyMember, Instance, TimeSlot};

pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DocumentMetadata {
    pub name: String,
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub created: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDocument {
    pub schema_version: u32,
    pub instance: Instance,
    pub metadata: DocumentMetadata,
}

impl InstanceDocument {
    pub fn new(instance: Instance, metadata: DocumentMetadata) -> Self {
        Self {
            schema_version: INSTANCE_SCHEMA_VERSION,
            instance,
            metadata,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ConflictRef {
    slot_a: String,
    slot_b: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Triple {
    course: String,
    faculty: String,
    slot: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawDocument {
    schema_version: u32,
    courses: Vec<Course>,
    faculty: Vec<FacultyMember>,
    slots: Vec<TimeSlot>,
    #[serde(default)]
    conflicts: Vec<ConflictRef>,
    W: Matrix<f64>,
    alpha: Matrix<f64>,
    C: Matrix<u8>,
    M: Matrix<u32>,
    #[serde(default)]
    X_triples: Vec<Triple>,
    #[serde(default)]
    metadata: DocumentMetadata,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<serde_json::Value>,
}

fn index_of<'a>(ids: impl Iterator<Item = &'a str>) -> HashMap<&'a str, usize> {
    let mut map = HashMap::new();
    for (k, id) in ids.enumerate() {
        map.entry(id).or_insert(k);
    }
    map
}

fn lookup(map: &HashMap<&str, usize>, id: &str, what: &str, path: String) -> Result<usize, IoError> {
    map.get(id)
        .copied()
        .ok_or_else(|| IoError::at(Location::path(path), format!("unknown {what} id {id:?}")))
}

fn from_raw(raw: RawDocument) -> Result<InstanceDocument, IoError> {
    let courses = index_of(raw.courses.iter().map(|c| c.id.as_str()));
    let faculty = index_of(raw.faculty.iter().map(|f| f.id.as_str()));
    let slots = index_of(raw.slots.iter().map(|s| s.id.as_str()));

    let mut conflicts = Vec::with_capacity(raw.conflicts.len());
    for (k, c) in raw.conflicts.iter().enumerate() {
        let a = lookup(&slots, &c.slot_a, "slot", format!("conflicts[{k}].slot_a"))?;
        let b = lookup(&slots, &c.slot_b, "slot", format!("conflicts[{k}].slot_b"))?;
        // A self pair is kept as is so validation reports it.
        conflicts.push(ConflictPair::new(a, b).unwrap_or(ConflictPair { slot_a: a, slot_b: b }));
    }

    let mut eligibility = Matrix::filled(raw.C.rows(), raw.C.cols(), false);
    for (i, j, &v) in raw.C.iter() {
        match v {
            0 => {}
            1 => eligibility.set(i, j, true),
            _ => {
                return Err(IoError::at(
                    Location::path(format!("C[{i}][{j}]")),
                    format!("expected 0 or 1, found {v}"),
                ))
            }
        }
    }

    let mut x = Array3::filled(raw.courses.len(), raw.faculty.len(), raw.slots.len(), false);
    for (k, tr) in raw.X_triples.iter().enumerate() {
        let i = lookup(&courses, &tr.course, "course", format!("X_triples[{k}].course"))?;
        let j = lookup(&faculty, &tr.faculty, "faculty", format!("X_triples[{k}].faculty"))?;
        let t = lookup(&slots, &tr.slot, "slot", format!("X_triples[{k}].slot"))?;
        if *x.get(i, j, t) {
            return Err(IoError::at(
                Location::path(format!("X_triples[{k}]")),
                format!("duplicated triple ({}, {}, {})", tr.course, tr.faculty, tr.slot),
            ));
        }
        x.set(i, j, t, true);
    }

    Ok(InstanceDocument {
        schema_version: raw.schema_version,
        metadata: raw.metadata,
        instance: Instance {
            courses: raw.courses,
            faculty: raw.faculty,
            slots: raw.slots,
            conflicts,
            obsolete_schedule: x,
            preferences: raw.W,
            swap_penalties: raw.alpha,
            demand: raw.M,
            eligibility,
        },
    })
}

fn to_raw(doc: &InstanceDocument) -> RawDocument {
    let inst = &doc.instance;
    RawDocument {
        schema_version: doc.schema_version,
        courses: inst.courses.clone(),
        faculty: inst.faculty.clone(),
        slots: inst.slots.clone(),
        conflicts: inst
            .conflicts
            .iter()
            .map(|p| ConflictRef {
                slot_a: inst.slots[p.slot_a].id.clone(),
                slot_b: inst.slots[p.slot_b].id.clone(),
            })
            .collect(),
        W: inst.preferences.clone(),
        alpha: inst.swap_penalties.clone(),
        C: inst.eligibility.map(|&c| u8::from(c)),
        M: inst.demand.clone(),
        X_triples: inst
            .assignments()
            .into_iter()
            .map(|(i, j, t)| Triple {
                course: inst.courses[i].id.clone(),
                faculty: inst.faculty[j].id.clone(),
                slot: inst.slots[t].id.clone(),
            })
            .collect(),
        metadata: doc.metadata.clone(),
    }
}

/// Parses a document, checking the schema version and resolving ids, but
/// without validating the instance.
pub fn parse_instance_document_unchecked(text: &str) -> Result<InstanceDocument, IoError> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| IoError::json(None, &e))?;
    match probe.schema_version {
        None => return Err(IoError::at(Location::path("schema_version"), "missing schema_version")),
        Some(v) => match v.as_u64() {
            Some(n) if n == u64::from(INSTANCE_SCHEMA_VERSION) => {}
            Some(n) => {
                return Err(IoError::UnsupportedSchema {
                    found: n,
                    supported: INSTANCE_SCHEMA_VERSION,
                })
            }
            None => {
                return Err(IoError::at(
                    Location::path("schema_version"),
                    format!("expected a non-negative integer, found {v}"),
                ))
            }
        },
    }
    let raw: RawDocument = serde_json::from_str(text).map_err(|e| IoError::json(None, &e))?;
    from_raw(raw)
}

pub fn parse_instance_document(text: &str) -> Result<InstanceDocument, IoError> {
    let doc = parse_instance_document_unchecked(text)?;
    let report = doc.instance.validate();
    if report.is_valid() {
        Ok(doc)
    } else {
        Err(IoError::Invalid(report))
    }
}

pub fn render_instance_document(doc: &InstanceDocument) -> String {
    let mut s = serde_json::to_string_pretty(&to_raw(doc)).expect("instance document serializes");
    s.push('\n');
    s
}

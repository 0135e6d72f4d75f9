//! What-if edits applied on top of a base instance: signed section deltas on
//! the demand array plus optional preference and penalty overrides.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionDelta {
    pub course: String,
    pub slot: String,
    /// Negative values cancel sections, positive values add them.
    pub delta: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceOverride {
    pub faculty: String,
    pub slot: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyOverride {
    pub course: String,
    pub faculty: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Store id of the instance this scenario edits, if it lives in a store.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_instance: Option<String>,
    #[serde(default)]
    pub section_deltas: Vec<SectionDelta>,
    #[serde(default)]
    pub preference_overrides: Vec<PreferenceOverride>,
    #[serde(default)]
    pub penalty_overrides: Vec<PenaltyOverride>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("unknown course {0:?}")]
    UnknownCourse(String),
    #[error("unknown faculty {0:?}")]
    UnknownFaculty(String),
    #[error("unknown slot {0:?}")]
    UnknownSlot(String),
    #[error("cannot cancel below zero demand at ({course}, {slot}): {scheduled} scheduled, net change {delta}")]
    NegativeDemand {
        course: String,
        slot: String,
        scheduled: u32,
        delta: i64,
    },
    #[error("demand at ({course}, {slot}) overflows")]
    DemandOverflow { course: String, slot: String },
    #[error("invalid {what} override {value} at ({row}, {col})")]
    InvalidWeight {
        what: &'static str,
        row: String,
        col: String,
        value: f64,
    },
    #[error("preference override makes ({faculty}, {slot}) unavailable but it is assigned in the obsolete schedule")]
    UnavailableAssignment { faculty: String, slot: String },
}

impl Scenario {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn with_base(mut self, base: impl Into<String>) -> Self {
        self.base_instance = Some(base.into());
        self
    }

    pub fn cancel(mut self, course: &str, slot: &str, count: u32) -> Self {
        self.section_deltas.push(SectionDelta {
            course: course.into(),
            slot: slot.into(),
            delta: -i64::from(count),
        });
        self
    }

    pub fn add(mut self, course: &str, slot: &str, count: u32) -> Self {
        self.section_deltas.push(SectionDelta {
            course: course.into(),
            slot: slot.into(),
            delta: i64::from(count),
        });
        self
    }

    pub fn is_empty(&self) -> bool {
        self.section_deltas.is_empty()
            && self.preference_overrides.is_empty()
            && self.penalty_overrides.is_empty()
    }

    /// Net sections removed across all cells, `sum(-delta)`.
    pub fn net_cancelled(&self) -> i64 {
        -self.section_deltas.iter().map(|d| d.delta).sum::<i64>()
    }

    /// The scenario that undoes `self` when applied to `apply_scenario(base, self)`.
    pub fn inverse(&self, base: &Instance) -> Result<Scenario, ScenarioError> {
        let mut inv = Scenario::new(format!("inverse of {}", self.name));
        inv.base_instance = None;
        inv.section_deltas = self
            .section_deltas
            .iter()
            .rev()
            .map(|d| SectionDelta {
                course: d.course.clone(),
                slot: d.slot.clone(),
                delta: -d.delta,
            })
            .collect();
        for o in self.preference_overrides.iter().rev() {
            let j = faculty_of(base, &o.faculty)?;
            let t = slot_of(base, &o.slot)?;
            inv.preference_overrides.push(PreferenceOverride {
                faculty: o.faculty.clone(),
                slot: o.slot.clone(),
                value: *base.preferences.get(j, t),
            });
        }
        for o in self.penalty_overrides.iter().rev() {
            let i = course_of(base, &o.course)?;
            let j = faculty_of(base, &o.faculty)?;
            inv.penalty_overrides.push(PenaltyOverride {
                course: o.course.clone(),
                faculty: o.faculty.clone(),
                value: *base.swap_penalties.get(i, j),
            });
        }
        Ok(inv)
    }
}

fn course_of(instance: &Instance, id: &str) -> Result<usize, ScenarioError> {
    instance
        .course_index(id)
        .ok_or_else(|| ScenarioError::UnknownCourse(id.to_string()))
}

fn faculty_of(instance: &Instance, id: &str) -> Result<usize, ScenarioError> {
    instance
        .faculty_index(id)
        .ok_or_else(|| ScenarioError::UnknownFaculty(id.to_string()))
}

fn slot_of(instance: &Instance, id: &str) -> Result<usize, ScenarioError> {
    instance
        .slot_index(id)
        .ok_or_else(|| ScenarioError::UnknownSlot(id.to_string()))
}

/// Returns a copy of `instance` with the scenario's demand deltas and weight
/// overrides applied. The obsolete schedule is left untouched.
///
/// Deltas are netted per `(course, slot)` cell before the non-negativity
/// check, so cancelling and re-adding a section in one scenario is allowed.
pub fn apply_scenario(instance: &Instance, scenario: &Scenario) -> Result<Instance, ScenarioError> {
    let mut out = instance.clone();

    let mut net: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for d in &scenario.section_deltas {
        let i = course_of(instance, &d.course)?;
        let t = slot_of(instance, &d.slot)?;
        *net.entry((i, t)).or_default() += d.delta;
    }
    for (&(i, t), &delta) in &net {
        let scheduled = *instance.demand.get(i, t);
        let next = i64::from(scheduled) + delta;
        if next < 0 {
            return Err(ScenarioError::NegativeDemand {
                course: instance.courses[i].id.clone(),
                slot: instance.slots[t].id.clone(),
                scheduled,
                delta,
            });
        }
        let next = u32::try_from(next).map_err(|_| ScenarioError::DemandOverflow {
            course: instance.courses[i].id.clone(),
            slot: instance.slots[t].id.clone(),
        })?;
        out.demand.set(i, t, next);
    }

    for o in &scenario.preference_overrides {
        let j = faculty_of(instance, &o.faculty)?;
        let t = slot_of(instance, &o.slot)?;
        if !(o.value.is_finite() && o.value >= 0.0) {
            return Err(ScenarioError::InvalidWeight {
                what: "preference",
                row: o.faculty.clone(),
                col: o.slot.clone(),
                value: o.value,
            });
        }
        if o.value == 0.0 && (0..instance.courses.len()).any(|i| *instance.obsolete_schedule.get(i, j, t)) {
            return Err(ScenarioError::UnavailableAssignment {
                faculty: o.faculty.clone(),
                slot: o.slot.clone(),
            });
        }
        out.preferences.set(j, t, o.value);
    }

    for o in &scenario.penalty_overrides {
        let i = course_of(instance, &o.course)?;
        let j = faculty_of(instance, &o.faculty)?;
        if !(o.value.is_finite() && o.value >= 0.0) {
            return Err(ScenarioError::InvalidWeight {
                what: "swap penalty",
                row: o.course.clone(),
                col: o.faculty.clone(),
                value: o.value,
            });
        }
        out.swap_penalties.set(i, j, o.value);
    }

    Ok(out)
}

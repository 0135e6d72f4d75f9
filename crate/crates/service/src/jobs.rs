//! In-memory table of solve jobs. Every state change goes through the table
//! lock, so a job moves Queued -> Running -> Done | Failed exactly once and
//! its result never changes afterwards.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use ttmpp_core::solver::{BranchingRule, OptionsError};
use ttmpp_core::{Solution, SolveOptions, SwapReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub solution: Solution,
    /// Absent when the solve produced no schedule, e.g. an infeasible scenario.
    pub report: Option<SwapReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveJob {
    pub id: String,
    pub scenario_id: String,
    pub options: SolveRequest,
    pub state: JobState,
    pub result: Option<JobResult>,
    pub error: Option<String>,
}

/// Overrides of the default solver options. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrality_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_pivot_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_limit: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_change_phase: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branching_rule: Option<BranchingRule>,
}

impl SolveRequest {
    pub fn options(&self) -> Result<SolveOptions, OptionsError> {
        let mut o = SolveOptions::default();
        if let Some(v) = self.integrality_tolerance {
            o.integrality_tolerance = v;
        }
        if let Some(v) = self.lp_pivot_tolerance {
            o.lp_pivot_tolerance = v;
        }
        o.node_limit = self.node_limit;
        if let Some(s) = self.time_limit_seconds {
            o.time_limit = Some(Duration::try_from_secs_f64(s).map_err(|_| OptionsError::ZeroLimit("time_limit"))?);
        }
        if let Some(v) = self.min_change_phase {
            o.min_change_phase = v;
        }
        if let Some(v) = self.branching_rule {
            o.branching_rule = v;
        }
        o.validate()?;
        Ok(o)
    }
}

#[derive(Default)]
pub struct JobTable {
    inner: Mutex<(u64, HashMap<String, SolveJob>)>,
}

impl JobTable {
    pub fn create(&self, scenario_id: &str, options: SolveRequest) -> SolveJob {
        let mut guard = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        guard.0 += 1;
        let job = SolveJob {
            id: format!("job-{}", guard.0),
            scenario_id: scenario_id.to_string(),
            options,
            state: JobState::Queued,
            result: None,
            error: None,
        };
        guard.1.insert(job.id.clone(), job.clone());
        job
    }

    pub fn get(&self, id: &str) -> Option<SolveJob> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).1.get(id).cloned()
    }

    /// Queued -> Running. False if the job is not queued.
    pub fn start(&self, id: &str) -> bool {
        let mut guard = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        match guard.1.get_mut(id) {
            Some(job) if job.state == JobState::Queued => {
                job.state = JobState::Running;
                true
            }
            _ => false,
        }
    }

    /// Running -> Done or Failed. False if the job is not running.
    pub fn finish(&self, id: &str, outcome: Result<JobResult, String>) -> bool {
        let mut guard = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        match guard.1.get_mut(id) {
            Some(job) if job.state == JobState::Running => {
                match outcome {
                    Ok(result) => {
                        job.state = JobState::Done;
                        job.result = Some(result);
                    }
                    Err(message) => {
                        job.state = JobState::Failed;
                        job.error = Some(message);
                    }
                }
                true
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitions_happen_once() {
        let table = JobTable::default();
        let job = table.create("scn-1", SolveRequest::default());
        assert!(!table.finish(&job.id, Err("early".into())));
        assert!(table.start(&job.id));
        assert!(!table.start(&job.id));
        assert!(table.finish(&job.id, Err("boom".into())));
        assert!(!table.finish(&job.id, Err("again".into())));
        let job = table.get(&job.id).unwrap();
        assert_eq!(job.state, JobState::Failed);
        assert_eq!(job.error.as_deref(), Some("boom"));
    }

    #[test]
    fn ids_are_distinct() {
        let table = JobTable::default();
        let a = table.create("s", SolveRequest::default());
        let b = table.create("s", SolveRequest::default());
        assert_ne!(a.id, b.id);
    }

    #[test]
    fn request_overrides() {
        let req: SolveRequest =
            serde_json::from_str(r#"{"time_limit_seconds": 2.5, "min_change_phase": false}"#).unwrap();
        let o = req.options().unwrap();
        assert_eq!(o.time_limit, Some(Duration::from_millis(2500)));
        assert!(!o.min_change_phase);
        assert!(SolveRequest { node_limit: Some(0), ..Default::default() }.options().is_err());
        assert!(SolveRequest { time_limit_seconds: Some(-1.0), ..Default::default() }.options().is_err());
        assert!(serde_json::from_str::<SolveRequest>(r#"{"bogus": 1}"#).is_err());
    }
}

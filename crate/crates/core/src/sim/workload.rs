use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::sched::TaskId;

/// Deterministic stand-in for a shot: `iterations` steps of nominal length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticTask {
    pub id: TaskId,
    pub iterations: u32,
    pub iteration_ns: u64,
}

impl SyntheticTask {
    pub fn nominal_ns(&self) -> u64 {
        self.iteration_ns * u64::from(self.iterations)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub tasks: Vec<SyntheticTask>,
}

impl Workload {
    /// `count` identical tasks with ids `0..count`.
    pub fn uniform(count: usize, iterations: u32, iteration: Duration) -> Self {
        let iteration_ns = iteration.as_nanos() as u64;
        Workload {
            tasks: (0..count as u64)
                .map(|i| SyntheticTask {
                    id: TaskId(i),
                    iterations,
                    iteration_ns,
                })
                .collect(),
        }
    }

    pub fn ids(&self) -> Vec<TaskId> {
        self.tasks.iter().map(|t| t.id).collect()
    }

    pub fn total_nominal_ns(&self) -> u64 {
        self.tasks.iter().map(|t| t.nominal_ns()).sum()
    }

    pub fn by_id(&self) -> Result<BTreeMap<TaskId, SyntheticTask>, SimError> {
        let mut map = BTreeMap::new();
        for t in &self.tasks {
            if map.insert(t.id, *t).is_some() {
                return Err(SimError::Config(format!("duplicate task id {}", t.id)));
            }
        }
        Ok(map)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.by_id()?;
        if let Some(t) = self.tasks.iter().find(|t| t.iterations == 0) {
            return Err(SimError::Config(format!("task {} has no iterations", t.id)));
        }
        Ok(())
    }
}

//! Plan files: a scenario and the plan produced for it, serialized together
//! so the plan can be audited later without re-running the solver.

use crate::scenario::Scenario;
use broad_core::BroadPlan;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub scenario: Scenario,
    pub plan: BroadPlan,
}

pub fn write_plan_file(path: &Path, contents: &PlanFile) -> Result<(), String> {
    let text = serde_json::to_string_pretty(contents)
        .map_err(|e| format!("cannot serialize plan: {e}"))?;
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

pub fn read_plan_file(path: &Path) -> Result<PlanFile, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{} is not a plan file: {e}", path.display()))
}

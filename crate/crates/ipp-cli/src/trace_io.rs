//! Episode-trace JSON: per-step records keyed
//! `{t, action_label, waypoint, observation, rmse, cumulative_distance}`.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use ipp_core::mission::EpisodeTrace;

#[derive(Serialize, Deserialize)]
struct StepDto {
    t: usize,
    action_label: String,
    waypoint: [usize; 2],
    observation: f64,
    rmse: f64,
    cumulative_distance: f64,
}

#[derive(Serialize, Deserialize)]
struct TraceFile {
    instance: String,
    steps: Vec<StepDto>,
}

pub fn write_trace(path: &Path, trace: &EpisodeTrace) -> Result<()> {
    let dto = TraceFile {
        instance: trace.instance_id.clone(),
        steps: trace
            .steps
            .iter()
            .map(|s| StepDto {
                t: s.t,
                action_label: s.action_label.clone(),
                waypoint: [s.waypoint.row, s.waypoint.col],
                observation: s.observation,
                rmse: s.rmse,
                cumulative_distance: s.cumulative_distance,
            })
            .collect(),
    };
    let mut body = serde_json::to_string_pretty(&dto)?;
    body.push('\n');
    fs::write(path, body).with_context(|| format!("writing trace {}", path.display()))?;
    Ok(())
}

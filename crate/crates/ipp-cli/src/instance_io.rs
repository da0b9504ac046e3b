//! Field-instance JSON files: `{id, h, w, norm_offset, norm_scale,
//! values}` with row-major values. serde_json's shortest round-trip
//! float encoding keeps f64 values bit-exact across a write/read cycle.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use ipp_core::field::{FieldInstance, GridField, InstanceSource};

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    id: String,
    h: usize,
    w: usize,
    norm_offset: f64,
    norm_scale: f64,
    values: Vec<f64>,
}

pub fn write_instance(path: &Path, instance: &FieldInstance) -> Result<()> {
    let dto = InstanceFile {
        id: instance.id.clone(),
        h: instance.truth.h(),
        w: instance.truth.w(),
        norm_offset: instance.norm_offset,
        norm_scale: instance.norm_scale,
        values: instance.truth.values().to_vec(),
    };
    let mut body = serde_json::to_string(&dto)?;
    body.push('\n');
    fs::write(path, body).with_context(|| format!("writing instance {}", path.display()))?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<FieldInstance> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading instance {}", path.display()))?;
    let dto: InstanceFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing instance {}", path.display()))?;
    let truth = GridField::new(dto.h, dto.w, dto.values)
        .with_context(|| format!("invalid grid in {}", path.display()))?;
    let source = if dto.id.starts_with("synth") {
        InstanceSource::Synthetic
    } else {
        InstanceSource::Ingested
    };
    let instance =
        FieldInstance::from_parts(&dto.id, truth, dto.norm_offset, dto.norm_scale, source)
            .with_context(|| format!("invalid instance in {}", path.display()))?;
    Ok(instance)
}

/// Dumps a bare grid (e.g. a prediction mean or variance map) in the
/// instance schema with identity normalization.
pub fn write_grid(path: &Path, id: &str, grid: &GridField) -> Result<()> {
    let dto = InstanceFile {
        id: id.to_string(),
        h: grid.h(),
        w: grid.w(),
        norm_offset: 0.0,
        norm_scale: 1.0,
        values: grid.values().to_vec(),
    };
    let mut body = serde_json::to_string(&dto)?;
    body.push('\n');
    fs::write(path, body).with_context(|| format!("writing grid {}", path.display()))?;
    Ok(())
}

/// Loads every `*.json` instance in a directory, sorted by file name.
pub fn read_instance_dir(dir: &Path) -> Result<Vec<FieldInstance>> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("reading instance directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        out.push(read_instance(&path)?);
    }
    Ok(out)
}

//! Builds dense ground-truth instances from scattered sensor readings:
//! kriging onto an intermediate metric grid, bilinear rescaling to the
//! output resolution, and min-max normalization.

use alloc::vec::Vec;


use crate::field::{FieldInstance, GridField, InstanceSource};
use crate::kriging::{
    empirical_semivariogram_points, fit_spherical, KrigingError, OkSolver,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SurrogateError {
    #[error("need at least {needed} motes with values, got {got}")]
    NotEnoughMotes { needed: usize, got: usize },
    #[error("coords and values length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("mote coordinates are degenerate (zero spatial extent)")]
    DegenerateGeometry,
    #[error("non-finite reading or coordinate")]
    NonFinite,
    #[error("kriging failed after duplicate perturbation: {0}")]
    Kriging(KrigingError),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
}

/// Knobs for surrogate construction. The defaults follow the ingestion
/// pipeline: one intermediate cell per meter, 32x32 output, at least ten
/// reporting motes.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateConfig {
    pub out_h: usize,
    pub out_w: usize,
    pub cells_per_meter: f64,
    pub min_motes: usize,
    pub n_lags: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig { out_h: 32, out_w: 32, cells_per_meter: 1.0, min_motes: 10, n_lags: 6 }
    }
}

/// Builds a normalized dense instance from one snapshot of mote values.
/// `coords` are (x, y) positions in meters.
pub fn build_surrogate_instance(
    id: &str,
    coords: &[(f64, f64)],
    values: &[f64],
    out_h: usize,
    out_w: usize,
) -> Result<FieldInstance, SurrogateError> {
    let config = SurrogateConfig { out_h, out_w, ..SurrogateConfig::default() };
    build_surrogate_with(id, coords, values, &config)
}

pub fn build_surrogate_with(
    id: &str,
    coords: &[(f64, f64)],
    values: &[f64],
    config: &SurrogateConfig,
) -> Result<FieldInstance, SurrogateError> {
    if coords.len() != values.len() {
        return Err(SurrogateError::LengthMismatch(coords.len(), values.len()));
    }
    if coords.len() < config.min_motes {
        return Err(SurrogateError::NotEnoughMotes { needed: config.min_motes, got: coords.len() });
    }
    if coords.iter().any(|(x, y)| !x.is_finite() || !y.is_finite())
        || values.iter().any(|v| !v.is_finite())
    {
        return Err(SurrogateError::NonFinite);
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in coords {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let extent_x = x_max - x_min;
    let extent_y = y_max - y_min;
    if extent_x <= 1e-9 || extent_y <= 1e-9 {
        return Err(SurrogateError::DegenerateGeometry);
    }
    // Intermediate grid at roughly one cell per meter over the bounding box.
    let inter_h = ((extent_y * config.cells_per_meter).ceil() as usize + 1).max(8);
    let inter_w = ((extent_x * config.cells_per_meter).ceil() as usize + 1).max(8);
    // Map motes into intermediate cell coordinates (row ~ y, col ~ x).
    let to_cells = |cs: &[(f64, f64)]| -> Vec<(f64, f64)> {
        cs.iter()
            .map(|&(x, y)| {
                (
                    (y - y_min) / extent_y * (inter_h - 1) as f64,
                    (x - x_min) / extent_x * (inter_w - 1) as f64,
                )
            })
            .collect()
    };
    let points = to_cells(coords);
    let inter = match krige_scatter(&points, values, inter_h, inter_w, config.n_lags) {
        Ok(grid) => grid,
        Err(KrigingError::SingularSystem) => {
            // Duplicate mote coordinates collapse the system; nudge every
            // repeat by half a cell and retry once.
            let perturbed = perturb_duplicates(&points, 0.5);
            krige_scatter(&perturbed, values, inter_h, inter_w, config.n_lags)
                .map_err(SurrogateError::Kriging)?
        }
        Err(e) => return Err(SurrogateError::Kriging(e)),
    };
    let resampled = bilinear_resample(&inter, config.out_h, config.out_w)?;
    Ok(FieldInstance::from_raw(id, resampled, InstanceSource::Ingested))
}

fn krige_scatter(
    points: &[(f64, f64)],
    values: &[f64],
    h: usize,
    w: usize,
    n_lags: usize,
) -> Result<GridField, KrigingError> {
    let emp = empirical_semivariogram_points(points, values, n_lags)?;
    let params = fit_spherical(&emp)?;
    let solver = OkSolver::from_points(points.to_vec(), values.to_vec(), &params)?;
    let mut out = alloc::vec![0.0f64; h * w];
    for r in 0..h {
        for c in 0..w {
            let (mean, _kv) = solver.predict((r as f64, c as f64));
            out[r * w + c] = mean;
        }
    }
    GridField::new(h, w, out).map_err(KrigingError::Field)
}

fn perturb_duplicates(points: &[(f64, f64)], shift: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &(r, c) in points {
        let mut candidate = (r, c);
        let mut bump = shift;
        while out.iter().any(|&(orr, occ)| orr == candidate.0 && occ == candidate.1) {
            candidate = (r + bump, c + bump);
            bump += shift;
        }
        out.push(candidate);
    }
    out
}

/// Corner-aligned bilinear resampling.
fn bilinear_resample(src: &GridField, out_h: usize, out_w: usize) -> Result<GridField, crate::field::FieldError> {
    let (sh, sw) = src.dims();
    let mut out = alloc::vec![0.0f64; out_h * out_w];
    for r in 0..out_h {
        for c in 0..out_w {
            let fr = if out_h > 1 { r as f64 * (sh - 1) as f64 / (out_h - 1) as f64 } else { 0.0 };
            let fc = if out_w > 1 { c as f64 * (sw - 1) as f64 / (out_w - 1) as f64 } else { 0.0 };
            let r0 = fr.floor() as usize;
            let c0 = fc.floor() as usize;
            let r1 = (r0 + 1).min(sh - 1);
            let c1 = (c0 + 1).min(sw - 1);
            let tr = fr - r0 as f64;
            let tc = fc - c0 as f64;
            let top = src.get(r0, c0) * (1.0 - tc) + src.get(r0, c1) * tc;
            let bottom = src.get(r1, c0) * (1.0 - tc) + src.get(r1, c1) * tc;
            out[r * out_w + c] = top * (1.0 - tr) + bottom * tr;
        }
    }
    GridField::new(out_h, out_w, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_readings_produce_zero_instance_with_unit_scale() {
        let coords: Vec<(f64, f64)> = (0..12)
            .map(|i| (((i % 4) * 3) as f64, ((i / 4) * 5) as f64))
            .collect();
        let values = alloc::vec![21.0; 12];
        let inst = build_surrogate_instance("const", &coords, &values, 32, 32).unwrap();
        assert_eq!(inst.truth.dims(), (32, 32));
        assert_eq!(inst.norm_scale, 1.0);
        assert!(inst.truth.values().iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn output_dimensions_are_32_by_32_by_default() {
        let coords: Vec<(f64, f64)> = (0..12)
            .map(|i| ((i % 4) as f64 * 10.0, (i / 4) as f64 * 12.0))
            .collect();
        let values: Vec<f64> = (0..12).map(|i| 18.0 + i as f64 * 0.3).collect();
        let inst = build_surrogate_instance("dims", &coords, &values, 32, 32).unwrap();
        assert_eq!(inst.truth.dims(), (32, 32));
        assert!(inst.truth.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn corner_gradient_is_monotone_along_gradient_axis() {
        // Motes at the corners of a square, 0 on the left edge and 1 on the
        // right: every resampled row must be non-decreasing left to right,
        // matching a direct kriging evaluation at full resolution.
        let config = SurrogateConfig { min_motes: 4, ..SurrogateConfig::default() };
        let coords = [(0.0, 0.0), (0.0, 20.0), (20.0, 0.0), (20.0, 20.0)];
        let values = [0.0, 0.0, 1.0, 1.0];
        let inst = build_surrogate_with("grad", &coords, &values, &config).unwrap();
        for r in 0..32 {
            for c in 1..32 {
                assert!(
                    inst.truth.get(r, c) + 1e-9 >= inst.truth.get(r, c - 1),
                    "row {r} col {c}"
                );
            }
        }
    }

    #[test]
    fn too_few_motes_rejected() {
        let coords = [(0.0, 0.0), (1.0, 1.0)];
        let values = [0.0, 1.0];
        assert!(matches!(
            build_surrogate_instance("few", &coords, &values, 32, 32),
            Err(SurrogateError::NotEnoughMotes { .. })
        ));
    }

    #[test]
    fn duplicate_motes_survive_via_perturbation() {
        let mut coords: Vec<(f64, f64)> = (0..10)
            .map(|i| (((i % 5) * 4) as f64, ((i / 5) * 6) as f64))
            .collect();
        coords.push(coords[3]); // exact duplicate
        let mut values: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        values.push(0.35);
        let inst = build_surrogate_instance("dup", &coords, &values, 16, 16).unwrap();
        assert!(inst.truth.values().iter().all(|v| v.is_finite()));
    }
}

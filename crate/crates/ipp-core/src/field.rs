//! Discretized fields, ground-truth instances, and prediction scoring.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::{self, SeedMix};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FieldError {
    #[error("grid dimensions must be at least 2x2, got {0}x{1}")]
    TooSmall(usize, usize),
    #[error("value buffer length {got} does not match {h}x{w}")]
    LengthMismatch { h: usize, w: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("grid dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("need at least {needed} instances, got {got}")]
    NotEnoughInstances { needed: usize, got: usize },
}

/// Grid coordinate, `row` before `col`. Ordering is row-major, which is
/// also the deterministic tie-break order used by the planners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    /// Euclidean distance in cell units.
    pub fn distance(&self, other: Cell) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        (dr * dr + dc * dc).sqrt()
    }

    pub fn as_xy(&self) -> (f64, f64) {
        (self.row as f64, self.col as f64)
    }
}

/// Dense H x W field of one environmental attribute, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    h: usize,
    w: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(h: usize, w: usize, values: Vec<f64>) -> Result<Self, FieldError> {
        if h < 2 || w < 2 {
            return Err(FieldError::TooSmall(h, w));
        }
        if values.len() != h * w {
            return Err(FieldError::LengthMismatch { h, w, got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(GridField { h, w, values })
    }

    pub fn filled(h: usize, w: usize, value: f64) -> Result<Self, FieldError> {
        Self::new(h, w, alloc::vec![value; h * w])
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.w + col]
    }

    #[inline]
    pub fn at(&self, cell: Cell) -> f64 {
        self.get(cell.row, cell.col)
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.w + col] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.h && cell.col < self.w
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Row-major iteration over all cells.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.w;
        (0..self.h * self.w).map(move |i| Cell::new(i / w, i % w))
    }
}

/// Root mean-squared error over all cells of two same-shaped grids.
pub fn rmse(pred: &GridField, truth: &GridField) -> Result<f64, FieldError> {
    if pred.dims() != truth.dims() {
        return Err(FieldError::DimensionMismatch(pred.h, pred.w, truth.h, truth.w));
    }
    let n = pred.len() as f64;
    let sum_sq: f64 = pred
        .values
        .iter()
        .zip(&truth.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum_sq / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceSource {
    Ingested,
    Synthetic,
}

/// A ground-truth field normalized to [0, 1], with the affine metadata
/// needed to recover raw attribute units (`raw = value * scale + offset`).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldInstance {
    pub id: String,
    pub truth: GridField,
    pub norm_offset: f64,
    pub norm_scale: f64,
    pub source: InstanceSource,
}

impl FieldInstance {
    /// Min-max normalizes a raw grid into a [0, 1] instance. A constant
    /// grid degenerates to scale 1 with all values 0.
    pub fn from_raw(id: &str, raw: GridField, source: InstanceSource) -> Self {
        let (lo, hi) = raw.min_max();
        let spread = hi - lo;
        let scale = if spread > 0.0 { spread } else { 1.0 };
        let values = raw.values.iter().map(|v| (v - lo) / scale).collect();
        let truth = GridField { h: raw.h, w: raw.w, values };
        FieldInstance { id: String::from(id), truth, norm_offset: lo, norm_scale: scale, source }
    }

    /// Rebuilds an instance from stored parts, revalidating the invariants.
    pub fn from_parts(
        id: &str,
        truth: GridField,
        norm_offset: f64,
        norm_scale: f64,
        source: InstanceSource,
    ) -> Result<Self, FieldError> {
        if !(norm_scale > 0.0 && norm_scale.is_finite() && norm_offset.is_finite()) {
            return Err(FieldError::InvalidParameter("norm_scale must be positive and finite"));
        }
        let (lo, hi) = truth.min_max();
        if lo < -1e-9 || hi > 1.0 + 1e-9 {
            return Err(FieldError::InvalidParameter("normalized values must lie in [0, 1]"));
        }
        Ok(FieldInstance { id: String::from(id), truth, norm_offset, norm_scale, source })
    }

    /// Maps a normalized value back to raw attribute units.
    pub fn denormalize(&self, value: f64) -> f64 {
        value * self.norm_scale + self.norm_offset
    }
}

/// Sum of seeded Gaussian bumps, min-max normalized. Deterministic in
/// `seed`; per bump the draws are row center, col center, amplitude.
pub fn generate_synthetic_field(
    seed: u64,
    h: usize,
    w: usize,
    n_bumps: usize,
    length_scale: f64,
) -> Result<FieldInstance, FieldError> {
    if n_bumps == 0 {
        return Err(FieldError::InvalidParameter("n_bumps must be at least 1"));
    }
    if !(length_scale > 0.0 && length_scale.is_finite()) {
        return Err(FieldError::InvalidParameter("length_scale must be positive"));
    }
    if h < 2 || w < 2 {
        return Err(FieldError::TooSmall(h, w));
    }
    let mut rng = rng::rng_from_seed(SeedMix::new(seed).str("synthetic-field").build());
    let mut values = alloc::vec![0.0f64; h * w];
    let denom = 2.0 * length_scale * length_scale;
    for _ in 0..n_bumps {
        let cr: f64 = rng.gen_range(0.0..h as f64);
        let cc: f64 = rng.gen_range(0.0..w as f64);
        let amp: f64 = rng.gen_range(-1.0..=1.0);
        for r in 0..h {
            for c in 0..w {
                let dr = r as f64 - cr;
                let dc = c as f64 - cc;
                values[r * w + c] += amp * (-(dr * dr + dc * dc) / denom).exp();
            }
        }
    }
    let raw = GridField::new(h, w, values)?;
    Ok(FieldInstance::from_raw(&format!("synth-{seed}"), raw, InstanceSource::Synthetic))
}

/// Disjoint train/test id lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded shuffled split into disjoint train and test id sets.
pub fn split_instances(
    instances: &[FieldInstance],
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<InstanceSplit, FieldError> {
    if n_train + n_test > instances.len() {
        return Err(FieldError::NotEnoughInstances { needed: n_train + n_test, got: instances.len() });
    }
    let mut indices: Vec<usize> = (0..instances.len()).collect();
    let mut rng = rng::rng_from_seed(SeedMix::new(seed).str("instance-split").build());
    rng::shuffle(&mut indices, &mut rng);
    let train = indices[..n_train].iter().map(|&i| instances[i].id.clone()).collect();
    let test = indices[n_train..n_train + n_test].iter().map(|&i| instances[i].id.clone()).collect();
    Ok(InstanceSplit { train, test })
}

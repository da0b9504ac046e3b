//! Ordinary Kriging: spherical variogram learning, weight solving, and
//! full-field mean/variance prediction.
//!
//! The interpolator treats the variogram at zero distance as exactly zero
//! even when a nugget is fitted, so predictions reproduce observations at
//! sampled cells and the kriging variance vanishes there.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::field::{Cell, GridField};
use crate::linalg;
use crate::rng;

/// Standard deviation of the exploration noise added to kriging variance
/// maps (variance 1e-12).
pub const KV_NOISE_SIGMA: f64 = 1e-6;

/// Diagonal jitter applied to the sample variogram matrix when the plain
/// augmented system is singular.
pub const SINGULAR_JITTER: f64 = 1e-10;

/// Default number of distance bins for the empirical semivariogram.
pub const DEFAULT_N_LAGS: usize = 6;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KrigingError {
    #[error("invalid variogram parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("duplicate sample location ({0}, {1})")]
    DuplicateLocation(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    NotEnoughSamples { needed: usize, got: usize },
    #[error("kriging system is singular even after jitter")]
    SingularSystem,
    #[error("sample location ({0}, {1}) outside {2}x{3} grid")]
    OutOfBounds(usize, usize, usize, usize),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
}

/// Spherical variogram model: partial sill, range (cells), nugget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariogramParams {
    pub partial_sill: f64,
    pub range: f64,
    pub nugget: f64,
}

impl VariogramParams {
    pub fn new(partial_sill: f64, range: f64, nugget: f64) -> Result<Self, KrigingError> {
        if !(partial_sill >= 0.0 && partial_sill.is_finite()) {
            return Err(KrigingError::InvalidParameter("partial_sill must be >= 0"));
        }
        if !(range > 0.0 && range.is_finite()) {
            return Err(KrigingError::InvalidParameter("range must be > 0"));
        }
        if !(nugget >= 0.0 && nugget.is_finite()) {
            return Err(KrigingError::InvalidParameter("nugget must be >= 0"));
        }
        Ok(VariogramParams { partial_sill, range, nugget })
    }

    /// Fallback used before any pair of observations exists.
    pub fn flat() -> Self {
        VariogramParams { partial_sill: 0.0, range: 1.0, nugget: 0.0 }
    }
}

/// Spherical variogram value at separation `h`.
///
/// Returns 0 at `h = 0` (exact-interpolation convention), the spherical
/// curve plus nugget on `0 < h <= range`, and sill plus nugget beyond.
pub fn spherical_gamma(h: f64, params: &VariogramParams) -> f64 {
    debug_assert!(h >= 0.0);
    let p = params.partial_sill;
    let r = params.range;
    let n = params.nugget;
    if h <= 0.0 {
        0.0
    } else if h <= r {
        let q = h / r;
        p * (1.5 * q - 0.5 * q * q * q) + n
    } else {
        p + n
    }
}

/// Binned Matheron estimate of the semivariogram.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalVariogram {
    pub lag_centers: Vec<f64>,
    pub semivariances: Vec<f64>,
    pub pair_counts: Vec<usize>,
}

/// Ordered sampling history: visited cells and their observations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    cells: Vec<Cell>,
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new() -> Self {
        SampleSet::default()
    }

    pub fn push(&mut self, cell: Cell, value: f64) -> Result<(), KrigingError> {
        if self.cells.contains(&cell) {
            return Err(KrigingError::DuplicateLocation(cell.row, cell.col));
        }
        self.cells.push(cell);
        self.values.push(value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.contains(&cell)
    }
}

/// Paired mean and kriging-variance grids over the whole field.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMap {
    pub mean: GridField,
    pub variance: GridField,
}

/// Classical Matheron estimator over equal-width distance bins up to the
/// maximum pairwise distance; bin centers are the mean pair distance and
/// empty bins are omitted.
pub fn empirical_semivariogram(
    samples: &SampleSet,
    n_lags: usize,
) -> Result<EmpiricalVariogram, KrigingError> {
    let points: Vec<(f64, f64)> = samples.cells.iter().map(|c| c.as_xy()).collect();
    empirical_semivariogram_points(&points, &samples.values, n_lags)
}

pub(crate) fn empirical_semivariogram_points(
    points: &[(f64, f64)],
    values: &[f64],
    n_lags: usize,
) -> Result<EmpiricalVariogram, KrigingError> {
    if n_lags == 0 {
        return Err(KrigingError::InvalidParameter("n_lags must be at least 1"));
    }
    let t = points.len();
    if t < 2 {
        return Err(KrigingError::NotEnoughSamples { needed: 2, got: t });
    }
    let mut max_d = 0.0f64;
    for i in 0..t {
        for j in i + 1..t {
            max_d = max_d.max(dist(points[i], points[j]));
        }
    }
    if max_d <= 0.0 {
        return Err(KrigingError::InvalidParameter("all pairwise distances are zero"));
    }
    let mut sum_gamma = alloc::vec![0.0f64; n_lags];
    let mut sum_dist = alloc::vec![0.0f64; n_lags];
    let mut counts = alloc::vec![0usize; n_lags];
    for i in 0..t {
        for j in i + 1..t {
            let d = dist(points[i], points[j]);
            if d <= 0.0 {
                continue; // coincident points carry no spatial information
            }
            let idx = (((d / max_d) * n_lags as f64).ceil() as usize).clamp(1, n_lags) - 1;
            let diff = values[i] - values[j];
            sum_gamma[idx] += 0.5 * diff * diff;
            sum_dist[idx] += d;
            counts[idx] += 1;
        }
    }
    let mut emp = EmpiricalVariogram {
        lag_centers: Vec::new(),
        semivariances: Vec::new(),
        pair_counts: Vec::new(),
    };
    for k in 0..n_lags {
        if counts[k] > 0 {
            emp.lag_centers.push(sum_dist[k] / counts[k] as f64);
            emp.semivariances.push(sum_gamma[k] / counts[k] as f64);
            emp.pair_counts.push(counts[k]);
        }
    }
    Ok(emp)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

/// Spherical shape function without sill scaling: rises from 0 to 1 over
/// [0, r], flat at 1 beyond.
fn unit_spherical(h: f64, r: f64) -> f64 {
    if h <= 0.0 {
        0.0
    } else if h <= r {
        let q = h / r;
        1.5 * q - 0.5 * q * q * q
    } else {
        1.0
    }
}

/// Pair-count-weighted least squares fit of the spherical model.
///
/// For a fixed range the model is linear in (partial sill, nugget), so the
/// fit profiles the weighted SSE over a range grid, solves the 2x2 normal
/// equations at each candidate with non-negativity handled on the
/// boundary, and polishes the best bracket by golden-section search.
pub fn fit_spherical(emp: &EmpiricalVariogram) -> Result<VariogramParams, KrigingError> {
    let m = emp.lag_centers.len();
    if m == 0 {
        return Err(KrigingError::InvalidParameter("empirical variogram has no bins"));
    }
    if m == 1 {
        return VariogramParams::new(emp.semivariances[0].max(0.0), emp.lag_centers[0], 0.0);
    }
    let h_max = emp.lag_centers[m - 1];
    let h_min = emp.lag_centers[0];
    let r_lo = (0.25 * h_min).max(1e-9 * h_max).max(1e-12);
    let r_hi = 2.0 * h_max;

    let sse_at = |r: f64| solve_linear_part(emp, r).2;

    const GRID: usize = 256;
    let mut best_i = 0;
    let mut best_sse = f64::INFINITY;
    for i in 0..GRID {
        let r = r_lo + (r_hi - r_lo) * i as f64 / (GRID - 1) as f64;
        let sse = sse_at(r);
        if sse < best_sse {
            best_sse = sse;
            best_i = i;
        }
    }
    let step = (r_hi - r_lo) / (GRID - 1) as f64;
    let mut a = (r_lo + step * best_i as f64 - step).max(r_lo);
    let mut b = (r_lo + step * best_i as f64 + step).min(r_hi);
    // Golden-section polish of the bracketed minimum.
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = sse_at(x1);
    let mut f2 = sse_at(x2);
    for _ in 0..120 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = sse_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = sse_at(x2);
        }
        if b - a < 1e-12 * r_hi {
            break;
        }
    }
    let r_best = 0.5 * (a + b);
    let (p, n, _) = solve_linear_part(emp, r_best);
    VariogramParams::new(p, r_best, n)
}

/// Weighted LS solve for (partial sill, nugget) at fixed range; negative
/// solutions fall back to the better of the two boundary fits.
fn solve_linear_part(emp: &EmpiricalVariogram, r: f64) -> (f64, f64, f64) {
    let mut sgg = 0.0;
    let mut sg1 = 0.0;
    let mut s11 = 0.0;
    let mut sgy = 0.0;
    let mut s1y = 0.0;
    for k in 0..emp.lag_centers.len() {
        let w = emp.pair_counts[k] as f64;
        let g = unit_spherical(emp.lag_centers[k], r);
        let y = emp.semivariances[k];
        sgg += w * g * g;
        sg1 += w * g;
        s11 += w;
        sgy += w * g * y;
        s1y += w * y;
    }
    let sse = |p: f64, n: f64| -> f64 {
        let mut acc = 0.0;
        for k in 0..emp.lag_centers.len() {
            let w = emp.pair_counts[k] as f64;
            let g = unit_spherical(emp.lag_centers[k], r);
            let e = p * g + n - emp.semivariances[k];
            acc += w * e * e;
        }
        acc
    };
    let det = sgg * s11 - sg1 * sg1;
    let mut candidates: Vec<(f64, f64)> = Vec::with_capacity(3);
    if det.abs() > 1e-12 * (sgg * s11).abs().max(1e-300) {
        let p = (sgy * s11 - s1y * sg1) / det;
        let n = (sgg * s1y - sg1 * sgy) / det;
        if p >= 0.0 && n >= 0.0 {
            candidates.push((p, n));
        }
    }
    // Boundary fits: nugget pinned to zero, and sill pinned to zero.
    if sgg > 0.0 {
        candidates.push(((sgy / sgg).max(0.0), 0.0));
    }
    if s11 > 0.0 {
        candidates.push((0.0, (s1y / s11).max(0.0)));
    }
    let mut best = (0.0, 0.0, sse(0.0, 0.0));
    for (p, n) in candidates {
        let e = sse(p, n);
        if e < best.2 {
            best = (p, n, e);
        }
    }
    best
}

/// Factorized Ordinary-Kriging system over a fixed sample set and
/// variogram; solving for any number of targets reuses the factorization.
/// Shared references are safe to use from multiple threads.
#[derive(Debug, Clone)]
pub struct OkSolver {
    points: Vec<(f64, f64)>,
    values: Vec<f64>,
    params: VariogramParams,
    lu: Vec<f64>,
    piv: Vec<usize>,
    n: usize,
}

impl OkSolver {
    pub fn from_samples(samples: &SampleSet, params: &VariogramParams) -> Result<Self, KrigingError> {
        let points: Vec<(f64, f64)> = samples.cells.iter().map(|c| c.as_xy()).collect();
        Self::from_points(points, samples.values.clone(), params)
    }

    pub(crate) fn from_points(
        points: Vec<(f64, f64)>,
        values: Vec<f64>,
        params: &VariogramParams,
    ) -> Result<Self, KrigingError> {
        let t = points.len();
        if t == 0 {
            return Err(KrigingError::NotEnoughSamples { needed: 1, got: 0 });
        }
        debug_assert_eq!(points.len(), values.len());
        let n = t + 1;
        let assemble = |jitter: f64| -> Vec<f64> {
            let mut a = alloc::vec![0.0f64; n * n];
            for i in 0..t {
                for j in 0..t {
                    let g = if i == j {
                        jitter
                    } else {
                        spherical_gamma(dist(points[i], points[j]), params)
                    };
                    a[i * n + j] = g;
                }
                a[i * n + t] = 1.0;
                a[t * n + i] = 1.0;
            }
            a
        };
        let mut a = assemble(0.0);
        let (lu, piv) = match linalg::lu_factor(&mut a, n) {
            Ok(piv) => (a, piv),
            Err(_) => {
                let mut jittered = assemble(SINGULAR_JITTER);
                match linalg::lu_factor(&mut jittered, n) {
                    Ok(piv) => (jittered, piv),
                    Err(_) => return Err(KrigingError::SingularSystem),
                }
            }
        };
        Ok(OkSolver { points, values, params: *params, lu, piv, n })
    }

    pub fn num_samples(&self) -> usize {
        self.n - 1
    }

    /// Kriging weights and Lagrange multiplier for one target location.
    pub fn solve(&self, target: (f64, f64)) -> (Vec<f64>, f64) {
        let t = self.n - 1;
        let mut rhs = alloc::vec![0.0f64; self.n];
        for (i, p) in self.points.iter().enumerate() {
            rhs[i] = spherical_gamma(dist(*p, target), &self.params);
        }
        rhs[t] = 1.0;
        let x = linalg::lu_solve(&self.lu, &self.piv, self.n, &rhs);
        let lambda = x[t];
        let mut weights = x;
        weights.truncate(t);
        (weights, lambda)
    }

    /// Predicted mean and kriging variance (clamped at zero) for a target.
    pub fn predict(&self, target: (f64, f64)) -> (f64, f64) {
        let (weights, lambda) = self.solve(target);
        let mut mean = 0.0;
        let mut kv = lambda;
        for (i, w) in weights.iter().enumerate() {
            mean += w * self.values[i];
            kv += w * spherical_gamma(dist(self.points[i], target), &self.params);
        }
        (mean, kv.max(0.0))
    }
}

/// Solves the augmented Ordinary-Kriging system for one target cell,
/// returning the sample weights (summing to 1) and Lagrange multiplier.
pub fn solve_ok_weights(
    samples: &SampleSet,
    target: Cell,
    params: &VariogramParams,
) -> Result<(Vec<f64>, f64), KrigingError> {
    let solver = OkSolver::from_samples(samples, params)?;
    Ok(solver.solve(target.as_xy()))
}

/// Point prediction: weighted mean of the observations and the kriging
/// variance `lambda + w . gamma_i0`.
pub fn predict_point(
    samples: &SampleSet,
    target: Cell,
    params: &VariogramParams,
) -> Result<(f64, f64), KrigingError> {
    let solver = OkSolver::from_samples(samples, params)?;
    Ok(solver.predict(target.as_xy()))
}

/// Evaluates mean and kriging variance at every cell of an `h x w` grid.
/// The system is factorized once; per-cell solves are independent.
pub fn predict_map(
    samples: &SampleSet,
    h: usize,
    w: usize,
    params: &VariogramParams,
) -> Result<PredictionMap, KrigingError> {
    for c in samples.cells() {
        if c.row >= h || c.col >= w {
            return Err(KrigingError::OutOfBounds(c.row, c.col, h, w));
        }
    }
    let solver = OkSolver::from_samples(samples, params)?;
    let mut mean = alloc::vec![0.0f64; h * w];
    let mut var = alloc::vec![0.0f64; h * w];
    for r in 0..h {
        for c in 0..w {
            let (m, v) = solver.predict((r as f64, c as f64));
            mean[r * w + c] = m;
            var[r * w + c] = v;
        }
    }
    Ok(PredictionMap { mean: GridField::new(h, w, mean)?, variance: GridField::new(h, w, var)? })
}

/// Adds i.i.d. Gaussian noise with variance 1e-12 to a variance map; used
/// by the planners for stochastic tie-breaking. Cells are perturbed in
/// row-major order, one draw each.
pub fn noisy_kv(v: &GridField, rng: &mut ChaCha8Rng) -> GridField {
    let values: Vec<f64> = v
        .values()
        .iter()
        .map(|&x| x + KV_NOISE_SIGMA * rng::standard_normal(rng))
        .collect();
    GridField::new(v.h(), v.w(), values).expect("noise preserves shape and finiteness")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params(p: f64, r: f64, n: f64) -> VariogramParams {
        VariogramParams::new(p, r, n).unwrap()
    }

    #[test]
    fn spherical_gamma_analytic_points() {
        let vp = params(2.0, 8.0, 0.25);
        assert_eq!(spherical_gamma(0.0, &vp), 0.0);
        assert!((spherical_gamma(8.0, &vp) - (2.0 + 0.25)).abs() < 1e-12);
        assert!((spherical_gamma(16.0, &vp) - 2.25).abs() < 1e-12);
        // Interior point: h = r/2 -> p*(0.75 - 0.0625) + n.
        assert!((spherical_gamma(4.0, &vp) - (2.0 * 0.6875 + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn semivariogram_two_sample_cases() {
        let mut s = SampleSet::new();
        s.push(Cell::new(0, 0), 1.0).unwrap();
        s.push(Cell::new(0, 3), 1.0).unwrap();
        let emp = empirical_semivariogram(&s, 4).unwrap();
        assert_eq!(emp.lag_centers, vec![3.0]);
        assert_eq!(emp.semivariances, vec![0.0]);

        let mut s2 = SampleSet::new();
        s2.push(Cell::new(0, 0), 0.0).unwrap();
        s2.push(Cell::new(0, 3), 2.0).unwrap();
        let emp2 = empirical_semivariogram(&s2, 4).unwrap();
        assert_eq!(emp2.lag_centers, vec![3.0]);
        assert_eq!(emp2.semivariances, vec![2.0]); // (0-2)^2 / 2
        assert_eq!(emp2.pair_counts, vec![1]);
    }

    #[test]
    fn semivariogram_collinear_hand_enumeration() {
        // Values 0, 1, 2 at x = 0, 3, 6: pairs at distance 3 (x2, gamma 0.5
        // each) and distance 6 (gamma 2).
        let mut s = SampleSet::new();
        s.push(Cell::new(0, 0), 0.0).unwrap();
        s.push(Cell::new(0, 3), 1.0).unwrap();
        s.push(Cell::new(0, 6), 2.0).unwrap();
        let emp = empirical_semivariogram(&s, 2).unwrap();
        assert_eq!(emp.lag_centers, vec![3.0, 6.0]);
        assert!((emp.semivariances[0] - 0.5).abs() < 1e-12);
        assert!((emp.semivariances[1] - 2.0).abs() < 1e-12);
        assert_eq!(emp.pair_counts, vec![2, 1]);
    }

    #[test]
    fn fit_recovers_forward_generated_model() {
        let truth = params(1.0, 10.0, 0.1);
        let lags: Vec<f64> = (1..=8).map(|i| 2.0 * i as f64).collect();
        let emp = EmpiricalVariogram {
            semivariances: lags.iter().map(|&h| spherical_gamma(h, &truth)).collect(),
            pair_counts: vec![10; lags.len()],
            lag_centers: lags,
        };
        let fit = fit_spherical(&emp).unwrap();
        assert!((fit.partial_sill - 1.0).abs() < 1e-3, "p = {}", fit.partial_sill);
        assert!((fit.range - 10.0).abs() < 1e-3, "r = {}", fit.range);
        assert!((fit.nugget - 0.1).abs() < 1e-3, "n = {}", fit.nugget);
    }

    #[test]
    fn fit_flat_data_gives_zero_sill_and_nugget() {
        let emp = EmpiricalVariogram {
            lag_centers: vec![1.0, 2.0, 3.0],
            semivariances: vec![0.0, 0.0, 0.0],
            pair_counts: vec![4, 3, 2],
        };
        let fit = fit_spherical(&emp).unwrap();
        assert_eq!(fit.partial_sill, 0.0);
        assert_eq!(fit.nugget, 0.0);
    }

    #[test]
    fn fit_single_bin_fallback() {
        let emp = EmpiricalVariogram {
            lag_centers: vec![4.0],
            semivariances: vec![0.5],
            pair_counts: vec![1],
        };
        let fit = fit_spherical(&emp).unwrap();
        assert_eq!(fit.partial_sill, 0.5);
        assert_eq!(fit.range, 4.0);
        assert_eq!(fit.nugget, 0.0);
    }

    #[test]
    fn single_sample_weight_is_one() {
        let mut s = SampleSet::new();
        s.push(Cell::new(3, 4), 7.5).unwrap();
        let vp = params(1.0, 5.0, 0.2);
        let (w, _lambda) = solve_ok_weights(&s, Cell::new(0, 0), &vp).unwrap();
        assert_eq!(w.len(), 1);
        assert!((w[0] - 1.0).abs() < 1e-12);
        let (mean, _) = predict_point(&s, Cell::new(0, 0), &vp).unwrap();
        assert!((mean - 7.5).abs() < 1e-12);
    }

    #[test]
    fn equidistant_samples_split_weight() {
        let mut s = SampleSet::new();
        s.push(Cell::new(0, 0), 1.0).unwrap();
        s.push(Cell::new(0, 4), 3.0).unwrap();
        let vp = params(1.3, 6.0, 0.05);
        let (w, _) = solve_ok_weights(&s, Cell::new(0, 2), &vp).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-10);
        assert!((w[1] - 0.5).abs() < 1e-10);
        let (mean, _) = predict_point(&s, Cell::new(0, 2), &vp).unwrap();
        assert!((mean - 2.0).abs() < 1e-10);
    }

    #[test]
    fn exact_interpolation_at_samples() {
        let mut s = SampleSet::new();
        s.push(Cell::new(1, 1), 0.3).unwrap();
        s.push(Cell::new(2, 5), 0.9).unwrap();
        s.push(Cell::new(6, 2), 0.1).unwrap();
        let vp = params(0.8, 7.0, 0.3);
        for (i, c) in s.cells().iter().enumerate() {
            let (mean, kv) = predict_point(&s, *c, &vp).unwrap();
            assert!((mean - s.values()[i]).abs() < 1e-8);
            assert!(kv <= 1e-8);
        }
    }

    #[test]
    fn flat_field_predicts_constant_via_jitter() {
        // All observations equal with a zero variogram: the plain system is
        // singular, the jittered one solves to equal weights.
        let mut s = SampleSet::new();
        s.push(Cell::new(0, 0), 2.0).unwrap();
        s.push(Cell::new(0, 3), 2.0).unwrap();
        s.push(Cell::new(3, 0), 2.0).unwrap();
        let vp = VariogramParams::flat();
        let (mean, kv) = predict_point(&s, Cell::new(2, 2), &vp).unwrap();
        assert!((mean - 2.0).abs() < 1e-9);
        assert!(kv >= 0.0 && kv < 1e-9);
    }

    #[test]
    fn variance_grows_with_distance_to_single_sample() {
        let mut s = SampleSet::new();
        s.push(Cell::new(0, 0), 0.5).unwrap();
        let vp = params(1.0, 6.0, 0.0);
        let map = predict_map(&s, 10, 10, &vp).unwrap();
        // Along the first row, KV rises until distance >= range then flattens.
        let mut prev = -1.0;
        for c in 0..10 {
            let v = map.variance.get(0, c);
            if (c as f64) <= 6.0 {
                assert!(v >= prev - 1e-12, "col {c}");
            } else {
                assert!((v - map.variance.get(0, 7)).abs() < 1e-9);
            }
            prev = v;
        }
    }

    #[test]
    fn noisy_kv_is_small_and_deterministic() {
        let v = GridField::filled(8, 8, 0.25).unwrap();
        let mut r1 = rng::rng_from_seed(5);
        let mut r2 = rng::rng_from_seed(5);
        let n1 = noisy_kv(&v, &mut r1);
        let n2 = noisy_kv(&v, &mut r2);
        assert_eq!(n1, n2);
        for (a, b) in n1.values().iter().zip(v.values()) {
            assert!((a - b).abs() < 1e-5); // 5-sigma bound per cell
        }
    }

    #[test]
    fn noisy_kv_means_concentrate_like_clt() {
        // Deterministic empirical check over 100 fixed seeds: the mean
        // perturbation over 32x32 cells stays within 4 sigma of zero and
        // within 3 sigma for at least 97 of the seeds.
        let v = GridField::filled(32, 32, 0.0).unwrap();
        let sigma_mean = KV_NOISE_SIGMA / 32.0;
        let mut within_three = 0;
        for seed in 0..100 {
            let mut rng = rng::rng_from_seed(seed);
            let noisy = noisy_kv(&v, &mut rng);
            let mean: f64 = noisy.values().iter().sum::<f64>() / 1024.0;
            assert!(mean.abs() < 4.0 * sigma_mean, "seed {seed}: mean {mean}");
            if mean.abs() < 3.0 * sigma_mean {
                within_three += 1;
            }
        }
        assert!(within_three >= 97, "only {within_three} seeds within 3 sigma");
    }

    #[test]
    fn duplicate_locations_rejected() {
        let mut s = SampleSet::new();
        s.push(Cell::new(1, 1), 0.0).unwrap();
        assert_eq!(s.push(Cell::new(1, 1), 1.0), Err(KrigingError::DuplicateLocation(1, 1)));
    }
}

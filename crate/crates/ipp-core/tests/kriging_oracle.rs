//! Cross-checks the kriging solver against an independent brute-force
//! route: textbook Gauss-Jordan elimination on the explicitly assembled
//! augmented system, sharing no code with the production LU path.

use ipp_core::field::Cell;
use ipp_core::kriging::{
    predict_point, solve_ok_weights, spherical_gamma, SampleSet, VariogramParams,
};
use rand::Rng;

/// Gauss-Jordan with naive row swapping on near-zero pivots.
fn gauss_jordan_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let mut pivot_row = col;
        while pivot_row < n && a[pivot_row][col].abs() < 1e-12 {
            pivot_row += 1;
        }
        assert!(pivot_row < n, "oracle matrix singular");
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col][col];
        for j in 0..n {
            a[col][j] /= pivot;
        }
        b[col] /= pivot;
        for row in 0..n {
            if row != col {
                let factor = a[row][col];
                if factor != 0.0 {
                    for j in 0..n {
                        a[row][j] -= factor * a[col][j];
                    }
                    b[row] -= factor * b[col];
                }
            }
        }
    }
    b
}

fn cell_distance(a: Cell, b: Cell) -> f64 {
    let dr = a.row as f64 - b.row as f64;
    let dc = a.col as f64 - b.col as f64;
    (dr * dr + dc * dc).sqrt()
}

/// Assembles and solves the augmented kriging system from scratch.
fn oracle_solve(
    samples: &SampleSet,
    target: Cell,
    params: &VariogramParams,
) -> (Vec<f64>, f64, f64, f64) {
    let t = samples.len();
    let n = t + 1;
    let mut a = vec![vec![0.0f64; n]; n];
    for i in 0..t {
        for j in 0..t {
            a[i][j] = if i == j {
                0.0
            } else {
                spherical_gamma(cell_distance(samples.cells()[i], samples.cells()[j]), params)
            };
        }
        a[i][t] = 1.0;
        a[t][i] = 1.0;
    }
    let mut rhs = vec![0.0f64; n];
    for i in 0..t {
        rhs[i] = spherical_gamma(cell_distance(samples.cells()[i], target), params);
    }
    rhs[t] = 1.0;
    let x = gauss_jordan_solve(a, rhs.clone());
    let weights = x[..t].to_vec();
    let lambda = x[t];
    let mean: f64 = weights.iter().zip(samples.values()).map(|(w, z)| w * z).sum();
    let kv: f64 = lambda + weights.iter().zip(&rhs[..t]).map(|(w, g)| w * g).sum::<f64>();
    (weights, lambda, mean, kv.max(0.0))
}

fn random_fixture(rng: &mut impl Rng) -> (SampleSet, Cell, VariogramParams) {
    let t = rng.gen_range(1..=5);
    let mut samples = SampleSet::new();
    while samples.len() < t {
        let cell = Cell::new(rng.gen_range(0..12), rng.gen_range(0..12));
        let value = rng.gen_range(-1.0..2.0);
        let _ = samples.push(cell, value);
    }
    let target = Cell::new(rng.gen_range(0..12), rng.gen_range(0..12));
    let params = VariogramParams::new(
        rng.gen_range(0.1..2.0),
        rng.gen_range(2.0..15.0),
        rng.gen_range(0.0..0.3),
    )
    .unwrap();
    (samples, target, params)
}

#[test]
fn weights_mean_and_kv_match_brute_force_on_50_fixtures() {
    let mut rng = ipp_core::rng::rng_from_seed(2024);
    for fixture in 0..50 {
        let (samples, target, params) = random_fixture(&mut rng);
        let (weights, lambda) = solve_ok_weights(&samples, target, &params).unwrap();
        let (mean, kv) = predict_point(&samples, target, &params).unwrap();
        let (ow, ol, om, okv) = oracle_solve(&samples, target, &params);
        for (w, o) in weights.iter().zip(&ow) {
            assert!((w - o).abs() < 1e-8, "fixture {fixture}: weight {w} vs {o}");
        }
        assert!((lambda - ol).abs() < 1e-8, "fixture {fixture}: lambda");
        assert!((mean - om).abs() < 1e-8, "fixture {fixture}: mean");
        assert!((kv - okv).abs() < 1e-8, "fixture {fixture}: kv {kv} vs {okv}");
        let sum: f64 = weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8, "fixture {fixture}: weight sum {sum}");
    }
}

#[test]
fn weight_sum_is_one_across_random_geometries() {
    let mut rng = ipp_core::rng::rng_from_seed(7);
    for _ in 0..200 {
        let t = rng.gen_range(1..=15);
        let mut samples = SampleSet::new();
        while samples.len() < t {
            let cell = Cell::new(rng.gen_range(0..20), rng.gen_range(0..20));
            let _ = samples.push(cell, rng.gen_range(0.0..1.0));
        }
        let params = VariogramParams::new(
            rng.gen_range(0.05..3.0),
            rng.gen_range(1.0..25.0),
            rng.gen_range(0.0..0.5),
        )
        .unwrap();
        let target = Cell::new(rng.gen_range(0..20), rng.gen_range(0..20));
        let (weights, _) = solve_ok_weights(&samples, target, &params).unwrap();
        let sum: f64 = weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8, "t = {t}: sum = {sum}");
    }
}

#[test]
fn prediction_is_permutation_invariant() {
    let mut rng = ipp_core::rng::rng_from_seed(99);
    for _ in 0..30 {
        let t = rng.gen_range(2..=8);
        let mut cells = Vec::new();
        let mut values = Vec::new();
        while cells.len() < t {
            let cell = Cell::new(rng.gen_range(0..15), rng.gen_range(0..15));
            if !cells.contains(&cell) {
                cells.push(cell);
                values.push(rng.gen_range(0.0..1.0));
            }
        }
        let params = VariogramParams::new(1.0, 8.0, 0.05).unwrap();
        let target = Cell::new(rng.gen_range(0..15), rng.gen_range(0..15));
        let mut forward = SampleSet::new();
        for (c, v) in cells.iter().zip(&values) {
            forward.push(*c, *v).unwrap();
        }
        let mut reversed = SampleSet::new();
        for (c, v) in cells.iter().zip(&values).rev() {
            reversed.push(*c, *v).unwrap();
        }
        let (m1, k1) = predict_point(&forward, target, &params).unwrap();
        let (m2, k2) = predict_point(&reversed, target, &params).unwrap();
        assert!((m1 - m2).abs() < 1e-10, "mean {m1} vs {m2}");
        assert!((k1 - k2).abs() < 1e-10, "kv {k1} vs {k2}");
    }
}

#[test]
fn scaling_observations_scales_the_mean() {
    // Scale all observations by c and refit on the scaled data: the
    // fitted sill/nugget pick up c^2, the range and weights stay put, and
    // the predicted mean scales by exactly c.
    use ipp_core::kriging::{empirical_semivariogram, fit_spherical};
    let mut rng = ipp_core::rng::rng_from_seed(13);
    for _ in 0..10 {
        let t = rng.gen_range(4..=9);
        let mut base = SampleSet::new();
        let mut scaled = SampleSet::new();
        let c = 2.0;
        while base.len() < t {
            let cell = Cell::new(rng.gen_range(0..16), rng.gen_range(0..16));
            let v = rng.gen_range(0.1..1.0);
            if base.push(cell, v).is_ok() {
                scaled.push(cell, c * v).unwrap();
            }
        }
        let p1 = fit_spherical(&empirical_semivariogram(&base, 6).unwrap()).unwrap();
        let p2 = fit_spherical(&empirical_semivariogram(&scaled, 6).unwrap()).unwrap();
        assert!((p2.partial_sill - c * c * p1.partial_sill).abs() < 1e-6 * (1.0 + p1.partial_sill));
        assert!((p2.range - p1.range).abs() < 1e-6 * p1.range);
        let target = Cell::new(rng.gen_range(0..16), rng.gen_range(0..16));
        let (m1, _) = predict_point(&base, target, &p1).unwrap();
        let (m2, _) = predict_point(&scaled, target, &p2).unwrap();
        assert!((m2 - c * m1).abs() < 1e-8, "{m2} vs {}", c * m1);
    }
}

#[test]
fn kv_pre_clamp_stays_above_minus_epsilon() {
    let mut rng = ipp_core::rng::rng_from_seed(41);
    for _ in 0..50 {
        let (samples, target, params) = random_fixture(&mut rng);
        let (weights, lambda) = solve_ok_weights(&samples, target, &params).unwrap();
        let raw_kv: f64 = lambda
            + weights
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    w * spherical_gamma(cell_distance(samples.cells()[i], target), &params)
                })
                .sum::<f64>();
        assert!(raw_kv >= -1e-9, "pre-clamp KV {raw_kv}");
    }
}

//! Dense LU factorization with partial pivoting, sized for the small
//! augmented kriging systems (at most budget+1 unknowns).

use alloc::vec::Vec;


#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Singular;

/// Factors `a` (n x n, row-major) in place into packed LU form and returns
/// the pivot row permutation. Fails when the best available pivot is
/// negligible relative to the matrix scale.
pub(crate) fn lu_factor(a: &mut [f64], n: usize) -> Result<Vec<usize>, Singular> {
    debug_assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
    let tol = 1e-13 * scale;
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut max = a[k * n + k].abs();
        for i in k + 1..n {
            let cand = a[i * n + k].abs();
            if cand > max {
                max = cand;
                p = i;
            }
        }
        if max <= tol {
            return Err(Singular);
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            piv.swap(k, p);
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let factor = a[i * n + k] / pivot;
            a[i * n + k] = factor;
            for j in k + 1..n {
                a[i * n + j] -= factor * a[k * n + j];
            }
        }
    }
    Ok(piv)
}

/// Solves `LUx = Pb` for a factorization produced by [`lu_factor`].
pub(crate) fn lu_solve(lu: &[f64], piv: &[usize], n: usize, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(b.len(), n);
    let mut x: Vec<f64> = piv.iter().map(|&p| b[p]).collect();
    for i in 1..n {
        let mut acc = x[i];
        for j in 0..i {
            acc -= lu[i * n + j] * x[j];
        }
        x[i] = acc;
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= lu[i * n + j] * x[j];
        }
        x[i] = acc / lu[i * n + i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn solves_small_system() {
        // Needs pivoting: leading zero.
        let mut a = vec![0.0, 1.0, 2.0, 3.0];
        let piv = lu_factor(&mut a, 2).unwrap();
        let x = lu_solve(&a, &piv, 2, &[5.0, 11.0]);
        // [0 1; 2 3] x = [5; 11] -> x = [(11 - 15)/2? solve: y=5, 2x+3*5=11 -> x=-2]
        assert!((x[0] - -2.0).abs() < 1e-12);
        assert!((x[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn detects_singular() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        assert_eq!(lu_factor(&mut a, 2), Err(Singular));
    }

    #[test]
    fn random_round_trip() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(11);
        for n in 1..=8 {
            let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut b = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    b[i] += a[i * n + j] * x_true[j];
                }
            }
            let mut lu = a.clone();
            if let Ok(piv) = lu_factor(&mut lu, n) {
                let x = lu_solve(&lu, &piv, n, &b);
                for (xs, xt) in x.iter().zip(&x_true) {
                    assert!((xs - xt).abs() < 1e-9, "n={n}");
                }
            }
        }
    }
}

//! Slow, obviously-correct reference computations for tests.
//!
//! Nothing here depends on the library under test.

use num::{BigInt, BigRational, Zero};

/// Otsu level by exhaustive search over all 256 thresholds, with the
/// between-class variance evaluated in exact rational arithmetic.
///
/// Class 0 holds intensities `<= t`. Thresholds with an empty class score
/// zero; ties resolve to the smallest `t`.
pub fn otsu_exhaustive(pixels: &[u8]) -> u8 {
    let total = BigInt::from(pixels.len());
    let mut best_t = 0u8;
    let mut best = BigRational::zero();
    for t in 0..=255u8 {
        let (below, above): (Vec<u8>, Vec<u8>) = pixels.iter().partition(|&&p| p <= t);
        if below.is_empty() || above.is_empty() {
            continue;
        }
        let mean = |v: &[u8]| {
            let s: u64 = v.iter().map(|&p| u64::from(p)).sum();
            BigRational::new(BigInt::from(s), BigInt::from(v.len()))
        };
        let w0 = BigRational::new(BigInt::from(below.len()), total.clone());
        let w1 = BigRational::new(BigInt::from(above.len()), total.clone());
        let diff = mean(&below) - mean(&above);
        let score = w0 * w1 * diff.clone() * diff;
        if score > best {
            best = score;
            best_t = t;
        }
    }
    best_t
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order with matching unit eigenvectors
/// (as rows).
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

/// Sample covariance (divisor `n - 1`) of row-major data.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect()
}

/// Orthogonal projector onto the top-`k` covariance eigenvectors,
/// row-major `d × d`, together with all covariance eigenvalues.
pub fn covariance_projector(rows: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<f64>) {
    let (values, vectors) = jacobi_eigen(&covariance(rows));
    let d = values.len();
    let mut p = vec![0.0; d * d];
    for v in &vectors[..k] {
        for i in 0..d {
            for j in 0..d {
                p[i * d + j] += v[i] * v[j];
            }
        }
    }
    (p, values)
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `|a − b| / max(|a|, |b|, floor)`
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

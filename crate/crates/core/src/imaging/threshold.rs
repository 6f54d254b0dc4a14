//! Otsu's threshold selection and scaled binarization.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage};

pub fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    hist
}

/// Between-class variance of the split `{v <= t}` / `{v > t}`, scaled by
/// `N²` and kept as an exact fraction `(numerator, denominator)`.
///
/// `N² σ_B² = (s0·n1 − s1·n0)² / (n0·n1)` where `n` are class counts and `s`
/// class intensity sums. An empty class gives `(0, 1)`.
pub fn between_class_variance(hist: &[u64; 256], t: u8) -> (u128, u128) {
    let (mut n0, mut s0, mut n1, mut s1) = (0u128, 0u128, 0u128, 0u128);
    for (v, &c) in hist.iter().enumerate() {
        let c = c as u128;
        if v <= t as usize {
            n0 += c;
            s0 += c * v as u128;
        } else {
            n1 += c;
            s1 += c * v as u128;
        }
    }
    variance_fraction(n0, s0, n1, s1)
}

fn variance_fraction(n0: u128, s0: u128, n1: u128, s1: u128) -> (u128, u128) {
    if n0 == 0 || n1 == 0 {
        return (0, 1);
    }
    let diff = (s0 * n1).abs_diff(s1 * n0);
    (diff * diff, n0 * n1)
}

/// Exact comparison of `a/b` against `c/d` (`b, d > 0`) by continued-fraction
/// expansion, so no product ever overflows.
fn cmp_fraction(mut a: u128, mut b: u128, mut c: u128, mut d: u128) -> Ordering {
    loop {
        let (q1, r1) = (a / b, a % b);
        let (q2, r2) = (c / d, c % d);
        if q1 != q2 {
            return q1.cmp(&q2);
        }
        match (r1 == 0, r2 == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            // r1/b vs r2/d  <=>  d/r2 vs b/r1
            (false, false) => (a, b, c, d) = (d, r2, b, r1),
        }
    }
}

/// Otsu level: the `t` maximizing between-class variance over the 256-bin
/// histogram, smallest `t` on ties. Comparisons are exact, so ties are real
/// ties. Images above 2^28 pixels may overflow the intermediate sums.
pub fn otsu_threshold(img: &GrayImage) -> u8 {
    let hist = histogram(img);
    let total_n: u128 = hist.iter().map(|&c| c as u128).sum();
    let total_s: u128 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as u128 * c as u128)
        .sum();

    let (mut n0, mut s0) = (0u128, 0u128);
    let mut best_t = 0u8;
    let mut best = (0u128, 1u128);
    for t in 0..=255u8 {
        n0 += hist[t as usize] as u128;
        s0 += hist[t as usize] as u128 * t as u128;
        let cur = variance_fraction(n0, s0, total_n - n0, total_s - s0);
        if cmp_fraction(cur.0, cur.1, best.0, best.1) == Ordering::Greater {
            best = cur;
            best_t = t;
        }
    }
    best_t
}

/// `255` where the pixel exceeds `scale × t`, else `0`.
pub fn binarize(img: &GrayImage, t: u8, scale: f64) -> Result<BinaryImage> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::param(format!("scale must be in (0, 1], got {scale}")));
    }
    let level = scale * t as f64;
    Ok(BinaryImage::from_gray_unchecked(
        img.map(|v| if v as f64 > level { 255 } else { 0 }),
    ))
}

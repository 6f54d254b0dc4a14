//! Canny edge detection: Gaussian blur, Sobel gradients, non-maximum
//! suppression along the quantized gradient direction, then hysteresis.

use std::collections::VecDeque;

use crate::error::Result;
use crate::image::{reflect, BinaryImage, GrayImage};

use super::ImagingParams;

const BLUR_SIGMA: f64 = 1.0;
const BLUR_RADIUS: isize = 2;

fn gaussian_kernel() -> Vec<f64> {
    let raw: Vec<f64> = (-BLUR_RADIUS..=BLUR_RADIUS)
        .map(|i| (-((i * i) as f64) / (2.0 * BLUR_SIGMA * BLUR_SIGMA)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|k| k / sum).collect()
}

/// Separable 5×5 Gaussian blur with mirrored borders.
fn blur(img: &GrayImage) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let k = gaussian_kernel();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (-BLUR_RADIUS..=BLUR_RADIUS)
                .zip(&k)
                .map(|(i, kv)| kv * img.get(reflect(x as isize + i, w), y) as f64)
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (-BLUR_RADIUS..=BLUR_RADIUS)
                .zip(&k)
                .map(|(i, kv)| kv * tmp[reflect(y as isize + i, h) * w + x])
                .sum();
        }
    }
    out
}

/// Sobel `(gx, gy)` of a row-major float field, mirrored borders.
fn sobel(field: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |x: isize, y: isize| field[reflect(y, h) * w + reflect(x, w)];
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        }
    }
    (gx, gy)
}

/// Gradient magnitude after the Canny pre-blur, before suppression.
pub fn sobel_magnitude(img: &GrayImage) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let (gx, gy) = sobel(&blur(img), w, h);
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect()
}

/// Neighbor offsets across the edge for a gradient direction, quantized to
/// 0°, 45°, 90° or 135° (image y axis points down).
fn across(gx: f64, gy: f64) -> [(isize, isize); 2] {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        [(-1, 0), (1, 0)]
    } else if angle < 67.5 {
        [(-1, -1), (1, 1)]
    } else if angle < 112.5 {
        [(0, -1), (0, 1)]
    } else {
        [(1, -1), (-1, 1)]
    }
}

/// Edge map with edges at 255.
///
/// A pixel survives suppression when its magnitude is positive, strictly
/// above the first neighbor across the edge and at least the second one.
/// The asymmetry keeps exactly one pixel of a two-pixel plateau, which is
/// what a step edge sampled on the pixel grid produces.
pub fn canny(img: &GrayImage, p: &ImagingParams) -> Result<BinaryImage> {
    p.validate()?;
    let (w, h) = (img.width(), img.height());
    let (gx, gy) = sobel(&blur(img), w, h);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let max_mag = mag.iter().copied().fold(0.0, f64::max);
    if max_mag == 0.0 {
        return Ok(BinaryImage::filled(w, h, false));
    }

    let mag_at = |x: isize, y: isize| mag[reflect(y, h) * w + reflect(x, w)];
    let mut thin = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let [(ax, ay), (bx, by)] = across(gx[i], gy[i]);
            let (x, y) = (x as isize, y as isize);
            if m > mag_at(x + ax, y + ay) && m >= mag_at(x + bx, y + by) {
                thin[i] = m;
            }
        }
    }

    let low = p.canny_low * max_mag;
    let high = p.canny_high * max_mag;
    let mut out = GrayImage::filled(w, h, 0);
    let mut queue = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m > 0.0 && m >= high {
            out.set(i % w, i / w, 255);
            queue.push_back(i);
        }
    }
    // grow strong edges through 8-connected weak ones
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for ny in y - 1..=y + 1 {
            for nx in x - 1..=x + 1 {
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if out.data()[j] == 0 && thin[j] > 0.0 && thin[j] >= low {
                    out.set(nx as usize, ny as usize, 255);
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(BinaryImage::from_gray_unchecked(out))
}

//! Non-local means denoising.
//!
//! Each pixel becomes the weighted mean of the pixels in its search window,
//! with weight `exp(-d² / h²)` where `d²` is the mean squared difference of
//! the two surrounding patches. The center pixel's own weight is the largest
//! weight among its neighbors rather than 1, otherwise isolated impulses
//! would always keep their value.
//!
//! Patch distances are box sums of per-offset squared differences, taken from
//! an integral image so the cost does not grow with the patch size.

use crate::error::{Error, Result};
use crate::image::{reflect, GrayImage};

use super::ImagingParams;

pub fn nl_means(img: &GrayImage, p: &ImagingParams) -> Result<GrayImage> {
    if p.nlm_patch % 2 == 0 || p.nlm_search % 2 == 0 {
        return Err(Error::param("NL-means windows must be odd"));
    }
    let (w, h) = (img.width(), img.height());
    if w < p.nlm_search || h < p.nlm_search {
        return Err(Error::param(format!(
            "{w}x{h} image is smaller than the {0}x{0} search window",
            p.nlm_search
        )));
    }
    let pr = (p.nlm_patch / 2) as isize;
    let sr = (p.nlm_search / 2) as isize;
    let patch_area = (p.nlm_patch * p.nlm_patch) as f64;
    let inv_h2 = 1.0 / (p.nlm_strength * p.nlm_strength);

    // reflect-padded copy, margin covers patch + search reach
    let m = pr + sr;
    let pw = w + 2 * m as usize;
    let ph = h + 2 * m as usize;
    let padded: Vec<i32> = (0..ph)
        .flat_map(|y| {
            let sy = reflect(y as isize - m, h);
            (0..pw).map(move |x| img.get(reflect(x as isize - m, w), sy) as i32)
        })
        .collect();
    let at = |x: isize, y: isize| padded[(y + m) as usize * pw + (x + m) as usize];

    let offsets: Vec<(isize, isize)> = (-sr..=sr)
        .flat_map(|dy| (-sr..=sr).map(move |dx| (dx, dy)))
        .filter(|&o| o != (0, 0))
        .collect();

    // integral image of squared differences over the region reachable by patches
    let iw = w + 2 * pr as usize;
    let ih = h + 2 * pr as usize;
    let mut integral = vec![0u64; (iw + 1) * (ih + 1)];
    let mut dist = vec![0u64; offsets.len() * w * h];
    for (k, &(dx, dy)) in offsets.iter().enumerate() {
        for iy in 0..ih {
            let y = iy as isize - pr;
            let mut row = 0u64;
            for ix in 0..iw {
                let x = ix as isize - pr;
                let d = at(x, y) - at(x + dx, y + dy);
                row += (d * d) as u64;
                integral[(iy + 1) * (iw + 1) + ix + 1] = integral[iy * (iw + 1) + ix + 1] + row;
            }
        }
        let side = p.nlm_patch;
        let dk = &mut dist[k * w * h..(k + 1) * w * h];
        for y in 0..h {
            for x in 0..w {
                // patch centered on (x, y) spans integral rows y..y+side
                let (x0, y0, x1, y1) = (x, y, x + side, y + side);
                let s = integral[y1 * (iw + 1) + x1] + integral[y0 * (iw + 1) + x0]
                    - integral[y0 * (iw + 1) + x1]
                    - integral[y1 * (iw + 1) + x0];
                dk[y * w + x] = s;
            }
        }
    }

    let mut out = GrayImage::filled(w, h, 0);
    for y in 0..h {
        for x in 0..w {
            let pix = y * w + x;
            let dmin = (0..offsets.len())
                .map(|k| dist[k * w * h + pix])
                .min()
                .expect("search window has neighbors");
            // weights relative to the best neighbor, so the largest is exactly 1
            let mut num = at(x as isize, y as isize) as f64;
            let mut den = 1.0;
            for (k, &(dx, dy)) in offsets.iter().enumerate() {
                let excess = (dist[k * w * h + pix] - dmin) as f64 / patch_area;
                let wgt = (-excess * inv_h2).exp();
                num += wgt * at(x as isize + dx, y as isize + dy) as f64;
                den += wgt;
            }
            out.set(x, y, (num / den + 0.5).floor() as u8);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn params() -> ImagingParams {
        ImagingParams::default()
    }

    fn variance(img: &GrayImage) -> f64 {
        let n = img.len() as f64;
        let mean = img.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        img.data().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    }

    /// Direct evaluation: explicit patch loops, no integral images.
    fn brute_force(img: &GrayImage, p: &ImagingParams) -> GrayImage {
        let (w, h) = (img.width(), img.height());
        let pr = (p.nlm_patch / 2) as isize;
        let sr = (p.nlm_search / 2) as isize;
        let px = |x: isize, y: isize| img.get(reflect(x, w), reflect(y, h)) as f64;
        GrayImage::from_fn(w, h, |x, y| {
            let (x, y) = (x as isize, y as isize);
            let mut cands = Vec::new();
            for dy in -sr..=sr {
                for dx in -sr..=sr {
                    if (dx, dy) == (0, 0) {
                        continue;
                    }
                    let mut d2 = 0.0;
                    for qy in -pr..=pr {
                        for qx in -pr..=pr {
                            d2 += (px(x + qx, y + qy) - px(x + dx + qx, y + dy + qy)).powi(2);
                        }
                    }
                    d2 /= (p.nlm_patch * p.nlm_patch) as f64;
                    cands.push((d2, px(x + dx, y + dy)));
                }
            }
            let h2 = p.nlm_strength * p.nlm_strength;
            let dmin = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
            let (mut num, mut den) = (px(x, y), 1.0);
            for (d2, v) in cands {
                let wgt = (-(d2 - dmin) / h2).exp();
                num += wgt * v;
                den += wgt;
            }
            (num / den).round() as u8
        })
    }

    #[test]
    fn constant_image_is_fixed_point() {
        let img = GrayImage::filled(20, 15, 123);
        assert_eq!(nl_means(&img, &params()).unwrap(), img);
    }

    #[test]
    fn impulse_is_pulled_toward_background() {
        let mut img = GrayImage::filled(21, 21, 50);
        img.set(10, 10, 250);
        let out = nl_means(&img, &params()).unwrap();
        let c = out.get(10, 10);
        assert!(c > 50 && c < 250, "center {c}");
    }

    #[test]
    fn gaussian_noise_variance_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 20.0).unwrap();
        let img = GrayImage::from_fn(40, 40, |_, _| {
            (128.0f64 + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8
        });
        let out = nl_means(&img, &params()).unwrap();
        assert!(variance(&out) < variance(&img));
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 12.0).unwrap();
        let img = GrayImage::from_fn(17, 13, |x, y| {
            let base: f64 = if x + y > 14 { 170.0 } else { 60.0 };
            (base + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8
        });
        let p = ImagingParams {
            nlm_patch: 3,
            nlm_search: 7,
            ..params()
        };
        assert_eq!(nl_means(&img, &p).unwrap(), brute_force(&img, &p));
        assert_eq!(nl_means(&img, &params()).unwrap(), brute_force(&img, &params()));
    }

    #[test]
    fn output_stays_in_input_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 30.0).unwrap();
        let img = GrayImage::from_fn(25, 25, |x, _| {
            (40.0 + 4.0 * x as f64 + noise.sample(&mut rng)).clamp(20.0, 230.0) as u8
        });
        let out = nl_means(&img, &params()).unwrap();
        let lo = *img.data().iter().min().unwrap();
        let hi = *img.data().iter().max().unwrap();
        assert!(out.data().iter().all(|&v| (lo..=hi).contains(&v)));
    }

    #[test]
    fn rejects_small_images_and_even_windows() {
        assert!(nl_means(&GrayImage::filled(10, 30, 0), &params()).is_err());
        let p = ImagingParams {
            nlm_patch: 4,
            ..params()
        };
        assert!(nl_means(&GrayImage::filled(30, 30, 0), &p).is_err());
    }
}

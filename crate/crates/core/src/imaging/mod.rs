//! Wrinkle extraction: raw RGB scene in, binary wrinkle map out.
//!
//! The stages run in a fixed order, see [`extract_wrinkles`]. Every windowed
//! operation treats the image border by mirror reflection.

mod canny;
mod morphology;
mod nlmeans;
mod threshold;

pub use canny::{canny, sobel_magnitude};
pub use morphology::{dilate_disk, disk_offsets};
pub use nlmeans::nl_means;
pub use threshold::{between_class_variance, binarize, histogram, otsu_threshold};

use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage, Rect, RgbImage};

/// Tunables for the extraction chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagingParams {
    /// Fraction applied to the Otsu level before binarizing.
    pub otsu_scale: f64,
    /// NL-means patch side, odd.
    pub nlm_patch: usize,
    /// NL-means search window side, odd.
    pub nlm_search: usize,
    /// NL-means filtering strength `h`, in 8-bit intensity units.
    pub nlm_strength: f64,
    /// Hysteresis thresholds as fractions of the largest gradient magnitude.
    pub canny_low: f64,
    pub canny_high: f64,
    pub dilate_radius: usize,
    pub out_size: usize,
}

impl Default for ImagingParams {
    fn default() -> Self {
        ImagingParams {
            otsu_scale: 0.6,
            nlm_patch: 5,
            nlm_search: 11,
            nlm_strength: 10.0,
            canny_low: 0.1,
            canny_high: 0.3,
            dilate_radius: 2,
            out_size: 100,
        }
    }
}

impl ImagingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.otsu_scale > 0.0 && self.otsu_scale <= 1.0) {
            return Err(Error::param(format!(
                "otsu_scale must be in (0, 1], got {}",
                self.otsu_scale
            )));
        }
        if self.nlm_patch % 2 == 0 || self.nlm_search % 2 == 0 {
            return Err(Error::param(format!(
                "NL-means windows must be odd, got patch {} search {}",
                self.nlm_patch, self.nlm_search
            )));
        }
        if !(self.nlm_strength > 0.0 && self.nlm_strength.is_finite()) {
            return Err(Error::param("nlm_strength must be positive"));
        }
        if !(0.0 <= self.canny_low && self.canny_low < self.canny_high && self.canny_high <= 1.0) {
            return Err(Error::param(format!(
                "need 0 <= canny_low < canny_high <= 1, got {} / {}",
                self.canny_low, self.canny_high
            )));
        }
        if self.out_size == 0 {
            return Err(Error::param("out_size must be at least 1"));
        }
        Ok(())
    }
}

/// ITU-R 601 luma, rounded half up.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| {
            let y = 299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32;
            ((y + 500) / 1000) as u8
        })
        .collect();
    GrayImage::new(img.width(), img.height(), data).expect("same dimensions")
}

/// Crops `rect` and resamples it to `out_size × out_size` with bilinear
/// interpolation. Pixel centers are aligned, so a crop that is already
/// `out_size` square comes back unchanged.
pub fn crop_resize(img: &GrayImage, rect: Rect, out_size: usize) -> Result<GrayImage> {
    rect.check_inside(img.width(), img.height())?;
    if out_size == 0 {
        return Err(Error::param("out_size must be at least 1"));
    }
    let sx = rect.width as f64 / out_size as f64;
    let sy = rect.height as f64 / out_size as f64;
    let max_x = (rect.width - 1) as f64;
    let max_y = (rect.height - 1) as f64;

    // per-axis source coordinate: lower index and fractional weight
    let taps = |scale: f64, max: f64, n: usize| -> Vec<(usize, usize, f64)> {
        (0..n)
            .map(|i| {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(max as usize);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = taps(sx, max_x, out_size);
    let ys = taps(sy, max_y, out_size);

    let px = |x: usize, y: usize| img.get(rect.x + x, rect.y + y) as f64;
    let mut out = GrayImage::filled(out_size, out_size, 0);
    for (oy, &(y0, y1, fy)) in ys.iter().enumerate() {
        for (ox, &(x0, x1, fx)) in xs.iter().enumerate() {
            let top = px(x0, y0) * (1.0 - fx) + px(x1, y0) * fx;
            let bottom = px(x0, y1) * (1.0 - fx) + px(x1, y1) * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            out.set(ox, oy, (v + 0.5).floor().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

pub fn invert(img: &BinaryImage) -> BinaryImage {
    BinaryImage::from_gray_unchecked(img.map(|v| 255 - v))
}

/// Intermediate results of [`extract_wrinkles_stages`], in pipeline order.
#[derive(Debug, Clone)]
pub struct WrinkleStages {
    pub gray: GrayImage,
    pub resized: GrayImage,
    pub denoised: GrayImage,
    pub otsu_level: u8,
    pub binary: BinaryImage,
    pub edges: BinaryImage,
    pub dilated: BinaryImage,
    pub wrinkles: BinaryImage,
}

/// Full chain: grayscale, crop/resize, NL-means, scaled Otsu binarization,
/// Canny, disk dilation, inversion. Wrinkles come out black on white.
pub fn extract_wrinkles(img: &RgbImage, rect: Rect, p: &ImagingParams) -> Result<BinaryImage> {
    Ok(extract_wrinkles_stages(img, rect, p)?.wrinkles)
}

pub fn extract_wrinkles_stages(
    img: &RgbImage,
    rect: Rect,
    p: &ImagingParams,
) -> Result<WrinkleStages> {
    p.validate()?;
    let gray = to_grayscale(img);
    let resized = crop_resize(&gray, rect, p.out_size)?;
    let denoised = nl_means(&resized, p)?;
    let otsu_level = otsu_threshold(&denoised);
    let binary = binarize(&denoised, otsu_level, p.otsu_scale)?;
    let edges = canny(&binary, p)?;
    let dilated = dilate_disk(&edges, p.dilate_radius);
    let wrinkles = invert(&dilated);
    Ok(WrinkleStages {
        gray,
        resized,
        denoised,
        otsu_level,
        binary,
        edges,
        dilated,
        wrinkles,
    })
}

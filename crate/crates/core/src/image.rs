//! Plain row-major 8-bit image containers.

use std::ops::Deref;

use crate::error::{Error, Result};

/// Single-channel 8-bit image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!("empty image {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::Data(format!(
                "{width}x{height} image needs {} bytes, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    /// Image with every pixel set to `value`.
    ///
    /// Panics on a zero dimension.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        GrayImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut img = GrayImage::filled(width, height, 0);
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = f(x, y);
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub(crate) fn map(&self, f: impl Fn(u8) -> u8) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Three-channel 8-bit image, row-major interleaved `r, g, b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!("empty image {width}x{height}")));
        }
        if data.len() != 3 * width * height {
            return Err(Error::Data(format!(
                "{width}x{height} RGB image needs {} bytes, got {}",
                3 * width * height,
                data.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        RgbImage {
            width,
            height,
            data: rgb.repeat(width * height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Gray image whose pixels are all 0 or 255.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage(GrayImage);

impl BinaryImage {
    /// Checks that every pixel is 0 or 255.
    pub fn from_gray(img: GrayImage) -> Result<Self> {
        if let Some(v) = img.data.iter().find(|&&v| v != 0 && v != 255) {
            return Err(Error::Data(format!("binary image contains level {v}")));
        }
        Ok(BinaryImage(img))
    }

    pub(crate) fn from_gray_unchecked(img: GrayImage) -> Self {
        debug_assert!(img.data.iter().all(|&v| v == 0 || v == 255));
        BinaryImage(img)
    }

    pub fn filled(width: usize, height: usize, white: bool) -> Self {
        BinaryImage(GrayImage::filled(width, height, if white { 255 } else { 0 }))
    }

    pub fn is_white(&self, x: usize, y: usize) -> bool {
        self.0.get(x, y) == 255
    }

    pub fn count_white(&self) -> usize {
        self.0.data.iter().filter(|&&v| v == 255).count()
    }

    pub fn into_gray(self) -> GrayImage {
        self.0
    }
}

impl Deref for BinaryImage {
    type Target = GrayImage;

    fn deref(&self) -> &GrayImage {
        &self.0
    }
}

/// Axis-aligned pixel rectangle, `x`/`y` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Rect {
            x,
            y,
            width,
            height,
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Rect::new(0, 0, width, height)
    }

    pub(crate) fn check_inside(&self, img_w: usize, img_h: usize) -> Result<()> {
        let fits = self.width > 0
            && self.height > 0
            && self.x.checked_add(self.width).is_some_and(|r| r <= img_w)
            && self.y.checked_add(self.height).is_some_and(|b| b <= img_h);
        if fits {
            Ok(())
        } else {
            Err(Error::Bounds {
                x: self.x,
                y: self.y,
                w: self.width,
                h: self.height,
                img_w,
                img_h,
            })
        }
    }
}

/// Maps an out-of-range index back into `0..n` by mirroring about the edge
/// pixels without repeating them (`dcb|abcd|cba`).
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

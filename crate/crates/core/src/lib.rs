//! Learning cloth-flattening pull actions from images of wrinkled cloth.
//!
//! The crate is organised as a chain of stages:
//!
//! * [`imaging`] reduces a raw RGB scene to a binary wrinkle map
//!   (grayscale, crop/resize, NL-means, Otsu, Canny, disk dilation, inversion).
//! * [`datagen`] renders seeded synthetic scenes and labels them with a
//!   strategy oracle (perpendicular pull away from the pinned edge).
//! * [`features`] fits PCA over flattened wrinkle maps.
//! * [`model`] is the small sigmoid MLP with SGD, RMSprop and Adam.
//! * [`pipeline`] ties these together: standardization, splitting,
//!   training and evaluation.
//!
//! [`pnm`] and [`manifest`] hold the on-disk formats.

pub mod datagen;
pub mod error;
pub mod features;
pub mod image;
pub mod imaging;
pub mod manifest;
pub mod model;
pub mod pipeline;
pub mod pnm;

pub use error::{Error, Result};
pub use image::{BinaryImage, GrayImage, Rect, RgbImage};

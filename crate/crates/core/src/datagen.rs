//! Seeded synthetic wrinkled-cloth scenes and strategy-oracle labels.
//!
//! The cloth frame has its origin at the cloth center, `+x` to the right and
//! `+y` toward the pinned (top) edge. Scenes are rendered as a gray cloth on
//! a darker table with one bright ridge of Gaussian cross-section.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::{BinaryImage, Rect, RgbImage};
use crate::imaging::{extract_wrinkles, ImagingParams};
use crate::manifest::{Manifest, ManifestRecord};
use crate::pnm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WrinkleType {
    Horizontal,
    Vertical,
    Inclined,
    Flat,
}

impl WrinkleType {
    pub const ALL: [WrinkleType; 4] = [
        WrinkleType::Horizontal,
        WrinkleType::Vertical,
        WrinkleType::Inclined,
        WrinkleType::Flat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WrinkleType::Horizontal => "horizontal",
            WrinkleType::Vertical => "vertical",
            WrinkleType::Inclined => "inclined",
            WrinkleType::Flat => "flat",
        }
    }
}

impl fmt::Display for WrinkleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WrinkleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WrinkleType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Data(format!("unknown wrinkle type {s:?}")))
    }
}

/// One wrinkle: where it is, which way the ridge runs and how tall it is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrinkleSpec {
    pub kind: WrinkleType,
    /// Ridge center in the cloth frame, meters.
    pub center: (f64, f64),
    /// Ridge line angle, CCW from `+x`, in `(-π/2, π/2]`.
    pub orientation: f64,
    /// Ridge height in meters; drives rendered brightness and pull length.
    pub amplitude: f64,
    /// Full width at half maximum of the ridge cross-section, meters.
    pub ridge_width: f64,
}

impl WrinkleSpec {
    pub fn flat() -> Self {
        WrinkleSpec {
            kind: WrinkleType::Flat,
            center: (0.0, 0.0),
            orientation: 0.0,
            amplitude: 0.0,
            ridge_width: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.center.0,
            self.center.1,
            self.orientation,
            self.amplitude,
            self.ridge_width,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("wrinkle spec has non-finite fields"));
        }
        if self.amplitude < 0.0 || self.ridge_width < 0.0 {
            return Err(Error::param("wrinkle amplitude and width must be >= 0"));
        }
        if (self.amplitude == 0.0) != (self.kind == WrinkleType::Flat) {
            return Err(Error::param(format!(
                "{} wrinkle with amplitude {}: only flat cloth has zero amplitude",
                self.kind, self.amplitude
            )));
        }
        if !(self.orientation > -FRAC_PI_2 && self.orientation <= FRAC_PI_2) {
            return Err(Error::param(format!(
                "orientation {} outside (-pi/2, pi/2]",
                self.orientation
            )));
        }
        Ok(())
    }
}

/// Pull action: finger placement `(x, y)`, pull length `d`, direction `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Action {
    pub x: f64,
    pub y: f64,
    pub d: f64,
    pub theta: f64,
}

impl Action {
    pub const ZERO: Action = Action {
        x: 0.0,
        y: 0.0,
        d: 0.0,
        theta: 0.0,
    };

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.d, self.theta]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Action {
            x: a[0],
            y: a[1],
            d: a[2],
            theta: a[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClothFrame {
    /// Cloth extent along x, meters.
    pub width: f64,
    /// Cloth extent along y, meters.
    pub height: f64,
    /// Scene rendering scale.
    pub pixels_per_meter: f64,
}

impl Default for ClothFrame {
    fn default() -> Self {
        ClothFrame {
            width: 0.5,
            height: 0.4,
            pixels_per_meter: 320.0,
        }
    }
}

impl ClothFrame {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.width, self.height, self.pixels_per_meter]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !ok {
            return Err(Error::param("cloth frame dimensions must be positive"));
        }
        if self.cloth_pixels().0 < 1 || self.cloth_pixels().1 < 1 {
            return Err(Error::param("cloth frame renders to an empty image"));
        }
        Ok(())
    }

    fn cloth_pixels(&self) -> (usize, usize) {
        (
            (self.width * self.pixels_per_meter).round() as usize,
            (self.height * self.pixels_per_meter).round() as usize,
        )
    }

    fn margin_pixels(&self) -> usize {
        (TABLE_MARGIN * self.pixels_per_meter).round() as usize
    }

    /// Pixel rectangle covering exactly the cloth in a rendered scene.
    pub fn crop_rect(&self) -> Rect {
        let (cw, ch) = self.cloth_pixels();
        let m = self.margin_pixels();
        Rect::new(m, m, cw, ch)
    }

    pub fn scene_size(&self) -> (usize, usize) {
        let (cw, ch) = self.cloth_pixels();
        let m = self.margin_pixels();
        (cw + 2 * m, ch + 2 * m)
    }

    pub fn on_boundary(&self, x: f64, y: f64, tol: f64) -> bool {
        let (hw, hh) = (self.width / 2.0, self.height / 2.0);
        let inside = x.abs() <= hw + tol && y.abs() <= hh + tol;
        let on_edge = (x.abs() - hw).abs() <= tol || (y.abs() - hh).abs() <= tol;
        inside && on_edge
    }
}

/// Table visible around the cloth, meters.
const TABLE_MARGIN: f64 = 0.04;
const TABLE_RGB: [f64; 3] = [8.0, 8.0, 11.0];
const CLOTH_RGB: [f64; 3] = [19.0, 20.0, 23.0];
/// Ridge peak brightness per meter of amplitude.
const RIDGE_GAIN: f64 = 5800.0;
const SCENE_NOISE_SIGMA: f64 = 4.0;
const FWHM_TO_SIGMA: f64 = 0.424_660_900_144_009_5; // 1 / (2 sqrt(2 ln 2))

/// Ridge brightness added at cloth-frame point `(u, v)`.
fn ridge_intensity(spec: &WrinkleSpec, u: f64, v: f64) -> f64 {
    if spec.kind == WrinkleType::Flat || spec.ridge_width == 0.0 {
        return 0.0;
    }
    let dist = ridge_distance(spec, u, v);
    let s = spec.ridge_width * FWHM_TO_SIGMA;
    RIDGE_GAIN * spec.amplitude * (-(dist * dist) / (2.0 * s * s)).exp()
}

/// Perpendicular distance from `(u, v)` to the ridge line.
pub fn ridge_distance(spec: &WrinkleSpec, u: f64, v: f64) -> f64 {
    let (s, c) = spec.orientation.sin_cos();
    (-(u - spec.center.0) * s + (v - spec.center.1) * c).abs()
}

/// Cloth-frame coordinates of a scene pixel center.
pub fn pixel_to_cloth(frame: &ClothFrame, px: usize, py: usize) -> (f64, f64) {
    let rect = frame.crop_rect();
    let sx = rect.width as f64 / frame.width;
    let sy = rect.height as f64 / frame.height;
    let u = (px as f64 - rect.x as f64 + 0.5) / sx - frame.width / 2.0;
    let v = frame.height / 2.0 - (py as f64 - rect.y as f64 + 0.5) / sy;
    (u, v)
}

/// Renders a scene and returns it with the cloth crop rectangle.
pub fn gen_scene(spec: &WrinkleSpec, frame: &ClothFrame, seed: u64) -> Result<(RgbImage, Rect)> {
    spec.validate()?;
    frame.validate()?;
    let (w, h) = frame.scene_size();
    let rect = frame.crop_rect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, SCENE_NOISE_SIGMA).expect("positive sigma");
    let mut img = RgbImage::filled(w, h, [0, 0, 0]);
    for py in 0..h {
        for px in 0..w {
            let on_cloth = (rect.x..rect.x + rect.width).contains(&px)
                && (rect.y..rect.y + rect.height).contains(&py);
            let (base, ridge) = if on_cloth {
                let (u, v) = pixel_to_cloth(frame, px, py);
                (CLOTH_RGB, ridge_intensity(spec, u, v))
            } else {
                (TABLE_RGB, 0.0)
            };
            let mut rgb = [0u8; 3];
            for (c, out) in rgb.iter_mut().enumerate() {
                let v = base[c] + ridge + noise.sample(&mut rng);
                *out = v.round().clamp(0.0, 255.0) as u8;
            }
            img.set(px, py, rgb);
        }
    }
    Ok((img, rect))
}

/// Parameters of the strategy oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Labeling {
    /// Relative jitter applied to each label component.
    pub jitter_scale: f64,
    /// Pull length per meter of wrinkle amplitude.
    pub pull_gain: f64,
}

impl Default for Labeling {
    fn default() -> Self {
        Labeling {
            jitter_scale: 0.05,
            pull_gain: 2.0,
        }
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Where a ray from `from` in direction `theta` leaves the cloth rectangle.
/// The coordinate of the edge that is hit is set exactly.
fn ray_exit(frame: &ClothFrame, from: (f64, f64), theta: f64) -> (f64, f64) {
    let (hw, hh) = (frame.width / 2.0, frame.height / 2.0);
    let (s, c) = theta.sin_cos();
    const EPS: f64 = 1e-12;
    let tx = if c > EPS {
        (hw - from.0) / c
    } else if c < -EPS {
        (-hw - from.0) / c
    } else {
        f64::INFINITY
    };
    let ty = if s > EPS {
        (hh - from.1) / s
    } else if s < -EPS {
        (-hh - from.1) / s
    } else {
        f64::INFINITY
    };
    if tx <= ty {
        let x = if c > 0.0 { hw } else { -hw };
        (x, (from.1 + tx * s).clamp(-hh, hh))
    } else {
        let y = if s > 0.0 { hh } else { -hh };
        ((from.0 + ty * c).clamp(-hw, hw), y)
    }
}

/// Strategy oracle: pull perpendicular to the ridge, away from the pinned
/// edge, starting where that pull line through the wrinkle center meets the
/// cloth edge, with length proportional to the wrinkle amplitude.
/// Flat cloth is always the zero action.
pub fn oracle_action(
    spec: &WrinkleSpec,
    frame: &ClothFrame,
    jitter_seed: u64,
    labeling: &Labeling,
) -> Result<Action> {
    spec.validate()?;
    frame.validate()?;
    if spec.kind == WrinkleType::Flat {
        return Ok(Action::ZERO);
    }
    // orientation in (-π/2, π/2] puts theta in (-π, 0]: never toward the pin
    let theta = spec.orientation - FRAC_PI_2;
    let (x, y) = ray_exit(frame, spec.center, theta);
    let d = labeling.pull_gain * spec.amplitude;
    let js = labeling.jitter_scale;
    if js == 0.0 {
        return Ok(Action { x, y, d, theta });
    }
    if !(js > 0.0 && js.is_finite()) {
        return Err(Error::param(format!("jitter_scale must be >= 0, got {js}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(jitter_seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut n = || unit.sample(&mut rng);
    Ok(Action {
        x: x + js * frame.width * n(),
        y: y + js * frame.width * n(),
        d: (d + js * d * n()).max(0.0),
        theta: wrap_angle(theta + js * n()),
    })
}

/// Number of samples of each wrinkle type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetCounts {
    pub horizontal: usize,
    pub vertical: usize,
    pub inclined: usize,
    pub flat: usize,
}

impl Default for DatasetCounts {
    fn default() -> Self {
        DatasetCounts {
            horizontal: 38,
            vertical: 37,
            inclined: 37,
            flat: 10,
        }
    }
}

impl DatasetCounts {
    pub fn total(&self) -> usize {
        self.horizontal + self.vertical + self.inclined + self.flat
    }

    pub fn get(&self, kind: WrinkleType) -> usize {
        match kind {
            WrinkleType::Horizontal => self.horizontal,
            WrinkleType::Vertical => self.vertical,
            WrinkleType::Inclined => self.inclined,
            WrinkleType::Flat => self.flat,
        }
    }

    /// Sample kinds in generation order: all horizontal, then vertical,
    /// inclined and flat.
    pub fn kinds(&self) -> Vec<WrinkleType> {
        WrinkleType::ALL
            .into_iter()
            .flat_map(|k| std::iter::repeat_n(k, self.get(k)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub counts: DatasetCounts,
    pub frame: ClothFrame,
    pub labeling: Labeling,
    pub imaging: ImagingParams,
    pub variation: Variation,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            counts: DatasetCounts::default(),
            frame: ClothFrame::default(),
            labeling: Labeling::default(),
            imaging: ImagingParams::default(),
            variation: Variation::default(),
            seed: 2024,
        }
    }
}

/// Amplitude range shared by all wrinkled types, meters.
pub const AMPLITUDE_RANGE: (f64, f64) = (0.01, 0.04);

/// How much wrinkles of one type differ from each other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variation {
    /// Half-extent of the box wrinkle centers are drawn from, meters.
    pub center_spread: f64,
    /// Half-width of each type's orientation range, radians.
    pub orientation_spread: f64,
    /// Ridge FWHM per meter of amplitude: taller folds are also wider.
    pub ridge_width_per_amplitude: f64,
}

impl Default for Variation {
    fn default() -> Self {
        Variation {
            center_spread: 0.03,
            orientation_spread: 0.1,
            ridge_width_per_amplitude: 3.0,
        }
    }
}

impl Variation {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.center_spread, self.orientation_spread, self.ridge_width_per_amplitude]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0);
        if !ok || self.ridge_width_per_amplitude == 0.0 {
            return Err(Error::param("variation settings must be finite and non-negative, ridge width positive"));
        }
        if self.orientation_spread > FRAC_PI_4 / 2.0 {
            return Err(Error::param("orientation_spread above π/8 lets wrinkle types overlap"));
        }
        Ok(())
    }

    /// Orientation range for each wrinkled type, inside `(-π/2, π/2]`.
    ///
    /// Vertical ridges lean one way only so that the pull direction does
    /// not wrap around ±π.
    pub fn orientation_range(&self, kind: WrinkleType) -> Option<(f64, f64)> {
        let s = self.orientation_spread;
        match kind {
            WrinkleType::Horizontal => Some((-s, s)),
            WrinkleType::Vertical => Some((FRAC_PI_2 - 2.0 * s, FRAC_PI_2)),
            WrinkleType::Inclined => Some((FRAC_PI_4 - s, FRAC_PI_4 + s)),
            WrinkleType::Flat => None,
        }
    }

    /// Draws a wrinkle of the given type.
    pub fn sample_spec(&self, kind: WrinkleType, rng: &mut impl Rng) -> WrinkleSpec {
        let Some((lo, hi)) = self.orientation_range(kind) else {
            return WrinkleSpec::flat();
        };
        let c = self.center_spread;
        let center = (rng.random_range(-c..=c), rng.random_range(-c..=c));
        let orientation = rng.random_range(lo..=hi);
        let amplitude = rng.random_range(AMPLITUDE_RANGE.0..=AMPLITUDE_RANGE.1);
        WrinkleSpec {
            kind,
            center,
            orientation,
            amplitude,
            ridge_width: self.ridge_width_per_amplitude * amplitude,
        }
    }
}

/// 64-bit FNV-1a over the little-endian bytes of `master` then `index`.
pub fn sample_seed(master: u64, index: u64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    master
        .to_le_bytes()
        .into_iter()
        .chain(index.to_le_bytes())
        .fold(OFFSET, |h, b| (h ^ b as u64).wrapping_mul(PRIME))
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub index: usize,
    pub spec: WrinkleSpec,
    pub scene: RgbImage,
    pub crop: Rect,
    pub processed: BinaryImage,
    pub action: Action,
}

impl Sample {
    pub fn kind(&self) -> WrinkleType {
        self.spec.kind
    }
}

/// Generates sample `index` of a dataset; depends only on the master seed,
/// the index and the sample's kind.
pub fn gen_sample(cfg: &GenConfig, index: usize, kind: WrinkleType) -> Result<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, index as u64));
    let spec = cfg.variation.sample_spec(kind, &mut rng);
    let scene_seed: u64 = rng.random();
    let jitter_seed: u64 = rng.random();
    let (scene, crop) = gen_scene(&spec, &cfg.frame, scene_seed)?;
    let processed = extract_wrinkles(&scene, crop, &cfg.imaging)?;
    let action = oracle_action(&spec, &cfg.frame, jitter_seed, &cfg.labeling)?;
    Ok(Sample {
        index,
        spec,
        scene,
        crop,
        processed,
        action,
    })
}

/// All samples of a dataset, in manifest order.
pub fn gen_samples(cfg: &GenConfig) -> Result<Vec<Sample>> {
    cfg.frame.validate()?;
    cfg.imaging.validate()?;
    cfg.variation.validate()?;
    cfg.counts
        .kinds()
        .into_iter()
        .enumerate()
        .map(|(i, kind)| gen_sample(cfg, i, kind))
        .collect()
}

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const PROVENANCE_FILE: &str = "provenance.txt";

/// Generates a dataset into `out_dir`: `scenes/*.ppm`, `processed/*.pgm`,
/// `manifest.csv` and a `provenance.txt` with the generation settings.
pub fn gen_dataset(cfg: &GenConfig, out_dir: &Path) -> Result<Manifest> {
    let samples = gen_samples(cfg)?;
    write_dataset(cfg, &samples, out_dir)
}

pub fn write_dataset(cfg: &GenConfig, samples: &[Sample], out_dir: &Path) -> Result<Manifest> {
    for sub in ["scenes", "processed"] {
        let dir = out_dir.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let mut records = Vec::with_capacity(samples.len());
    for s in samples {
        let stem = format!("{:04}_{}", s.index, s.kind());
        let image = format!("scenes/{stem}.ppm");
        let processed = format!("processed/{stem}.pgm");
        pnm::write_ppm(out_dir.join(&image), &s.scene)?;
        pnm::write_pgm(out_dir.join(&processed), &s.processed)?;
        records.push(ManifestRecord {
            image,
            processed,
            kind: s.kind(),
            action: s.action,
        });
    }
    let manifest = Manifest { records };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    let prov = out_dir.join(PROVENANCE_FILE);
    fs::write(&prov, provenance(cfg)).map_err(|e| Error::io(&prov, e))?;
    Ok(manifest)
}

fn provenance(cfg: &GenConfig) -> String {
    let r = cfg.frame.crop_rect();
    format!(
        "seed={}\ncount_horizontal={}\ncount_vertical={}\ncount_inclined={}\ncount_flat={}\n\
         cloth_width={}\ncloth_height={}\npixels_per_meter={}\njitter_scale={}\npull_gain={}\n\
         center_spread={}\norientation_spread={}\nridge_width_per_amplitude={}\ncrop={},{},{},{}\n",
        cfg.seed,
        cfg.counts.horizontal,
        cfg.counts.vertical,
        cfg.counts.inclined,
        cfg.counts.flat,
        cfg.frame.width,
        cfg.frame.height,
        cfg.frame.pixels_per_meter,
        cfg.labeling.jitter_scale,
        cfg.labeling.pull_gain,
        cfg.variation.center_spread,
        cfg.variation.orientation_spread,
        cfg.variation.ridge_width_per_amplitude,
        r.x,
        r.y,
        r.width,
        r.height,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zero_jitter() -> Labeling {
        Labeling {
            jitter_scale: 0.0,
            ..Labeling::default()
        }
    }

    fn spec(kind: WrinkleType, orientation: f64, amplitude: f64) -> WrinkleSpec {
        WrinkleSpec {
            kind,
            center: (0.0, 0.0),
            orientation,
            amplitude,
            ridge_width: 3.0 * amplitude,
        }
    }

    #[test]
    fn flat_is_zero_action() {
        let f = ClothFrame::default();
        for seed in 0..20 {
            let a = oracle_action(&WrinkleSpec::flat(), &f, seed, &Labeling::default()).unwrap();
            assert_eq!(a, Action::ZERO);
        }
    }

    #[test]
    fn vertical_pulls_sideways_from_a_side_edge() {
        let f = ClothFrame::default();
        let a = oracle_action(&spec(WrinkleType::Vertical, FRAC_PI_2, 0.02), &f, 0, &zero_jitter()).unwrap();
        assert!(a.theta == 0.0 || a.theta == PI);
        assert_eq!(a.x.abs(), f.width / 2.0);
        assert!(a.y.abs() < 1e-12);
        assert!((a.d - 0.04).abs() < 1e-15);
    }

    #[test]
    fn horizontal_pulls_down_from_bottom_edge() {
        let f = ClothFrame::default();
        let a = oracle_action(&spec(WrinkleType::Horizontal, 0.0, 0.02), &f, 0, &zero_jitter()).unwrap();
        assert_eq!(a.theta, -FRAC_PI_2);
        assert_eq!(a.y, -f.height / 2.0);
        assert!(a.x.abs() < 1e-12);
    }

    #[test]
    fn inclined_pulls_toward_lower_right() {
        let f = ClothFrame::default();
        let a = oracle_action(&spec(WrinkleType::Inclined, FRAC_PI_4, 0.03), &f, 0, &zero_jitter()).unwrap();
        assert!((a.theta + FRAC_PI_4).abs() < 1e-15);
        // 45° ray from the center hits the bottom edge first (0.2 < 0.25)
        assert_eq!(a.y, -0.2);
        assert!((a.x - 0.2).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(spec(WrinkleType::Flat, 0.0, 0.01).validate().is_err());
        assert!(spec(WrinkleType::Horizontal, 0.0, 0.0).validate().is_err());
        assert!(spec(WrinkleType::Horizontal, -FRAC_PI_2, 0.01).validate().is_err());
        assert!(spec(WrinkleType::Vertical, FRAC_PI_2, 0.01).validate().is_ok());
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-12);
        assert!((wrap_angle(0.1 - 4.0 * PI) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn fnv_reference_values() {
        // FNV-1a 64 of sixteen zero bytes
        let mut h: u64 = 0xcbf29ce484222325;
        for _ in 0..16 {
            h = h.wrapping_mul(0x100000001b3);
        }
        assert_eq!(sample_seed(0, 0), h);
        assert_ne!(sample_seed(1, 0), sample_seed(0, 1));
    }

    #[test]
    fn flat_scene_is_uniform_cloth() {
        let f = ClothFrame::default();
        let (img, rect) = gen_scene(&WrinkleSpec::flat(), &f, 5).unwrap();
        let mut sum = 0.0;
        let mut n = 0.0;
        for y in rect.y..rect.y + rect.height {
            for x in rect.x..rect.x + rect.width {
                let p = img.get(x, y);
                sum += p[0] as f64;
                n += 1.0;
                assert!((p[0] as f64 - CLOTH_RGB[0]).abs() < 6.0 * SCENE_NOISE_SIGMA);
            }
        }
        assert!((sum / n - CLOTH_RGB[0]).abs() < 0.5);
    }

    #[test]
    fn inclined_scene_brightest_along_ridge() {
        let f = ClothFrame::default();
        let s = WrinkleSpec {
            ridge_width: 0.03,
            ..spec(WrinkleType::Inclined, FRAC_PI_4, 0.03)
        };
        let (img, rect) = gen_scene(&s, &f, 9).unwrap();
        let lum = |x: usize, y: usize| img.get(x, y).iter().map(|&c| c as u32).sum::<u32>();
        let mut px: Vec<(u32, usize, usize)> = (rect.y..rect.y + rect.height)
            .flat_map(|y| (rect.x..rect.x + rect.width).map(move |x| (x, y)))
            .map(|(x, y)| (lum(x, y), x, y))
            .collect();
        px.sort_unstable_by(|a, b| b.cmp(a));
        for &(_, x, y) in px.iter().take(200) {
            let (u, v) = pixel_to_cloth(&f, x, y);
            // 45° line through the center: v = u
            let dist = (v - u).abs() / 2f64.sqrt();
            assert!(dist <= s.ridge_width, "({u:.3},{v:.3}) is {dist:.4} m off the ridge");
        }
    }

    #[test]
    fn scenes_are_seeded() {
        let f = ClothFrame::default();
        let s = spec(WrinkleType::Horizontal, 0.05, 0.02);
        assert_eq!(gen_scene(&s, &f, 1).unwrap(), gen_scene(&s, &f, 1).unwrap());
        assert_ne!(gen_scene(&s, &f, 1).unwrap().0, gen_scene(&s, &f, 2).unwrap().0);
    }

    #[test]
    fn counts_and_order() {
        let c = DatasetCounts::default();
        assert_eq!(c.total(), 122);
        let kinds = c.kinds();
        assert_eq!(kinds.len(), 122);
        for k in WrinkleType::ALL {
            assert_eq!(kinds.iter().filter(|&&x| x == k).count(), c.get(k));
        }
        assert_eq!(kinds[37], WrinkleType::Horizontal);
        assert_eq!(kinds[38], WrinkleType::Vertical);
        assert_eq!(kinds[121], WrinkleType::Flat);
    }

    #[test]
    fn single_flat_dataset() {
        let cfg = GenConfig {
            counts: DatasetCounts { horizontal: 0, vertical: 0, inclined: 0, flat: 1 },
            ..GenConfig::default()
        };
        let samples = gen_samples(&cfg).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].action, Action::ZERO);
        assert_eq!(samples[0].processed.count_white(), 100 * 100);
    }

    #[test]
    fn sampled_specs_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            for k in WrinkleType::ALL {
                let s = Variation::default().sample_spec(k, &mut rng);
                s.validate().unwrap();
                assert_eq!(s.kind, k);
                if k != WrinkleType::Flat {
                    assert!((AMPLITUDE_RANGE.0..=AMPLITUDE_RANGE.1).contains(&s.amplitude));
                }
            }
        }
    }

    fn any_wrinkled() -> impl Strategy<Value = WrinkleSpec> {
        (0usize..3, -0.2f64..0.2, -0.15f64..0.15, -1.5f64..=FRAC_PI_2, 0.005f64..0.05).prop_map(
            |(k, u, v, o, a)| WrinkleSpec {
                kind: WrinkleType::ALL[k],
                center: (u, v),
                orientation: o,
                amplitude: a,
                ridge_width: 0.03,
            },
        )
    }

    proptest! {
        #[test]
        fn zero_jitter_is_perpendicular_on_boundary_and_linear(s in any_wrinkled()) {
            let f = ClothFrame::default();
            let a = oracle_action(&s, &f, 0, &zero_jitter()).unwrap();
            prop_assert!((a.theta - s.orientation).cos().abs() < 1e-12);
            prop_assert!(f.on_boundary(a.x, a.y, 1e-9));
            prop_assert!(a.theta > -PI && a.theta <= PI);
            prop_assert!(a.theta.sin() <= 1e-12);
            let doubled = WrinkleSpec { amplitude: 2.0 * s.amplitude, ..s };
            let b = oracle_action(&doubled, &f, 0, &zero_jitter()).unwrap();
            prop_assert_eq!(b.d, 2.0 * a.d);
        }

        #[test]
        fn jittered_actions_are_well_formed(s in any_wrinkled(), seed in any::<u64>()) {
            let f = ClothFrame::default();
            let a = oracle_action(&s, &f, seed, &Labeling::default()).unwrap();
            prop_assert!(a.d >= 0.0);
            prop_assert!(a.theta > -PI && a.theta <= PI);
            prop_assert_eq!(a, oracle_action(&s, &f, seed, &Labeling::default()).unwrap());
        }
    }
}

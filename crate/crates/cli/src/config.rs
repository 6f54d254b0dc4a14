//! Flat `key = value` configuration with `#` comments.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clothflat::datagen::GenConfig;
use clothflat::features::DEFAULT_VARIANCE_THRESHOLD;
use clothflat::model::TrainHyper;
use clothflat::pipeline::DEFAULT_TRAIN_FRACTION;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Scene rendering, labeling and extraction settings; `gen.seed` is the
    /// dataset seed.
    pub gen: GenConfig,
    pub hyper: TrainHyper,
    pub split_seed: u64,
    pub train_fraction: f64,
    pub variance_threshold: f64,
    /// Forced component count; `None` picks it from the variance threshold.
    pub k: Option<usize>,
    pub data_dir: PathBuf,
    pub run_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            gen: GenConfig::default(),
            hyper: TrainHyper::default(),
            split_seed: 3,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            variance_threshold: DEFAULT_VARIANCE_THRESHOLD,
            k: None,
            data_dir: PathBuf::from("data"),
            run_dir: PathBuf::from("run"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow::anyhow!("invalid value {value:?} for {key}: {e}"))
}

impl Config {
    pub const KEYS: [&'static str; 34] = [
        "dataset_seed",
        "count_horizontal",
        "count_vertical",
        "count_inclined",
        "count_flat",
        "cloth_width",
        "cloth_height",
        "pixels_per_meter",
        "jitter_scale",
        "pull_gain",
        "center_spread",
        "orientation_spread",
        "ridge_width_per_amplitude",
        "otsu_scale",
        "nlm_patch",
        "nlm_search",
        "nlm_strength",
        "canny_low",
        "canny_high",
        "dilate_radius",
        "out_size",
        "optimizer",
        "lr0",
        "beta1",
        "beta2",
        "epsilon",
        "l2",
        "drop_factor",
        "drop_every",
        "max_epochs",
        "batch_size",
        "init_seed",
        "shuffle_seed",
        "split_seed",
    ];

    const EXTRA_KEYS: [&'static str; 5] = ["train_fraction", "variance_threshold", "k", "data_dir", "run_dir"];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let g = &mut self.gen;
        let h = &mut self.hyper;
        match key {
            "dataset_seed" => g.seed = parse(key, value)?,
            "count_horizontal" => g.counts.horizontal = parse(key, value)?,
            "count_vertical" => g.counts.vertical = parse(key, value)?,
            "count_inclined" => g.counts.inclined = parse(key, value)?,
            "count_flat" => g.counts.flat = parse(key, value)?,
            "cloth_width" => g.frame.width = parse(key, value)?,
            "cloth_height" => g.frame.height = parse(key, value)?,
            "pixels_per_meter" => g.frame.pixels_per_meter = parse(key, value)?,
            "jitter_scale" => g.labeling.jitter_scale = parse(key, value)?,
            "pull_gain" => g.labeling.pull_gain = parse(key, value)?,
            "center_spread" => g.variation.center_spread = parse(key, value)?,
            "orientation_spread" => g.variation.orientation_spread = parse(key, value)?,
            "ridge_width_per_amplitude" => g.variation.ridge_width_per_amplitude = parse(key, value)?,
            "otsu_scale" => g.imaging.otsu_scale = parse(key, value)?,
            "nlm_patch" => g.imaging.nlm_patch = parse(key, value)?,
            "nlm_search" => g.imaging.nlm_search = parse(key, value)?,
            "nlm_strength" => g.imaging.nlm_strength = parse(key, value)?,
            "canny_low" => g.imaging.canny_low = parse(key, value)?,
            "canny_high" => g.imaging.canny_high = parse(key, value)?,
            "dilate_radius" => g.imaging.dilate_radius = parse(key, value)?,
            "out_size" => g.imaging.out_size = parse(key, value)?,
            "optimizer" => h.optimizer = parse(key, value)?,
            "lr0" => h.lr0 = parse(key, value)?,
            "beta1" => h.beta1 = parse(key, value)?,
            "beta2" => h.beta2 = parse(key, value)?,
            "epsilon" => h.epsilon = parse(key, value)?,
            "l2" => h.l2 = parse(key, value)?,
            "drop_factor" => h.drop_factor = parse(key, value)?,
            "drop_every" => h.drop_every = parse(key, value)?,
            "max_epochs" => h.max_epochs = parse(key, value)?,
            "batch_size" => h.batch_size = parse(key, value)?,
            "init_seed" => h.init_seed = parse(key, value)?,
            "shuffle_seed" => h.shuffle_seed = parse(key, value)?,
            "split_seed" => self.split_seed = parse(key, value)?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "variance_threshold" => self.variance_threshold = parse(key, value)?,
            "k" => {
                let k: usize = parse(key, value)?;
                self.k = (k > 0).then_some(k);
            }
            "data_dir" => self.data_dir = PathBuf::from(value),
            "run_dir" => self.run_dir = PathBuf::from(value),
            _ => bail!("unknown key {key:?}"),
        }
        Ok(())
    }

    /// Every setting in `key = value` form, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let g = &self.gen;
        let h = &self.hyper;
        let values = [
            g.seed.to_string(),
            g.counts.horizontal.to_string(),
            g.counts.vertical.to_string(),
            g.counts.inclined.to_string(),
            g.counts.flat.to_string(),
            g.frame.width.to_string(),
            g.frame.height.to_string(),
            g.frame.pixels_per_meter.to_string(),
            g.labeling.jitter_scale.to_string(),
            g.labeling.pull_gain.to_string(),
            g.variation.center_spread.to_string(),
            g.variation.orientation_spread.to_string(),
            g.variation.ridge_width_per_amplitude.to_string(),
            g.imaging.otsu_scale.to_string(),
            g.imaging.nlm_patch.to_string(),
            g.imaging.nlm_search.to_string(),
            g.imaging.nlm_strength.to_string(),
            g.imaging.canny_low.to_string(),
            g.imaging.canny_high.to_string(),
            g.imaging.dilate_radius.to_string(),
            g.imaging.out_size.to_string(),
            h.optimizer.name().to_string(),
            h.lr0.to_string(),
            h.beta1.to_string(),
            h.beta2.to_string(),
            h.epsilon.to_string(),
            h.l2.to_string(),
            h.drop_factor.to_string(),
            h.drop_every.to_string(),
            h.max_epochs.to_string(),
            h.batch_size.to_string(),
            h.init_seed.to_string(),
            h.shuffle_seed.to_string(),
            self.split_seed.to_string(),
        ];
        let mut out: Vec<(&'static str, String)> = Config::KEYS.into_iter().zip(values).collect();
        let extra = [
            self.train_fraction.to_string(),
            self.variance_threshold.to_string(),
            self.k.unwrap_or(0).to_string(),
            self.data_dir.display().to_string(),
            self.run_dir.display().to_string(),
        ];
        out.extend(Config::EXTRA_KEYS.into_iter().zip(extra));
        out
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# clothflat configuration (k = 0 picks k from variance_threshold)\n");
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Parses a config file body; settings not mentioned keep their defaults.
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {n}: expected key = value, got {line:?}");
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                bail!("config line {n}: duplicate key {key:?}");
            }
            cfg.set(key, value).with_context(|| format!("config line {n}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.gen.frame.validate()?;
        self.gen.imaging.validate()?;
        self.gen.variation.validate()?;
        self.hyper.validate()?;
        let js = self.gen.labeling.jitter_scale;
        if !(js >= 0.0 && js.is_finite()) || !(self.gen.labeling.pull_gain >= 0.0) {
            bail!("jitter_scale and pull_gain must be non-negative");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction must lie in (0, 1)");
        }
        if !(self.variance_threshold > 0.0 && self.variance_threshold <= 1.0) {
            bail!("variance_threshold must lie in (0, 1]");
        }
        Ok(())
    }
}

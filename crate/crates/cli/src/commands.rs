use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clothflat::datagen::{gen_samples, write_dataset, MANIFEST_FILE};
use clothflat::features::{choose_k, explained_curve, fit_pca, max_components, PcaModel};
use clothflat::imaging::extract_wrinkles;
use clothflat::manifest::fmt_sig9;
use clothflat::model::MlpModel;
use clothflat::pipeline::{evaluate, parse_report, predict_image, split, train as train_model, Dataset};
use clothflat::{pnm, Rect, RgbImage};

use crate::config::Config;
use crate::output::Staged;
use crate::{svg, Subset};

pub const PCA_FILE: &str = "pca.pca1";
pub const MODEL_FILE: &str = "model.mlp1";
pub const HISTORY_FILE: &str = "history.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const SVG_FILE: &str = "actions.svg";

pub fn default_manifest(cfg: &Config) -> PathBuf {
    cfg.data_dir.join(MANIFEST_FILE)
}

pub fn generate(cfg: &Config, out: &Path) -> Result<()> {
    let samples = gen_samples(&cfg.gen)?;
    let mut staged = Staged::new();
    let tmp = staged.path(out)?;
    let manifest = write_dataset(&cfg.gen, &samples, &tmp)?;
    staged.commit()?;
    println!("wrote {} samples to {}", manifest.len(), out.display());
    Ok(())
}

/// Crop for a scene: the explicit one, else the cloth area when the image
/// has the rendered scene size, else the whole image.
fn scene_crop(cfg: &Config, img: &RgbImage, crop: Option<Rect>) -> Rect {
    crop.unwrap_or_else(|| {
        if (img.width(), img.height()) == cfg.gen.frame.scene_size() {
            cfg.gen.frame.crop_rect()
        } else {
            Rect::full(img.width(), img.height())
        }
    })
}

pub fn process(cfg: &Config, image: &Path, out: &Path, crop: Option<Rect>) -> Result<()> {
    let scene = pnm::read_ppm(image)?;
    let rect = scene_crop(cfg, &scene, crop);
    let map = extract_wrinkles(&scene, rect, &cfg.gen.imaging)?;
    let mut staged = Staged::new();
    pnm::write_pgm(staged.path(out)?, &map)?;
    staged.commit()
}

/// Fits PCA on every row and keeps the forced or threshold-selected count.
fn fit_components(cfg: &Config, dataset: &Dataset) -> Result<(PcaModel, Vec<f64>)> {
    let data = dataset.data_matrix()?;
    let kmax = max_components(data.rows(), data.cols());
    if kmax == 0 {
        bail!("PCA needs at least two samples");
    }
    let full = fit_pca(&data, kmax)?;
    let curve = explained_curve(&full)?;
    let k = match cfg.k {
        Some(k) if k > kmax => bail!("k = {k} exceeds the {kmax} components this dataset supports"),
        Some(k) => k,
        None => choose_k(&curve, cfg.variance_threshold)?,
    };
    Ok((full.truncate(k)?, curve))
}

pub fn pca(cfg: &Config, manifest: &Path, out: &Path) -> Result<()> {
    let dataset = Dataset::load(manifest)?;
    let (model, curve) = fit_components(cfg, &dataset)?;
    let mut staged = Staged::new();
    model.write(&staged.path(out)?)?;
    staged.commit()?;
    let k = model.k();
    println!("k = {k}, explained variance {:.4}", curve[k - 1]);
    Ok(())
}

pub fn train(cfg: &Config, manifest: &Path, out: &Path) -> Result<()> {
    let dataset = Dataset::load(manifest)?;
    let (pca, curve) = fit_components(cfg, &dataset)?;
    let sp = split(dataset.len(), cfg.train_fraction, cfg.split_seed)?;
    let outcome = train_model(&dataset, &sp, &pca, &cfg.hyper)?;

    let mut staged = Staged::new();
    pca.write(&staged.path(&out.join(PCA_FILE))?)?;
    outcome.model.write(&staged.path(&out.join(MODEL_FILE))?)?;
    outcome.history.write(&staged.path(&out.join(HISTORY_FILE))?)?;
    staged.commit()?;

    let k = pca.k();
    println!("k = {k} (explained variance {:.4})", curve[k - 1]);
    println!("split {} train / {} val, optimizer {}", sp.train.len(), sp.val.len(), cfg.hyper.optimizer.name());
    if let Some(last) = outcome.history.last() {
        println!(
            "epoch {}: train RMSE {}, val RMSE {} (standardized)",
            last.epoch,
            fmt_sig9(last.train_rmse),
            fmt_sig9(last.val_rmse)
        );
    }
    Ok(())
}

fn load_models(model: &Path, pca: &Path) -> Result<(MlpModel, PcaModel)> {
    let m = MlpModel::read(model)?;
    let p = PcaModel::read(pca)?;
    if m.input_size() != p.k() {
        bail!(
            "{} expects {} features but {} has {} components",
            model.display(),
            m.input_size(),
            pca.display(),
            p.k()
        );
    }
    Ok((m, p))
}

pub fn eval(cfg: &Config, model: &Path, pca: &Path, manifest: &Path, subset: Subset, report: &Path) -> Result<()> {
    let (m, p) = load_models(model, pca)?;
    let dataset = Dataset::load(manifest)?;
    let indices: Vec<usize> = match subset {
        Subset::All => (0..dataset.len()).collect(),
        Subset::Train => split(dataset.len(), cfg.train_fraction, cfg.split_seed)?.train,
        Subset::Val => split(dataset.len(), cfg.train_fraction, cfg.split_seed)?.val,
    };
    let ev = evaluate(&m, &p, &dataset, Some(&indices)).context("evaluating")?;
    let mut staged = Staged::new();
    ev.write_report(&staged.path(report)?)?;
    staged.commit()?;

    println!("{:<8}{:>12}{:>12}{:>12}{:>12}", "samples", "x (m)", "y (m)", "d (m)", "theta (rad)");
    let r = ev.rmse;
    println!("{:<8}{:>12.6}{:>12.6}{:>12.6}{:>12.6}", ev.predictions.len(), r[0], r[1], r[2], r[3]);
    Ok(())
}

pub fn predict(cfg: &Config, model: &Path, pca: &Path, image: &Path, crop: Option<Rect>) -> Result<()> {
    let (m, p) = load_models(model, pca)?;
    let scene = pnm::read_ppm(image)?;
    let rect = scene_crop(cfg, &scene, crop);
    let map = extract_wrinkles(&scene, rect, &cfg.gen.imaging)?;
    if map.len() != p.dim() {
        bail!("wrinkle map has {} pixels, PCA expects {}", map.len(), p.dim());
    }
    let a = predict_image(&m, &p, &map)?;
    println!("{} {} {} {}", fmt_sig9(a.x), fmt_sig9(a.y), fmt_sig9(a.d), fmt_sig9(a.theta));
    Ok(())
}

pub fn render(cfg: &Config, report: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
    let predictions = parse_report(&text).with_context(|| format!("in {}", report.display()))?;
    let body = svg::render(&predictions, &cfg.gen.frame);
    let mut staged = Staged::new();
    let tmp = staged.path(out)?;
    fs::write(&tmp, body).with_context(|| format!("writing {}", out.display()))?;
    staged.commit()
}

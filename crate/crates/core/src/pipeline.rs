//! Dataset assembly, target standardization, train/validation split, the
//! training loop and evaluation in physical units.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::{Action, Sample, WrinkleType};
use crate::error::{Error, Result};
use crate::features::{image_to_row, DataMatrix, PcaModel};
use crate::image::GrayImage;
use crate::manifest::{fmt_sig9, Manifest};
use crate::model::{init_mlp, loss_and_grads, lr_at, MlpModel, Optimizer, TrainHyper};
use crate::pnm;

/// Hidden widths between the PCA features and the four action outputs.
pub const HIDDEN_LAYERS: [usize; 4] = [10, 15, 24, 10];
pub const ACTION_DIM: usize = 4;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;

/// Columns whose spread falls below this are left unscaled.
const MIN_STD: f64 = 1e-8;

/// `k → 10 → 15 → 24 → 10 → 4`.
pub fn layer_sizes(k: usize) -> Vec<usize> {
    let mut sizes = vec![k];
    sizes.extend(HIDDEN_LAYERS);
    sizes.push(ACTION_DIM);
    sizes
}

/// Per-column z-score statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl StandardStats {
    pub fn new(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        if means.len() != stds.len() {
            return Err(Error::param(format!("{} means but {} stds", means.len(), stds.len())));
        }
        if stds.iter().any(|s| !(*s > 0.0 && s.is_finite())) || means.iter().any(|m| !m.is_finite()) {
            return Err(Error::param("means must be finite and stds positive"));
        }
        Ok(StandardStats { means, stds })
    }

    pub fn identity(n: usize) -> Self {
        StandardStats {
            means: vec![0.0; n],
            stds: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    fn check(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim() {
            return Err(Error::param(format!("row has {} values, stats cover {}", row.len(), self.dim())));
        }
        Ok(())
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row)?;
        Ok(row.iter().zip(self.means.iter().zip(&self.stds)).map(|(v, (m, s))| (v - m) / s).collect())
    }

    pub fn inverse_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row)?;
        Ok(row.iter().zip(self.means.iter().zip(&self.stds)).map(|(v, (m, s))| v * s + m).collect())
    }
}

/// Column means and population standard deviations of `rows`.
pub fn standardize_fit(rows: &[Vec<f64>]) -> Result<StandardStats> {
    if rows.len() < 2 {
        return Err(Error::param(format!("need at least 2 rows to standardize, got {}", rows.len())));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::param("rows differ in length"));
    }
    let n = rows.len() as f64;
    let means: Vec<f64> = (0..dim).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n).collect();
    let stds = (0..dim)
        .map(|c| {
            let var = rows.iter().map(|r| (r[c] - means[c]).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            if s < MIN_STD { 1.0 } else { s }
        })
        .collect();
    StandardStats::new(means, stds)
}

pub fn standardize_apply(stats: &StandardStats, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    rows.iter().map(|r| stats.apply_row(r)).collect()
}

pub fn standardize_inverse(stats: &StandardStats, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    rows.iter().map(|r| stats.inverse_row(r)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// Seeded permutation of `0..n`; the first `⌊fraction·n⌋` indices train.
pub fn split(n: usize, fraction: f64, seed: u64) -> Result<SplitIndices> {
    if n < 2 {
        return Err(Error::param(format!("cannot split {n} samples")));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param(format!("train fraction {fraction} outside (0, 1)")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (fraction * n as f64).floor() as usize;
    let val = order.split_off(cut);
    Ok(SplitIndices { train: order, val })
}

/// One labeled processed image.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub index: usize,
    pub kind: WrinkleType,
    pub action: Action,
    pub image: GrayImage,
}

/// Labeled processed images sharing one size.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub entries: Vec<Entry>,
}

impl Dataset {
    pub fn new(entries: Vec<Entry>) -> Result<Self> {
        let first = entries.first().ok_or_else(|| Error::param("dataset is empty"))?;
        let (w, h) = (first.image.width(), first.image.height());
        if let Some(e) = entries.iter().find(|e| e.image.width() != w || e.image.height() != h) {
            return Err(Error::Data(format!(
                "sample {} is {}x{}, expected {w}x{h}",
                e.index,
                e.image.width(),
                e.image.height()
            )));
        }
        Ok(Dataset { entries })
    }

    pub fn from_samples(samples: &[Sample]) -> Result<Self> {
        Dataset::new(
            samples
                .iter()
                .map(|s| Entry {
                    index: s.index,
                    kind: s.kind(),
                    action: s.action,
                    image: s.processed.clone().into_gray(),
                })
                .collect(),
        )
    }

    /// Reads a manifest and the processed images it references.
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let manifest = Manifest::read(manifest_path)?;
        let entries = manifest
            .records
            .iter()
            .enumerate()
            .map(|(index, r)| {
                Ok(Entry {
                    index,
                    kind: r.kind,
                    action: r.action,
                    image: pnm::read_pgm(Manifest::resolve(manifest_path, &r.processed))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Flattened pixels scaled to `[0, 1]`, one row per entry.
    pub fn data_matrix(&self) -> Result<DataMatrix> {
        DataMatrix::from_images(self.entries.iter().map(|e| &e.image))
    }

    pub fn targets(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|e| e.action.to_array().to_vec()).collect()
    }

    /// PCA coordinates of every entry.
    pub fn features(&self, pca: &PcaModel) -> Result<Vec<Vec<f64>>> {
        self.entries.iter().map(|e| pca.project(&image_to_row(&e.image))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_rmse: f64,
    pub val_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

pub const HISTORY_HEADER: &str = "epoch,lr,train_rmse,val_rmse";

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{HISTORY_HEADER}\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.epoch,
                fmt_sig9(r.lr),
                fmt_sig9(r.train_rmse),
                fmt_sig9(r.val_rmse)
            );
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Root mean squared error over all rows and columns.
pub fn rmse(pred: &[Vec<f64>], target: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, t) in pred.iter().zip(target) {
        for (a, b) in p.iter().zip(t) {
            sum += (a - b) * (a - b);
            count += 1;
        }
    }
    if count == 0 { f64::NAN } else { (sum / count as f64).sqrt() }
}

fn forward_all(model: &MlpModel, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    xs.iter().map(|x| model.forward(x)).collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub history: TrainHistory,
}

fn pick<T: Clone>(rows: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

/// Trains a fresh network on the PCA features of the training split.
///
/// Target statistics come from the training rows only and are embedded in
/// the returned model. The validation split is only scored.
pub fn train(dataset: &Dataset, split: &SplitIndices, pca: &PcaModel, hyper: &TrainHyper) -> Result<TrainOutcome> {
    hyper.validate()?;
    if split.train.len() < 2 {
        return Err(Error::param("training split needs at least 2 samples"));
    }
    if let Some(&i) = split.train.iter().chain(&split.val).find(|&&i| i >= dataset.len()) {
        return Err(Error::param(format!("split index {i} outside dataset of {}", dataset.len())));
    }
    let pixels = dataset.entries[0].image.len();
    if pixels != pca.dim() {
        return Err(Error::param(format!(
            "PCA expects {} pixels, images have {pixels}",
            pca.dim()
        )));
    }

    let features = dataset.features(pca)?;
    let targets = dataset.targets();
    let stats = standardize_fit(&pick(&targets, &split.train))?;
    let z = standardize_apply(&stats, &targets)?;

    let x_train = pick(&features, &split.train);
    let z_train = pick(&z, &split.train);
    let x_val = pick(&features, &split.val);
    let z_val = pick(&z, &split.val);

    let mut model = init_mlp(&layer_sizes(pca.k()), hyper.init_seed)?;
    model.output_stats = stats;
    let mut opt = Optimizer::new(hyper.optimizer, &model);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.shuffle_seed);
    let mut order: Vec<usize> = (0..x_train.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=hyper.max_epochs {
        let lr = lr_at(epoch, hyper);
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(hyper.batch_size).enumerate() {
            let xs = pick(&x_train, chunk);
            let ts = pick(&z_train, chunk);
            let (loss, grads) = loss_and_grads(&model, &xs, &ts, hyper.l2)?;
            let non_finite = |detail: String| Error::NonFinite {
                epoch,
                batch: b + 1,
                detail,
            };
            if !loss.is_finite() {
                return Err(non_finite(format!("loss is {loss}")));
            }
            opt.step(&mut model, &grads, lr, hyper).map_err(|e| non_finite(e.to_string()))?;
        }
        let train_rmse = rmse(&forward_all(&model, &x_train)?, &z_train);
        let val_rmse = rmse(&forward_all(&model, &x_val)?, &z_val);
        if !train_rmse.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                batch: 0,
                detail: format!("train RMSE is {train_rmse}"),
            });
        }
        history.records.push(EpochRecord {
            epoch,
            lr,
            train_rmse,
            val_rmse,
        });
    }
    Ok(TrainOutcome { model, history })
}

/// Actual and predicted action for one evaluated entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub index: usize,
    pub kind: WrinkleType,
    pub actual: Action,
    pub predicted: Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// RMSE of x, y, d (m) and θ (rad).
    pub rmse: [f64; 4],
    pub predictions: Vec<Prediction>,
}

pub const REPORT_HEADER: &str = "index,type,x,y,d,theta,px,py,pd,ptheta";

/// Per-output RMSE from a set of predictions.
pub fn per_output_rmse(predictions: &[Prediction]) -> Result<[f64; 4]> {
    if predictions.is_empty() {
        return Err(Error::param("nothing to evaluate"));
    }
    let mut sums = [0.0; 4];
    for p in predictions {
        let (a, q) = (p.actual.to_array(), p.predicted.to_array());
        for c in 0..4 {
            sums[c] += (a[c] - q[c]).powi(2);
        }
    }
    Ok(sums.map(|s| (s / predictions.len() as f64).sqrt()))
}

/// Predicts the action for one processed image.
pub fn predict_image(model: &MlpModel, pca: &PcaModel, image: &GrayImage) -> Result<Action> {
    check_dims(model, pca)?;
    let out = model.predict(&pca.project(&image_to_row(image))?)?;
    Ok(Action::from_array([out[0], out[1], out[2], out[3]]))
}

fn check_dims(model: &MlpModel, pca: &PcaModel) -> Result<()> {
    if model.input_size() != pca.k() || model.output_size() != ACTION_DIM {
        return Err(Error::param(format!(
            "model maps {} -> {} but PCA yields {} features and actions have {ACTION_DIM} values",
            model.input_size(),
            model.output_size(),
            pca.k()
        )));
    }
    Ok(())
}

/// Scores `model` on the entries at `indices` (all entries if `None`).
pub fn evaluate(model: &MlpModel, pca: &PcaModel, dataset: &Dataset, indices: Option<&[usize]>) -> Result<Evaluation> {
    check_dims(model, pca)?;
    let all: Vec<usize>;
    let indices = match indices {
        Some(i) => i,
        None => {
            all = (0..dataset.len()).collect();
            &all
        }
    };
    let predictions = indices
        .iter()
        .map(|&i| {
            let e = dataset
                .entries
                .get(i)
                .ok_or_else(|| Error::param(format!("index {i} outside dataset of {}", dataset.len())))?;
            Ok(Prediction {
                index: e.index,
                kind: e.kind,
                actual: e.action,
                predicted: predict_image(model, pca, &e.image)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation {
        rmse: per_output_rmse(&predictions)?,
        predictions,
    })
}

impl Evaluation {
    pub fn report_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for p in &self.predictions {
            let _ = write!(out, "{},{}", p.index, p.kind);
            for v in p.actual.to_array().into_iter().chain(p.predicted.to_array()) {
                let _ = write!(out, ",{}", fmt_sig9(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_report(&self, path: &Path) -> Result<()> {
        fs::write(path, self.report_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Parses a report written by [`Evaluation::report_csv`].
pub fn parse_report(text: &str) -> Result<Vec<Prediction>> {
    let bad = |line: usize, msg: String| Error::Format {
        what: "report",
        msg: format!("line {line}: {msg}"),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, h)) if h == REPORT_HEADER => {}
        Some((n, h)) => return Err(bad(n, format!("expected header {REPORT_HEADER:?}, got {h:?}"))),
        None => return Err(bad(1, "missing header".into())),
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(bad(n, format!("expected 10 fields, got {}", f.len())));
        }
        let index = f[0].parse().map_err(|_| bad(n, format!("bad index {:?}", f[0])))?;
        let kind = f[1].parse().map_err(|e: Error| bad(n, e.to_string()))?;
        let mut v = [0.0; 8];
        for (slot, field) in v.iter_mut().zip(&f[2..]) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(n, format!("bad number {field:?}")))?;
        }
        out.push(Prediction {
            index,
            kind,
            actual: Action::from_array([v[0], v[1], v[2], v[3]]),
            predicted: Action::from_array([v[4], v[5], v[6], v[7]]),
        });
    }
    Ok(out)
}

//! Principal component analysis over flattened processed images.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::model::ByteReader;

/// Cumulative explained-variance fraction used to pick the component count.
pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.92;

/// Row-major `rows × cols` sample matrix, one flattened image per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param(format!("data matrix must be non-empty, got {rows}x{cols}")));
        }
        if values.len() != rows * cols {
            return Err(Error::param(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at row {}, column {}", i / cols, i % cols)));
        }
        Ok(DataMatrix { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::param(format!("row {r} has {} values, expected {cols}", rows[r].len())));
        }
        DataMatrix::new(rows.len(), cols, rows.concat())
    }

    /// Stacks images of equal size, scaling pixels to `[0, 1]`.
    pub fn from_images<'a>(images: impl IntoIterator<Item = &'a GrayImage>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = images.into_iter().map(image_to_row).collect();
        DataMatrix::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }
}

/// Pixels divided by 255, row-major.
pub fn image_to_row(img: &GrayImage) -> Vec<f64> {
    img.data().iter().map(|&p| f64::from(p) / 255.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k × D`, row-major, rows orthonormal.
    pub components: Vec<f64>,
    /// Variance along each component, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
}

/// Largest admissible component count for an `n × d` matrix.
pub fn max_components(n: usize, d: usize) -> usize {
    n.saturating_sub(1).min(d)
}

fn unit(d: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[j] = 1.0;
    e
}

/// Removes from `v` its projection on each earlier row of `basis` and
/// normalizes; `None` if nothing is left. Directions of null variance
/// (duplicate rows) carry no signal, so this fixes them to an arbitrary
/// orthonormal completion.
fn orthonormalize(v: &[f64], basis: &[f64], d: usize) -> Option<Vec<f64>> {
    let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return None;
    }
    let mut w: Vec<f64> = v.iter().map(|x| x / scale).collect();
    for _ in 0..2 {
        for b in basis.chunks(d) {
            let dot: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    (norm > 1e-6).then(|| w.iter().map(|x| x / norm).collect())
}

/// Fits the top `k` principal directions of the centered data.
pub fn fit_pca(data: &DataMatrix, k: usize) -> Result<PcaModel> {
    let (n, d) = (data.rows, data.cols);
    let kmax = max_components(n, d);
    if k == 0 || k > kmax {
        return Err(Error::param(format!(
            "component count {k} out of range 1..={kmax} for {n}x{d} data"
        )));
    }
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(data.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    // Eigen-decomposition of the smaller Gram matrix. nalgebra's SVD returns
    // wrong singular vectors for rank-deficient input, which every centered
    // matrix with n <= d is.
    let centered = DMatrix::from_fn(n, d, |r, c| data.values[r * d + c] - mean[c]);
    let denom = (n - 1) as f64;
    let wide = n <= d;
    let gram = if wide {
        &centered * centered.transpose()
    } else {
        centered.transpose() * &centered
    };
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let total_variance = centered.iter().map(|v| v * v).sum::<f64>() / denom;
    let mut components = Vec::with_capacity(k * d);
    let mut eigenvalues = Vec::with_capacity(k);
    for &i in &order[..k] {
        let lambda = eig.eigenvalues[i].max(0.0);
        let raw: Vec<f64> = if wide {
            centered.tr_mul(&eig.eigenvectors.column(i)).iter().copied().collect()
        } else {
            eig.eigenvectors.column(i).iter().copied().collect()
        };
        let mut row = orthonormalize(&raw, &components, d)
            .or_else(|| (0..d).find_map(|j| orthonormalize(&unit(d, j), &components, d)))
            .expect("fewer than d components always leave a free direction");
        let lead = row
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, v)| if v.abs() > best.1.abs() { (j, v) } else { best });
        if row[lead.0] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        components.extend(row);
        eigenvalues.push(lambda / denom);
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        total_variance,
    })
}

/// Cumulative fractions of total variance for the first `1..=k` components.
pub fn explained_curve(model: &PcaModel) -> Result<Vec<f64>> {
    if !(model.total_variance > 0.0) {
        return Err(Error::Degenerate("data has zero total variance".into()));
    }
    let mut acc = 0.0;
    Ok(model
        .eigenvalues
        .iter()
        .map(|e| {
            acc += e;
            acc / model.total_variance
        })
        .collect())
}

/// Smallest 1-based count reaching `threshold`, or the curve length.
pub fn choose_k(curve: &[f64], threshold: f64) -> Result<usize> {
    if curve.is_empty() {
        return Err(Error::param("explained-variance curve is empty"));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::param(format!("threshold {threshold} outside (0, 1]")));
    }
    Ok(curve.iter().position(|&c| c >= threshold).map_or(curve.len(), |i| i + 1))
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn component(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.components[i * d..(i + 1) * d]
    }

    /// Keeps the leading `k` components.
    pub fn truncate(&self, k: usize) -> Result<PcaModel> {
        if k == 0 || k > self.k() {
            return Err(Error::param(format!("cannot keep {k} of {} components", self.k())));
        }
        Ok(PcaModel {
            mean: self.mean.clone(),
            components: self.components[..k * self.dim()].to_vec(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
            total_variance: self.total_variance,
        })
    }

    /// `componentsᵀ · components`, row-major `D × D`.
    pub fn projector(&self) -> Vec<f64> {
        let d = self.dim();
        let mut p = vec![0.0; d * d];
        for i in 0..self.k() {
            let c = self.component(i);
            for r in 0..d {
                for s in 0..d {
                    p[r * d + s] += c[r] * c[s];
                }
            }
        }
        p
    }

    pub fn project(&self, sample: &[f64]) -> Result<Vec<f64>> {
        if sample.len() != self.dim() {
            return Err(Error::param(format!(
                "sample has {} values, model dimension is {}",
                sample.len(),
                self.dim()
            )));
        }
        Ok((0..self.k())
            .map(|i| {
                self.component(i)
                    .iter()
                    .zip(sample.iter().zip(&self.mean))
                    .map(|(c, (x, m))| c * (x - m))
                    .sum()
            })
            .collect())
    }

    pub fn reconstruct(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if coords.len() != self.k() {
            return Err(Error::param(format!(
                "got {} coordinates for a {}-component model",
                coords.len(),
                self.k()
            )));
        }
        let mut out = self.mean.clone();
        for (i, &a) in coords.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(self.component(i)) {
                *o += a * c;
            }
        }
        Ok(out)
    }

    /// Serializes to the `PCA1` layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * (self.dim() * (self.k() + 1) + self.k() + 1));
        out.extend_from_slice(b"PCA1");
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.k() as u32).to_le_bytes());
        let tail = [self.total_variance];
        for v in self.mean.iter().chain(&self.components).chain(&self.eigenvalues).chain(&tail) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "PCA1 model");
        r.magic(b"PCA1")?;
        let d = r.u32()? as usize;
        let k = r.u32()? as usize;
        if d == 0 || k == 0 || k > d {
            return Err(r.err(format!("invalid shape D={d}, k={k}")));
        }
        let mean = r.f64s(d)?;
        let components = r.f64s(k * d)?;
        let eigenvalues = r.f64s(k)?;
        let total_variance = r.f64s(1)?[0];
        r.finish()?;
        if mean.iter().chain(&components).chain(&eigenvalues).any(|v| !v.is_finite()) || !total_variance.is_finite() {
            return Err(r.err("non-finite value".into()));
        }
        Ok(PcaModel {
            mean,
            components,
            eigenvalues,
            total_variance,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        PcaModel::from_bytes(&bytes)
    }
}

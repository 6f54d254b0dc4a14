//! Fully connected regression network with sigmoid hidden layers and a
//! linear output, trained on mean squared error with an L2 weight penalty.
//!
//! Parameters live in one flat vector, layer by layer: the `out × in`
//! weight matrix (row-major) followed by the bias vector. Optimizer state
//! and gradients share that layout.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pipeline::StandardStats;

/// 5 PCA features in, four hidden layers, `(x, y, d, θ)` out.
pub const DEFAULT_LAYER_SIZES: [usize; 6] = [5, 10, 15, 24, 10, 4];

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
    /// Target standardization; predictions are mapped back through it.
    pub output_stats: StandardStats,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(Error::param(format!(
            "need at least two layers of positive size, got {layer_sizes:?}"
        )));
    }
    Ok(())
}

fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

/// Glorot-uniform weights from a seeded generator, zero biases.
pub fn init_mlp(layer_sizes: &[usize], seed: u64) -> Result<MlpModel> {
    check_sizes(layer_sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(param_count(layer_sizes));
    for w in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..=limit)));
        params.extend(std::iter::repeat_n(0.0, fan_out));
    }
    let outputs = *layer_sizes.last().expect("checked");
    Ok(MlpModel {
        layer_sizes: layer_sizes.to_vec(),
        params,
        output_stats: StandardStats::identity(outputs),
    })
}

impl MlpModel {
    /// Model with all parameters zero; mostly useful in tests.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        Ok(MlpModel {
            layer_sizes: layer_sizes.to_vec(),
            params: vec![0.0; param_count(layer_sizes)],
            output_stats: StandardStats::identity(*layer_sizes.last().expect("checked")),
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    /// Number of affine layers.
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Start of layer `l`'s weights; its biases follow at `+ out*in`.
    fn offset(&self, l: usize) -> usize {
        param_count(&self.layer_sizes[..=l])
    }

    fn dims(&self, l: usize) -> (usize, usize) {
        (self.layer_sizes[l + 1], self.layer_sizes[l])
    }

    pub fn weights(&self, l: usize) -> &[f64] {
        let (o, i) = self.dims(l);
        let at = self.offset(l);
        &self.params[at..at + o * i]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let (o, i) = self.dims(l);
        let at = self.offset(l);
        &mut self.params[at..at + o * i]
    }

    pub fn biases(&self, l: usize) -> &[f64] {
        let (o, i) = self.dims(l);
        let at = self.offset(l) + o * i;
        &self.params[at..at + o]
    }

    pub fn biases_mut(&mut self, l: usize) -> &mut [f64] {
        let (o, i) = self.dims(l);
        let at = self.offset(l) + o * i;
        &mut self.params[at..at + o]
    }

    /// `true` at parameter positions holding weights (not biases).
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.params.len());
        for l in 0..self.depth() {
            let (o, i) = self.dims(l);
            mask.extend(std::iter::repeat_n(true, o * i));
            mask.extend(std::iter::repeat_n(false, o));
        }
        mask
    }

    /// Sum of squared weights, biases excluded.
    pub fn weight_sq_norm(&self) -> f64 {
        (0..self.depth())
            .map(|l| self.weights(l).iter().map(|w| w * w).sum::<f64>())
            .sum()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_size() {
            return Err(Error::param(format!(
                "model takes {} inputs, got {}",
                self.input_size(),
                input.len()
            )));
        }
        Ok(())
    }

    /// Activations of every layer, input first, linear output last.
    fn trace(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layer_sizes.len());
        acts.push(input.to_vec());
        for l in 0..self.depth() {
            let (o, i) = self.dims(l);
            let w = self.weights(l);
            let b = self.biases(l);
            let prev = acts.last().expect("input pushed");
            let last = l + 1 == self.depth();
            let next = (0..o)
                .map(|r| {
                    let z = b[r] + w[r * i..(r + 1) * i].iter().zip(prev).map(|(a, x)| a * x).sum::<f64>();
                    if last { z } else { sigmoid(z) }
                })
                .collect();
            acts.push(next);
        }
        acts
    }

    /// Network output in standardized target units.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.trace(input).pop().expect("output layer"))
    }

    /// Network output mapped back to physical target units.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        let out = self.forward(input)?;
        self.output_stats.inverse_row(&out)
    }

    /// Serializes to the `MLP1` layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * (self.params.len() + 2 * self.output_size()));
        out.extend_from_slice(b"MLP1");
        out.extend_from_slice(&(self.layer_sizes.len() as u32).to_le_bytes());
        for &s in &self.layer_sizes {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        for v in self.params.iter().chain(&self.output_stats.means).chain(&self.output_stats.stds) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "MLP1 model");
        r.magic(b"MLP1")?;
        let n = r.u32()? as usize;
        if n > 1024 {
            return Err(r.err(format!("implausible layer count {n}")));
        }
        let sizes = (0..n).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        check_sizes(&sizes).map_err(|e| r.err(e.to_string()))?;
        let count = param_count(&sizes);
        let outputs = *sizes.last().expect("checked");
        let params = r.f64s(count)?;
        let means = r.f64s(outputs)?;
        let stds = r.f64s(outputs)?;
        r.finish()?;
        if params.iter().chain(&means).chain(&stds).any(|v| !v.is_finite()) {
            return Err(r.err("non-finite parameter".into()));
        }
        Ok(MlpModel {
            layer_sizes: sizes,
            params,
            output_stats: StandardStats::new(means, stds)?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        MlpModel::from_bytes(&bytes)
    }
}

/// Little-endian cursor shared by the binary model formats.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8], what: &'static str) -> Self {
        ByteReader { bytes, pos: 0, what }
    }

    pub(crate) fn err(&self, msg: String) -> Error {
        Error::Format { what: self.what, msg }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.err(format!("truncated at byte {}", self.pos))),
        }
    }

    pub(crate) fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(self.err(format!("bad magic, expected {}", String::from_utf8_lossy(magic))));
        }
        Ok(())
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub(crate) fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| self.err("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.err(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

/// Batch loss and its exact gradient.
///
/// `loss = mean over samples and outputs of (prediction − target)²
///         + (l2 / 2) · Σ w²` with biases excluded from the penalty.
pub fn loss_and_grads(
    model: &MlpModel,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    l2: f64,
) -> Result<(f64, Vec<f64>)> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::param(format!(
            "batch needs matching non-empty inputs and targets, got {} and {}",
            inputs.len(),
            targets.len()
        )));
    }
    let outputs = model.output_size();
    let scale = 1.0 / (inputs.len() * outputs) as f64;
    let mut grads = vec![0.0; model.params.len()];
    let mut sq_err = 0.0;

    for (x, t) in inputs.iter().zip(targets) {
        model.check_input(x)?;
        if t.len() != outputs {
            return Err(Error::param(format!("target has {} values, model outputs {outputs}", t.len())));
        }
        let acts = model.trace(x);
        let out = acts.last().expect("output");
        // dL/dz at the linear output
        let mut delta: Vec<f64> = out
            .iter()
            .zip(t)
            .map(|(y, t)| {
                sq_err += (y - t) * (y - t);
                2.0 * (y - t) * scale
            })
            .collect();
        for l in (0..model.depth()).rev() {
            let (o, i) = model.dims(l);
            let at = model.offset(l);
            let prev = &acts[l];
            for r in 0..o {
                for c in 0..i {
                    grads[at + r * i + c] += delta[r] * prev[c];
                }
                grads[at + o * i + r] += delta[r];
            }
            if l > 0 {
                let w = model.weights(l);
                delta = (0..i)
                    .map(|c| {
                        let back: f64 = (0..o).map(|r| w[r * i + c] * delta[r]).sum();
                        back * prev[c] * (1.0 - prev[c])
                    })
                    .collect();
            }
        }
    }

    let mut loss = sq_err * scale;
    if l2 != 0.0 {
        loss += 0.5 * l2 * model.weight_sq_norm();
        for (g, (p, is_w)) in grads.iter_mut().zip(model.params.iter().zip(model.weight_mask())) {
            if is_w {
                *g += l2 * p;
            }
        }
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    Sgd,
    RmsProp,
    #[default]
    Adam,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::RmsProp => "rmsprop",
            OptimizerKind::Adam => "adam",
        }
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::param(format!("unknown optimizer {s:?}, expected sgd|rmsprop|adam"))),
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHyper {
    pub optimizer: OptimizerKind,
    pub lr0: f64,
    /// Gradient decay factor.
    pub beta1: f64,
    /// Squared gradient decay factor.
    pub beta2: f64,
    pub epsilon: f64,
    pub l2: f64,
    pub drop_factor: f64,
    pub drop_every: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub init_seed: u64,
    pub shuffle_seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            optimizer: OptimizerKind::Adam,
            lr0: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l2: 1e-4,
            drop_factor: 0.1,
            drop_every: 10,
            max_epochs: 100,
            batch_size: 12,
            init_seed: 7,
            shuffle_seed: 11,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(Error::param("lr0 must be positive"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::param("beta1 and beta2 must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) || self.l2 < 0.0 || !(self.drop_factor > 0.0) {
            return Err(Error::param("epsilon and drop_factor must be positive, l2 >= 0"));
        }
        if self.batch_size == 0 || self.drop_every == 0 {
            return Err(Error::param("batch_size and drop_every must be at least 1"));
        }
        Ok(())
    }
}

/// Piecewise-constant schedule `lr0 · drop^⌊(epoch − 1) / every⌋`,
/// `epoch` 1-based.
///
/// The product is snapped to 15 significant digits, so decimal settings give
/// decimal rates (`0.01 · 0.1⁹` is `1e-11`, not `1.0000000000000004e-11`).
pub fn lr_at(epoch: usize, hyper: &TrainHyper) -> f64 {
    assert!(epoch >= 1, "epochs are 1-based");
    let drops = ((epoch - 1) / hyper.drop_every) as i32;
    let raw = hyper.lr0 * hyper.drop_factor.powi(drops);
    format!("{raw:.14e}").parse().expect("float round trip")
}

/// Moment accumulators, same layout as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(n: usize) -> Self {
        OptimizerState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// `w ← w − lr·g`
pub fn sgd_step(params: &mut [f64], grads: &[f64], lr: f64) {
    for (w, g) in params.iter_mut().zip(grads) {
        *w -= lr * g;
    }
}

/// `v ← β₂v + (1−β₂)g²`, `w ← w − lr·g / (√v + ε)`
pub fn rmsprop_step(state: &mut OptimizerState, params: &mut [f64], grads: &[f64], lr: f64, hyper: &TrainHyper) {
    let b2 = hyper.beta2;
    for ((w, g), v) in params.iter_mut().zip(grads).zip(state.v.iter_mut()) {
        *v = b2 * *v + (1.0 - b2) * g * g;
        *w -= lr * g / (v.sqrt() + hyper.epsilon);
    }
    state.t += 1;
}

/// Bias-corrected Adam update.
pub fn adam_step(state: &mut OptimizerState, params: &mut [f64], grads: &[f64], lr: f64, hyper: &TrainHyper) {
    state.t += 1;
    let (b1, b2) = (hyper.beta1, hyper.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (((w, g), m), v) in params.iter_mut().zip(grads).zip(state.m.iter_mut()).zip(state.v.iter_mut()) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= lr * m_hat / (v_hat.sqrt() + hyper.epsilon);
    }
}

/// An optimizer bound to a model's parameter layout.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub state: OptimizerState,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, model: &MlpModel) -> Self {
        Optimizer {
            kind,
            state: OptimizerState::new(model.params.len()),
        }
    }

    /// Applies one update. A non-finite gradient leaves the model untouched.
    pub fn step(&mut self, model: &mut MlpModel, grads: &[f64], lr: f64, hyper: &TrainHyper) -> Result<()> {
        if grads.len() != model.params.len() || self.state.m.len() != model.params.len() {
            return Err(Error::param("gradient and optimizer state must match the model"));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::Data(format!("gradient entry {i} is {}", grads[i])));
        }
        match self.kind {
            OptimizerKind::Sgd => sgd_step(&mut model.params, grads, lr),
            OptimizerKind::RmsProp => rmsprop_step(&mut self.state, &mut model.params, grads, lr, hyper),
            OptimizerKind::Adam => adam_step(&mut self.state, &mut model.params, grads, lr, hyper),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn init_shapes_and_determinism() {
        let a = init_mlp(&DEFAULT_LAYER_SIZES, 3).unwrap();
        assert_eq!(a, init_mlp(&DEFAULT_LAYER_SIZES, 3).unwrap());
        assert_ne!(a.params(), init_mlp(&DEFAULT_LAYER_SIZES, 4).unwrap().params());
        let shapes: Vec<(usize, usize)> = (0..a.depth()).map(|l| a.dims(l)).collect();
        assert_eq!(shapes, vec![(10, 5), (15, 10), (24, 15), (10, 24), (4, 10)]);
        for l in 0..a.depth() {
            assert!(a.biases(l).iter().all(|&b| b == 0.0));
            let (o, i) = a.dims(l);
            let lim = (6.0 / (o + i) as f64).sqrt();
            assert!(a.weights(l).iter().all(|w| w.abs() <= lim));
        }
        let tiny = init_mlp(&[1, 1], 0).unwrap();
        assert!(tiny.weights(0)[0].abs() <= 3f64.sqrt());
        assert!(init_mlp(&[5], 0).is_err());
        assert!(init_mlp(&[5, 0, 4], 0).is_err());
    }

    #[test]
    fn forward_examples() {
        let mut m = init_mlp(&DEFAULT_LAYER_SIZES, 1).unwrap();
        let last = m.depth() - 1;
        m.weights_mut(last).fill(0.0);
        assert_eq!(m.forward(&[0.3, -1.0, 2.0, 0.0, 5.0]).unwrap(), vec![0.0; 4]);

        let mut toy = MlpModel::zeros(&[1, 1, 1]).unwrap();
        toy.weights_mut(0)[0] = 1.0;
        toy.weights_mut(1)[0] = 2.0;
        toy.biases_mut(1)[0] = 1.0;
        assert_eq!(toy.forward(&[0.0]).unwrap(), vec![2.0]);

        assert!((sigmoid(50.0) - 1.0).abs() < 1e-12);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!(m.forward(&[1.0; 4]).is_err());
    }

    #[test]
    fn loss_examples() {
        let mut lin = MlpModel::zeros(&[1, 1]).unwrap();
        lin.weights_mut(0)[0] = 2.0;
        let (loss, g) = loss_and_grads(&lin, &[vec![1.0]], &[vec![0.0]], 0.0).unwrap();
        assert_eq!(loss, 4.0);
        assert_eq!(g, vec![4.0, 4.0]);

        let m = init_mlp(&[3, 4, 2], 5).unwrap();
        let xs = vec![vec![0.1, 0.2, -0.3], vec![1.0, 0.0, 0.5]];
        let ts: Vec<Vec<f64>> = xs.iter().map(|x| m.forward(x).unwrap()).collect();
        let (loss, g) = loss_and_grads(&m, &xs, &ts, 0.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));

        assert!(loss_and_grads(&m, &[], &[], 0.0).is_err());
        assert!(loss_and_grads(&m, &xs, &ts[..1], 0.0).is_err());
        assert!(loss_and_grads(&m, &xs, &[vec![0.0; 3], vec![0.0; 3]], 0.0).is_err());
    }

    #[test]
    fn l2_term_is_half_weight_norm() {
        let m = init_mlp(&DEFAULT_LAYER_SIZES, 9).unwrap();
        let xs = vec![vec![0.2; 5], vec![-0.4; 5]];
        let ts = vec![vec![1.0; 4], vec![0.0; 4]];
        let (plain, g0) = loss_and_grads(&m, &xs, &ts, 0.0).unwrap();
        let (reg, g1) = loss_and_grads(&m, &xs, &ts, 1e-4).unwrap();
        let want = 0.5e-4 * m.weight_sq_norm();
        assert!(((reg - plain) - want).abs() <= 1e-15 * reg.abs());
        for ((a, b), (p, is_w)) in g0.iter().zip(&g1).zip(m.params().iter().zip(m.weight_mask())) {
            let expect = if is_w { a + 1e-4 * p } else { *a };
            assert_eq!(*b, expect);
        }
    }

    #[test]
    fn adam_examples() {
        let h = TrainHyper::default();
        let mut st = OptimizerState::new(3);
        let mut w = vec![1.0, -2.0, 0.5];
        adam_step(&mut st, &mut w, &[0.0; 3], 0.01, &h);
        assert_eq!(w, vec![1.0, -2.0, 0.5]);

        let mut st = OptimizerState::new(1);
        let mut w = vec![0.0];
        adam_step(&mut st, &mut w, &[0.5], 0.01, &h);
        let want = -0.01 * 0.5 / (0.5 + 1e-8);
        assert!((w[0] - want).abs() < 1e-12);
        assert!((w[0] + 0.009_999_999_80).abs() < 1e-11);

        let mut w = vec![1.0];
        sgd_step(&mut w, &[1.0], 0.01);
        assert_eq!(w[0], 1.0 - 0.01);
    }

    #[test]
    fn rmsprop_first_step() {
        let h = TrainHyper::default();
        let mut st = OptimizerState::new(1);
        let mut w = vec![0.0];
        rmsprop_step(&mut st, &mut w, &[2.0], 0.01, &h);
        let v = 0.001 * 4.0;
        assert!((w[0] + 0.01 * 2.0 / (f64::sqrt(v) + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn adam_solves_quadratic() {
        let h = TrainHyper::default();
        let mut st = OptimizerState::new(1);
        let mut w = vec![0.0f64];
        let mut steps = 0;
        while (w[0] - 3.0).abs() >= 0.05 {
            let g = 2.0 * (w[0] - 3.0);
            adam_step(&mut st, &mut w, &[g], 0.01, &h);
            steps += 1;
            assert!(steps <= 2000, "w = {}", w[0]);
        }
    }

    #[test]
    fn optimizer_rejects_non_finite() {
        let mut m = init_mlp(&[2, 2], 0).unwrap();
        let before = m.clone();
        let mut opt = Optimizer::new(OptimizerKind::Adam, &m);
        let mut g = vec![0.0; m.params().len()];
        g[3] = f64::NAN;
        let err = opt.step(&mut m, &g, 0.01, &TrainHyper::default()).unwrap_err();
        assert!(err.to_string().contains("entry 3"));
        assert_eq!(m, before);
    }

    #[test]
    fn schedule() {
        let h = TrainHyper::default();
        assert_eq!(lr_at(1, &h), 0.01);
        assert_eq!(lr_at(10, &h), 0.01);
        assert_eq!(lr_at(11, &h), 0.001);
        assert_eq!(lr_at(100, &h), 1e-11);
        for e in 1..=100 {
            let want = 0.01 * 0.1f64.powi(((e - 1) / 10) as i32);
            assert!((lr_at(e, &h) - want).abs() <= 1e-15 * want);
        }
    }

    #[test]
    fn optimizer_names() {
        for k in [OptimizerKind::Sgd, OptimizerKind::RmsProp, OptimizerKind::Adam] {
            assert_eq!(k.name().parse::<OptimizerKind>().unwrap(), k);
        }
        assert!("lbfgs".parse::<OptimizerKind>().is_err());
    }

    #[test]
    fn mlp1_layout() {
        let m = init_mlp(&[2, 3, 1], 4).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"MLP1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        let n_params = 3 * 3 + 1 * 4;
        assert_eq!(bytes.len(), 4 + 4 + 3 * 4 + 8 * (n_params + 2));
        assert_eq!(MlpModel::from_bytes(&bytes).unwrap(), m);
        assert!(MlpModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(MlpModel::from_bytes(&extra).is_err());
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(MlpModel::from_bytes(&bad).is_err());
    }

    proptest! {
        #[test]
        fn steps_preserve_shape(seed in any::<u64>(), kind in 0usize..3) {
            let kinds = [OptimizerKind::Sgd, OptimizerKind::RmsProp, OptimizerKind::Adam];
            let mut m = init_mlp(&DEFAULT_LAYER_SIZES, seed).unwrap();
            let sizes = m.layer_sizes().to_vec();
            let n = m.params().len();
            let (_, g) = loss_and_grads(&m, &[vec![0.5; 5]], &[vec![1.0; 4]], 1e-4).unwrap();
            let mut opt = Optimizer::new(kinds[kind], &m);
            opt.step(&mut m, &g, 0.01, &TrainHyper::default()).unwrap();
            prop_assert_eq!(m.layer_sizes(), &sizes[..]);
            prop_assert_eq!(m.params().len(), n);
            prop_assert!(opt.state.v.iter().all(|&v| v >= 0.0));
        }
    }
}

//! Single-layer GRU with a linear read-out, trained by full-batch
//! backpropagation through time with Adam.
//!
//! Cell equations, with `⊙` the element-wise product:
//!
//! ```text
//! z_t = σ(W_z x_t + U_z h_{t-1} + b_z)
//! r_t = σ(W_r x_t + U_r h_{t-1} + b_r)
//! h̃_t = tanh(W_h x_t + U_h (r_t ⊙ h_{t-1}) + b_h)
//! h_t = (1 - z_t) ⊙ h_{t-1} + z_t ⊙ h̃_t
//! ```
//!
//! Inputs are min-max scaled on the training series. Each training pair is
//! `lookback` consecutive hours and the hour after; pairs touching a gap
//! are discarded. Multi-step forecasts feed predictions back as inputs.

use std::ops::Range;

use rand::Rng;

use super::ForecastResult;
use crate::data::HourlySeries;
use crate::{rng, Error, Result};

/// Parameter groups in storage order.
pub const PARAMETER_GROUPS: [&str; 11] = [
    "W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h", "w_o", "b_o",
];

#[derive(Debug, Clone, PartialEq)]
pub struct GruSpec {
    pub hidden_size: usize,
    pub lookback: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Train on at most this many of the most recent pairs (0 keeps all).
    pub max_windows: usize,
}

impl Default for GruSpec {
    fn default() -> Self {
        Self {
            hidden_size: 32,
            lookback: 24,
            epochs: 200,
            learning_rate: 1e-3,
            seed: 0,
            max_windows: 512,
        }
    }
}

impl GruSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 || self.lookback == 0 {
            return Err(Error::arg("hidden size and lookback must be >= 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::arg(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        n_params(self.hidden_size)
    }
}

fn n_params(h: usize) -> usize {
    3 * (h + h * h + h) + h + 1
}

fn group_ranges(h: usize) -> [Range<usize>; 11] {
    let sizes = [h, h * h, h, h, h * h, h, h, h * h, h, h, 1];
    let mut start = 0;
    sizes.map(|s| {
        let r = start..start + s;
        start += s;
        r
    })
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gate activations and new hidden state of one cell step.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub update: Vec<f64>,
    pub reset: Vec<f64>,
    pub candidate: Vec<f64>,
    pub hidden: Vec<f64>,
}

/// Network weights, stored flat in [`PARAMETER_GROUPS`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct GruNetwork {
    hidden: usize,
    params: Vec<f64>,
}

impl GruNetwork {
    /// Weights uniform in `±1/sqrt(hidden)`, biases zero.
    pub fn new_random(hidden: usize, seed: u64) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::arg("hidden size must be >= 1"));
        }
        let mut r = rng::seeded(seed);
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut params = vec![0.0; n_params(hidden)];
        for (g, range) in group_ranges(hidden).into_iter().enumerate() {
            if !PARAMETER_GROUPS[g].starts_with('b') {
                for p in &mut params[range] {
                    *p = r.random_range(-bound..bound);
                }
            }
        }
        Ok(Self { hidden, params })
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn group_range(&self, group: usize) -> Range<usize> {
        group_ranges(self.hidden)[group].clone()
    }

    pub fn group_mut(&mut self, group: usize) -> &mut [f64] {
        let r = self.group_range(group);
        &mut self.params[r]
    }

    pub fn cell(&self, x: f64, h_prev: &[f64]) -> CellState {
        let n = self.hidden;
        let g = group_ranges(n);
        let p = &self.params;
        let (wz, uz, bz) = (&p[g[0].clone()], &p[g[1].clone()], &p[g[2].clone()]);
        let (wr, ur, br) = (&p[g[3].clone()], &p[g[4].clone()], &p[g[5].clone()]);
        let (wh, uh, bh) = (&p[g[6].clone()], &p[g[7].clone()], &p[g[8].clone()]);
        let mut update = vec![0.0; n];
        let mut reset = vec![0.0; n];
        for i in 0..n {
            let (rz, rr) = (&uz[i * n..(i + 1) * n], &ur[i * n..(i + 1) * n]);
            update[i] = sigmoid(wz[i] * x + dot(rz, h_prev) + bz[i]);
            reset[i] = sigmoid(wr[i] * x + dot(rr, h_prev) + br[i]);
        }
        let gated: Vec<f64> = reset.iter().zip(h_prev).map(|(r, h)| r * h).collect();
        let mut candidate = vec![0.0; n];
        let mut hidden = vec![0.0; n];
        for i in 0..n {
            candidate[i] = (wh[i] * x + dot(&uh[i * n..(i + 1) * n], &gated) + bh[i]).tanh();
            hidden[i] = (1.0 - update[i]) * h_prev[i] + update[i] * candidate[i];
        }
        debug_assert!(
            update.iter().chain(&reset).all(|&v| v > 0.0 && v < 1.0),
            "gate outside (0, 1)"
        );
        debug_assert!(
            candidate.iter().all(|&v| v > -1.0 && v < 1.0),
            "candidate outside (-1, 1)"
        );
        CellState {
            update,
            reset,
            candidate,
            hidden,
        }
    }

    fn readout(&self, h: &[f64]) -> f64 {
        let g = group_ranges(self.hidden);
        dot(&self.params[g[9].clone()], h) + self.params[g[10].start]
    }

    /// One-step prediction from an input window.
    pub fn predict(&self, window: &[f64]) -> f64 {
        let mut h = vec![0.0; self.hidden];
        for &x in window {
            h = self.cell(x, &h).hidden;
        }
        self.readout(&h)
    }

    /// Mean squared error over the pairs.
    pub fn loss(&self, windows: &[Vec<f64>], targets: &[f64]) -> f64 {
        let total: f64 = windows
            .iter()
            .zip(targets)
            .map(|(w, y)| {
                let e = self.predict(w) - y;
                e * e
            })
            .sum();
        total / windows.len() as f64
    }

    /// Mean squared error and its gradient, in [`PARAMETER_GROUPS`] order.
    pub fn loss_and_gradient(&self, windows: &[Vec<f64>], targets: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut total = 0.0;
        let scale = 1.0 / windows.len() as f64;
        for (w, &y) in windows.iter().zip(targets) {
            total += self.backprop(w, y, scale, &mut grad);
        }
        (total * scale, grad)
    }

    /// Adds `scale * d(err²)/dθ` for one pair to `grad`; returns `err²`.
    fn backprop(&self, window: &[f64], target: f64, scale: f64, grad: &mut [f64]) -> f64 {
        let n = self.hidden;
        let g = group_ranges(n);
        let p = &self.params;
        let mut states: Vec<(Vec<f64>, CellState)> = Vec::with_capacity(window.len());
        let mut h = vec![0.0; n];
        for &x in window {
            let s = self.cell(x, &h);
            let next = s.hidden.clone();
            states.push((h, s));
            h = next;
        }
        let err = self.readout(&h) - target;
        let dy = 2.0 * err * scale;

        let [gwz, guz, gbz, gwr, gur, gbr, gwh, guh, gbh, gwo, gbo] = split_groups(grad, n);
        for (gw, hi) in gwo.iter_mut().zip(&h) {
            *gw += dy * hi;
        }
        gbo[0] += dy;
        let mut dh: Vec<f64> = p[g[9].clone()].iter().map(|w| dy * w).collect();

        let (uz, ur, uh) = (&p[g[1].clone()], &p[g[4].clone()], &p[g[7].clone()]);
        let mut dz = vec![0.0; n];
        let mut dr_pre = vec![0.0; n];
        let mut dc_pre = vec![0.0; n];
        let mut gated = vec![0.0; n];
        let mut d_gated = vec![0.0; n];
        let mut dh_prev = vec![0.0; n];
        for (t, (h_prev, s)) in states.iter().enumerate().rev() {
            let x = window[t];
            for i in 0..n {
                let dc = dh[i] * s.update[i];
                dz[i] = dh[i] * (s.candidate[i] - h_prev[i]) * s.update[i] * (1.0 - s.update[i]);
                dc_pre[i] = dc * (1.0 - s.candidate[i] * s.candidate[i]);
                dh_prev[i] = dh[i] * (1.0 - s.update[i]);
                gated[i] = s.reset[i] * h_prev[i];
            }
            // Candidate path: d(r ⊙ h_prev) = U_hᵀ dc_pre.
            d_gated.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                let d = dc_pre[i];
                gwh[i] += d * x;
                gbh[i] += d;
                let row = i * n..(i + 1) * n;
                for (((gu, u), gt), dg) in guh[row.clone()]
                    .iter_mut()
                    .zip(&uh[row])
                    .zip(&gated)
                    .zip(d_gated.iter_mut())
                {
                    *gu += d * gt;
                    *dg += u * d;
                }
            }
            for j in 0..n {
                dh_prev[j] += d_gated[j] * s.reset[j];
                dr_pre[j] = d_gated[j] * h_prev[j] * s.reset[j] * (1.0 - s.reset[j]);
            }
            for i in 0..n {
                let (a, b) = (dz[i], dr_pre[i]);
                gwz[i] += a * x;
                gbz[i] += a;
                gwr[i] += b * x;
                gbr[i] += b;
                let row = i * n..(i + 1) * n;
                for (((((gz, gr), z), r), hp), dp) in guz[row.clone()]
                    .iter_mut()
                    .zip(gur[row.clone()].iter_mut())
                    .zip(&uz[row.clone()])
                    .zip(&ur[row])
                    .zip(h_prev)
                    .zip(dh_prev.iter_mut())
                {
                    *gz += a * hp;
                    *gr += b * hp;
                    *dp += z * a + r * b;
                }
            }
            std::mem::swap(&mut dh, &mut dh_prev);
        }
        err * err
    }
}

/// Mutable views of the gradient, one per parameter group.
fn split_groups(grad: &mut [f64], h: usize) -> [&mut [f64]; 11] {
    let sizes = [h, h * h, h, h, h * h, h, h, h * h, h, h, 1];
    let mut rest = grad;
    sizes.map(|s| {
        let (head, tail) = std::mem::take(&mut rest).split_at_mut(s);
        rest = tail;
        head
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruModel {
    spec: GruSpec,
    network: GruNetwork,
    min: f64,
    range: f64,
    /// Last `lookback` scaled training values.
    tail: Vec<f64>,
    loss_trace: Vec<f64>,
}

impl GruModel {
    pub fn network(&self) -> &GruNetwork {
        &self.network
    }

    /// Training loss after each epoch (scaled units).
    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    pub fn spec(&self) -> &GruSpec {
        &self.spec
    }
}

/// Sliding `(window, next value)` pairs that avoid gaps entirely.
pub fn training_pairs(values: &[Option<f64>], lookback: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut windows = Vec::new();
    let mut targets = Vec::new();
    for end in lookback..values.len() {
        let span = &values[end - lookback..=end];
        if span.iter().all(Option::is_some) {
            windows.push(span[..lookback].iter().map(|v| v.unwrap()).collect());
            targets.push(span[lookback].unwrap());
        }
    }
    (windows, targets)
}

pub fn fit_gru(train: &HourlySeries, spec: &GruSpec) -> Result<GruModel> {
    spec.validate()?;
    if spec.lookback >= train.len() {
        return Err(Error::arg(format!(
            "lookback {} must be shorter than the training series ({} hours)",
            spec.lookback,
            train.len()
        )));
    }
    let observed: Vec<f64> = train.values().iter().flatten().copied().collect();
    let min = observed.iter().copied().fold(f64::INFINITY, f64::min);
    let max = observed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = if max > min { max - min } else { 1.0 };
    let scaled: Vec<Option<f64>> = train
        .values()
        .iter()
        .map(|v| v.map(|x| (x - min) / range))
        .collect();
    let (mut windows, mut targets) = training_pairs(&scaled, spec.lookback);
    if windows.is_empty() {
        return Err(Error::arg("no gap-free training window"));
    }
    if spec.max_windows > 0 && windows.len() > spec.max_windows {
        let drop = windows.len() - spec.max_windows;
        windows.drain(..drop);
        targets.drain(..drop);
    }

    let mut network = GruNetwork::new_random(spec.hidden_size, spec.seed)?;
    let np = network.params.len();
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut m = vec![0.0; np];
    let mut v = vec![0.0; np];
    let mut loss_trace = Vec::with_capacity(spec.epochs);
    for epoch in 1..=spec.epochs {
        let (loss, grad) = network.loss_and_gradient(&windows, &targets);
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "GRU training loss diverged at epoch {epoch}"
            )));
        }
        loss_trace.push(loss);
        let c1 = 1.0 - f64::powi(b1, epoch as i32);
        let c2 = 1.0 - f64::powi(b2, epoch as i32);
        for i in 0..np {
            m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
            v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
            network.params[i] -= spec.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
        }
    }
    let filled = train.interpolated()?;
    let tail = filled[filled.len() - spec.lookback..]
        .iter()
        .map(|x| (x - min) / range)
        .collect();
    Ok(GruModel {
        spec: spec.clone(),
        network,
        min,
        range,
        tail,
        loss_trace,
    })
}

/// Recursive multi-step point forecast; the GRU carries no intervals.
pub fn forecast_gru(model: &GruModel, horizon: usize) -> Result<ForecastResult> {
    if horizon == 0 {
        return Err(Error::arg("horizon must be >= 1"));
    }
    let mut window = model.tail.clone();
    let mut point = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next = model.network.predict(&window);
        point.push(model.min + model.range * next);
        window.remove(0);
        window.push(next);
    }
    Ok(ForecastResult::point_only(point))
}

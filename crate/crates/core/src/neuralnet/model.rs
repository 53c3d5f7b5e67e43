//! CNN + biLSTM + dense regression equalizer with hand-written reverse-mode
//! gradients.
//!
//! Shapes for one example with window length `M`, `F` filters, kernel `k`
//! and `H` hidden units:
//!
//! * input `(M, 4)`
//! * conv, "same" padding (left pad `(k - 1) / 2`) -> `(M, F)`
//! * forward and backward LSTM over the `M` steps, gates ordered `i, f, g, o`
//!   -> concatenated `(M, 2H)`
//! * flatten (time-major) and affine map to `(2)`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::EqualizerConfig;
use crate::dataset::FEATURES;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvBlock {
    /// `(F, k, 4)` row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    /// `(4H, F)` row-major, gate blocks `i, f, g, o`.
    pub wx: Vec<f64>,
    /// `(4H, H)` row-major.
    pub wh: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmBlock {
    pub fw: LstmCell,
    pub bw: LstmCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    /// `(M * 2H, 2)` row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// Parameter blocks in checkpoint order.
pub trait ParamBlock {
    fn slices(&self) -> Vec<&[f64]>;
    fn slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn zeros_like(&self) -> Self
    where
        Self: Clone,
    {
        let mut z = self.clone();
        for s in z.slices_mut() {
            s.fill(0.0);
        }
        z
    }
}

impl ParamBlock for ConvBlock {
    fn slices(&self) -> Vec<&[f64]> {
        vec![&self.w, &self.b]
    }
    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w, &mut self.b]
    }
}

impl ParamBlock for BiLstmBlock {
    fn slices(&self) -> Vec<&[f64]> {
        vec![
            &self.fw.wx,
            &self.fw.wh,
            &self.fw.b,
            &self.bw.wx,
            &self.bw.wh,
            &self.bw.b,
        ]
    }
    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.fw.wx,
            &mut self.fw.wh,
            &mut self.fw.b,
            &mut self.bw.wx,
            &mut self.bw.wh,
            &mut self.bw.b,
        ]
    }
}

impl ParamBlock for DenseBlock {
    fn slices(&self) -> Vec<&[f64]> {
        vec![&self.w, &self.b]
    }
    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w, &mut self.b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub conv: ConvBlock,
    pub bilstm: BiLstmBlock,
    pub dense: DenseBlock,
}

impl Params {
    pub fn zeros(cfg: &EqualizerConfig) -> Self {
        let (f, k, h, m) = (cfg.n_filters, cfg.kernel_size, cfg.lstm_hidden, cfg.window_len());
        let cell = || LstmCell {
            wx: vec![0.0; 4 * h * f],
            wh: vec![0.0; 4 * h * h],
            b: vec![0.0; 4 * h],
        };
        Params {
            conv: ConvBlock {
                w: vec![0.0; f * k * FEATURES],
                b: vec![0.0; f],
            },
            bilstm: BiLstmBlock { fw: cell(), bw: cell() },
            dense: DenseBlock {
                w: vec![0.0; m * 2 * h * 2],
                b: vec![0.0; 2],
            },
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut v = self.conv.slices();
        v.extend(self.bilstm.slices());
        v.extend(self.dense.slices());
        v
    }

    pub fn len(&self) -> usize {
        self.conv.len() + self.bilstm.len() + self.dense.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-layer freeze flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Freeze {
    pub conv: bool,
    pub bilstm: bool,
    pub dense: bool,
}

impl Freeze {
    pub const NONE: Freeze = Freeze {
        conv: false,
        bilstm: false,
        dense: false,
    };
    pub const ALL: Freeze = Freeze {
        conv: true,
        bilstm: true,
        dense: true,
    };
}

/// Gradients of the unfrozen blocks; frozen blocks are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv: Option<ConvBlock>,
    pub bilstm: Option<BiLstmBlock>,
    pub dense: Option<DenseBlock>,
    /// Mean squared error of the batch.
    pub loss: f64,
}

/// First and second Adam moments plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Params,
    pub v: Params,
    pub step: u64,
}

impl AdamState {
    pub fn new(cfg: &EqualizerConfig) -> Self {
        Self {
            m: Params::zeros(cfg),
            v: Params::zeros(cfg),
            step: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerModel {
    pub cfg: EqualizerConfig,
    pub params: Params,
    pub freeze: Freeze,
    pub adam: AdamState,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn glorot(rng: &mut ChaCha8Rng, w: &mut [f64], fan_in: usize, fan_out: usize) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in w.iter_mut() {
        *v = rng.random_range(-limit..limit);
    }
}

/// Activations kept from the forward pass of one example.
#[derive(Debug, Clone)]
pub struct ExampleCache {
    input: Vec<f64>,
    conv_pre: Vec<f64>,
    conv_out: Vec<f64>,
    fw: LstmTrace,
    bw: LstmTrace,
    features: Vec<f64>,
}

/// Per-step gate activations, cell and hidden states, stored in processing order.
#[derive(Debug, Clone)]
struct LstmTrace {
    gates: Vec<f64>,
    cells: Vec<f64>,
    hidden: Vec<f64>,
}

/// Cached forward pass of a batch.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    examples: Vec<ExampleCache>,
    pub predictions: Vec<f64>,
}

impl EqualizerModel {
    /// Glorot-uniform weights, zero biases, forget-gate bias 1.
    pub fn init(cfg: EqualizerConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut p = Params::zeros(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, k, h, m) = (cfg.n_filters, cfg.kernel_size, cfg.lstm_hidden, cfg.window_len());
        glorot(&mut rng, &mut p.conv.w, k * FEATURES, k * f);
        for cell in [&mut p.bilstm.fw, &mut p.bilstm.bw] {
            glorot(&mut rng, &mut cell.wx, f, 4 * h);
            glorot(&mut rng, &mut cell.wh, h, 4 * h);
            cell.b[h..2 * h].fill(1.0);
        }
        glorot(&mut rng, &mut p.dense.w, m * 2 * h, 2);
        Ok(Self::from_params(cfg, p))
    }

    /// All parameters zero, biases included.
    pub fn zeros(cfg: EqualizerConfig) -> Self {
        Self::from_params(cfg, Params::zeros(&cfg))
    }

    pub fn from_params(cfg: EqualizerConfig, params: Params) -> Self {
        Self {
            cfg,
            adam: AdamState::new(&cfg),
            params,
            freeze: Freeze::NONE,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    fn check_shape(&self, len: usize, shape: [usize; 3]) -> Result<usize> {
        let m = self.cfg.window_len();
        if shape[1] != m || shape[2] != FEATURES || shape[0] * shape[1] * shape[2] != len {
            return Err(Error::ShapeMismatch {
                expected: format!("(B, {m}, {FEATURES}) with {len} values"),
                got: format!("{shape:?}"),
            });
        }
        Ok(shape[0])
    }

    /// Predictions `(B, 2)` for inputs of shape `(B, M, 4)`.
    pub fn forward(&self, inputs: &[f64], shape: [usize; 3]) -> Result<Vec<f64>> {
        let b = self.check_shape(inputs.len(), shape)?;
        let stride = self.cfg.window_len() * FEATURES;
        let mut out = Vec::with_capacity(2 * b);
        let mut scratch = Scratch::new(&self.cfg);
        for ex in inputs.chunks_exact(stride) {
            out.extend_from_slice(&self.predict_one(ex, &mut scratch));
        }
        Ok(out)
    }

    /// Forward pass that keeps the activations needed by [`Self::backward`].
    pub fn forward_train(&self, inputs: &[f64], shape: [usize; 3]) -> Result<ForwardCache> {
        self.check_shape(inputs.len(), shape)?;
        let stride = self.cfg.window_len() * FEATURES;
        let mut predictions = Vec::with_capacity(2 * shape[0]);
        let examples = inputs
            .chunks_exact(stride)
            .map(|ex| {
                let c = self.forward_example(ex);
                predictions.extend_from_slice(&self.dense_out(&c.features));
                c
            })
            .collect();
        Ok(ForwardCache { examples, predictions })
    }

    /// Exact gradients of `mean((pred - target)^2)` over the batch and both outputs.
    pub fn backward(&self, cache: &ForwardCache, targets: &[f64]) -> Result<Gradients> {
        let b = cache.examples.len();
        if targets.len() != 2 * b {
            return Err(Error::ShapeMismatch {
                expected: format!("({b}, 2) targets"),
                got: format!("{} values", targets.len()),
            });
        }
        let fz = self.freeze;
        let mut g_conv = (!fz.conv).then(|| self.params.conv.zeros_like());
        let mut g_lstm = (!fz.bilstm).then(|| self.params.bilstm.zeros_like());
        let mut g_dense = (!fz.dense).then(|| self.params.dense.zeros_like());
        let mut loss = 0.0;
        let need_features_grad = !fz.conv || !fz.bilstm;
        let mut dfeat = vec![0.0; self.cfg.window_len() * 2 * self.cfg.lstm_hidden];

        for (i, ex) in cache.examples.iter().enumerate() {
            let p = &cache.predictions[2 * i..2 * i + 2];
            let t = &targets[2 * i..2 * i + 2];
            let e = [p[0] - t[0], p[1] - t[1]];
            loss += e[0] * e[0] + e[1] * e[1];
            let dy = [e[0] / b as f64, e[1] / b as f64];

            if let Some(g) = g_dense.as_mut() {
                for (j, &x) in ex.features.iter().enumerate() {
                    g.w[2 * j] += x * dy[0];
                    g.w[2 * j + 1] += x * dy[1];
                }
                g.b[0] += dy[0];
                g.b[1] += dy[1];
            }
            if !need_features_grad {
                continue;
            }
            let w = &self.params.dense.w;
            for (j, d) in dfeat.iter_mut().enumerate() {
                *d = w[2 * j] * dy[0] + w[2 * j + 1] * dy[1];
            }
            let dconv = self.backward_bilstm(ex, &dfeat, g_lstm.as_mut(), !fz.conv);
            if let (Some(g), Some(dconv)) = (g_conv.as_mut(), dconv) {
                self.backward_conv(ex, &dconv, g);
            }
        }
        Ok(Gradients {
            conv: g_conv,
            bilstm: g_lstm,
            dense: g_dense,
            loss: loss / (2 * b) as f64,
        })
    }

    /// Forward + backward on one batch.
    pub fn loss_and_gradients(&self, inputs: &[f64], shape: [usize; 3], targets: &[f64]) -> Result<Gradients> {
        let cache = self.forward_train(inputs, shape)?;
        self.backward(&cache, targets)
    }

    fn conv_forward(&self, input: &[f64], pre: &mut [f64], out: &mut [f64]) {
        let (f_n, k) = (self.cfg.n_filters, self.cfg.kernel_size);
        let m = self.cfg.window_len();
        let pad = (k - 1) / 2;
        let conv = &self.params.conv;
        let act = self.cfg.conv_activation;
        for t in 0..m {
            for f in 0..f_n {
                let mut acc = conv.b[f];
                let wf = &conv.w[f * k * FEATURES..(f + 1) * k * FEATURES];
                for j in 0..k {
                    let src = t as isize + j as isize - pad as isize;
                    if src < 0 || src >= m as isize {
                        continue;
                    }
                    let x = &input[src as usize * FEATURES..(src as usize + 1) * FEATURES];
                    let wj = &wf[j * FEATURES..(j + 1) * FEATURES];
                    acc += wj[0] * x[0] + wj[1] * x[1] + wj[2] * x[2] + wj[3] * x[3];
                }
                pre[t * f_n + f] = acc;
                out[t * f_n + f] = act.apply(acc);
            }
        }
    }

    fn forward_example(&self, input: &[f64]) -> ExampleCache {
        let (f_n, h) = (self.cfg.n_filters, self.cfg.lstm_hidden);
        let m = self.cfg.window_len();
        let mut conv_pre = vec![0.0; m * f_n];
        let mut conv_out = vec![0.0; m * f_n];
        self.conv_forward(input, &mut conv_pre, &mut conv_out);
        let fw = run_lstm(&self.params.bilstm.fw, &conv_out, m, f_n, h, false);
        let bw = run_lstm(&self.params.bilstm.bw, &conv_out, m, f_n, h, true);
        let features = concat_features(&fw.hidden, &bw.hidden, m, h);
        ExampleCache {
            input: input.to_vec(),
            conv_pre,
            conv_out,
            fw,
            bw,
            features,
        }
    }

    fn dense_out(&self, features: &[f64]) -> [f64; 2] {
        let d = &self.params.dense;
        let mut y = [d.b[0], d.b[1]];
        for (j, &x) in features.iter().enumerate() {
            y[0] += d.w[2 * j] * x;
            y[1] += d.w[2 * j + 1] * x;
        }
        y
    }

    fn predict_one(&self, input: &[f64], s: &mut Scratch) -> [f64; 2] {
        let (f_n, h) = (self.cfg.n_filters, self.cfg.lstm_hidden);
        let m = self.cfg.window_len();
        self.conv_forward(input, &mut s.conv_pre, &mut s.conv_out);
        lstm_hidden_only(
            &self.params.bilstm.fw,
            &s.conv_out,
            m,
            f_n,
            h,
            false,
            &mut s.z,
            &mut s.c,
            &mut s.fw_h,
        );
        lstm_hidden_only(
            &self.params.bilstm.bw,
            &s.conv_out,
            m,
            f_n,
            h,
            true,
            &mut s.z,
            &mut s.c,
            &mut s.bw_h,
        );
        for t in 0..m {
            s.features[t * 2 * h..t * 2 * h + h].copy_from_slice(&s.fw_h[t * h..(t + 1) * h]);
            s.features[t * 2 * h + h..(t + 1) * 2 * h].copy_from_slice(&s.bw_h[t * h..(t + 1) * h]);
        }
        self.dense_out(&s.features)
    }

    /// Backpropagates `dfeat` through both directions. Accumulates weight
    /// gradients into `grads` when given and returns the gradient w.r.t. the
    /// conv output when `want_input_grad`.
    fn backward_bilstm(
        &self,
        ex: &ExampleCache,
        dfeat: &[f64],
        mut grads: Option<&mut BiLstmBlock>,
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let (f_n, h) = (self.cfg.n_filters, self.cfg.lstm_hidden);
        let m = self.cfg.window_len();
        let mut dx = want_input_grad.then(|| vec![0.0; m * f_n]);
        for reverse in [false, true] {
            let (cell, trace) = if reverse {
                (&self.params.bilstm.bw, &ex.bw)
            } else {
                (&self.params.bilstm.fw, &ex.fw)
            };
            let g = grads
                .as_deref_mut()
                .map(|g| if reverse { &mut g.bw } else { &mut g.fw });
            // gradient of this direction's hidden states, indexed by time
            let dh_time: Vec<f64> = (0..m)
                .flat_map(|t| {
                    let off = t * 2 * h + if reverse { h } else { 0 };
                    dfeat[off..off + h].iter().copied()
                })
                .collect();
            bptt(
                cell,
                trace,
                &ex.conv_out,
                &dh_time,
                m,
                f_n,
                h,
                reverse,
                g,
                dx.as_deref_mut(),
            );
        }
        dx
    }

    fn backward_conv(&self, ex: &ExampleCache, dout: &[f64], g: &mut ConvBlock) {
        let (f_n, k) = (self.cfg.n_filters, self.cfg.kernel_size);
        let m = self.cfg.window_len();
        let pad = (k - 1) / 2;
        let act = self.cfg.conv_activation;
        for t in 0..m {
            for f in 0..f_n {
                let d = dout[t * f_n + f] * act.derivative(ex.conv_pre[t * f_n + f]);
                if d == 0.0 {
                    continue;
                }
                g.b[f] += d;
                let gf = &mut g.w[f * k * FEATURES..(f + 1) * k * FEATURES];
                for j in 0..k {
                    let src = t as isize + j as isize - pad as isize;
                    if src < 0 || src >= m as isize {
                        continue;
                    }
                    let x = &ex.input[src as usize * FEATURES..(src as usize + 1) * FEATURES];
                    for c in 0..FEATURES {
                        gf[j * FEATURES + c] += d * x[c];
                    }
                }
            }
        }
    }
}

struct Scratch {
    conv_pre: Vec<f64>,
    conv_out: Vec<f64>,
    z: Vec<f64>,
    c: Vec<f64>,
    fw_h: Vec<f64>,
    bw_h: Vec<f64>,
    features: Vec<f64>,
}

impl Scratch {
    fn new(cfg: &EqualizerConfig) -> Self {
        let (f, h, m) = (cfg.n_filters, cfg.lstm_hidden, cfg.window_len());
        Self {
            conv_pre: vec![0.0; m * f],
            conv_out: vec![0.0; m * f],
            z: vec![0.0; 4 * h],
            c: vec![0.0; h],
            fw_h: vec![0.0; m * h],
            bw_h: vec![0.0; m * h],
            features: vec![0.0; m * 2 * h],
        }
    }
}

fn concat_features(fw_h: &[f64], bw_h: &[f64], m: usize, h: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m * 2 * h);
    for t in 0..m {
        out.extend_from_slice(&fw_h[t * h..(t + 1) * h]);
        out.extend_from_slice(&bw_h[t * h..(t + 1) * h]);
    }
    out
}

/// Four independent partial sums so the reduction pipelines.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `z = b + Wx x + Wh h_prev`
#[inline]
fn gate_preactivations(cell: &LstmCell, x: &[f64], h_prev: Option<&[f64]>, f_n: usize, h: usize, z: &mut [f64]) {
    for r in 0..4 * h {
        let mut acc = cell.b[r] + dot(&cell.wx[r * f_n..(r + 1) * f_n], x);
        if let Some(hp) = h_prev {
            acc += dot(&cell.wh[r * h..(r + 1) * h], hp);
        }
        z[r] = acc;
    }
}

#[inline]
fn activate_gates(z: &mut [f64], h: usize) {
    for r in 0..4 * h {
        z[r] = if (2 * h..3 * h).contains(&r) {
            z[r].tanh()
        } else {
            sigmoid(z[r])
        };
    }
}

/// Runs one direction. Traces are indexed by time step (not processing order).
fn run_lstm(cell: &LstmCell, xs: &[f64], m: usize, f_n: usize, h: usize, reverse: bool) -> LstmTrace {
    let mut gates = vec![0.0; m * 4 * h];
    let mut cells = vec![0.0; m * h];
    let mut hidden = vec![0.0; m * h];
    let mut prev: Option<usize> = None;
    for s in 0..m {
        let t = if reverse { m - 1 - s } else { s };
        let x = &xs[t * f_n..(t + 1) * f_n];
        let z = &mut gates[t * 4 * h..(t + 1) * 4 * h];
        gate_preactivations(cell, x, prev.map(|p| &hidden[p * h..(p + 1) * h]), f_n, h, z);
        activate_gates(z, h);
        for j in 0..h {
            let (i, f, g, o) = (z[j], z[h + j], z[2 * h + j], z[3 * h + j]);
            let c_prev = prev.map_or(0.0, |p| cells[p * h + j]);
            let c = f * c_prev + i * g;
            cells[t * h + j] = c;
            hidden[t * h + j] = o * c.tanh();
        }
        prev = Some(t);
    }
    LstmTrace { gates, cells, hidden }
}

#[allow(clippy::too_many_arguments)]
fn lstm_hidden_only(
    cell: &LstmCell,
    xs: &[f64],
    m: usize,
    f_n: usize,
    h: usize,
    reverse: bool,
    z: &mut [f64],
    c: &mut [f64],
    hidden: &mut [f64],
) {
    c.fill(0.0);
    let mut prev: Option<usize> = None;
    for s in 0..m {
        let t = if reverse { m - 1 - s } else { s };
        let x = &xs[t * f_n..(t + 1) * f_n];
        {
            let h_prev = prev.map(|p| &hidden[p * h..(p + 1) * h]);
            gate_preactivations(cell, x, h_prev, f_n, h, z);
        }
        activate_gates(z, h);
        for j in 0..h {
            let (i, f, g, o) = (z[j], z[h + j], z[2 * h + j], z[3 * h + j]);
            c[j] = f * c[j] + i * g;
            hidden[t * h + j] = o * c[j].tanh();
        }
        prev = Some(t);
    }
}

/// Backpropagation through time for one direction.
#[allow(clippy::too_many_arguments)]
fn bptt(
    cell: &LstmCell,
    trace: &LstmTrace,
    xs: &[f64],
    dh_time: &[f64],
    m: usize,
    f_n: usize,
    h: usize,
    reverse: bool,
    mut grads: Option<&mut LstmCell>,
    mut dx: Option<&mut [f64]>,
) {
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    // processing order s = 0..m maps to time t; walk it backwards
    for s in (0..m).rev() {
        let t = if reverse { m - 1 - s } else { s };
        let prev = (s > 0).then(|| if reverse { t + 1 } else { t - 1 });
        let gz = &trace.gates[t * 4 * h..(t + 1) * 4 * h];
        for j in 0..h {
            let (i, f, g, o) = (gz[j], gz[h + j], gz[2 * h + j], gz[3 * h + j]);
            let c = trace.cells[t * h + j];
            let tc = c.tanh();
            let c_prev = prev.map_or(0.0, |p| trace.cells[p * h + j]);
            let dh = dh_time[t * h + j] + dh_next[j];
            let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
            dz[j] = dc * g * i * (1.0 - i);
            dz[h + j] = dc * c_prev * f * (1.0 - f);
            dz[2 * h + j] = dc * i * (1.0 - g * g);
            dz[3 * h + j] = dh * tc * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        let x = &xs[t * f_n..(t + 1) * f_n];
        let h_prev = prev.map(|p| &trace.hidden[p * h..(p + 1) * h]);
        if let Some(g) = grads.as_deref_mut() {
            for r in 0..4 * h {
                let d = dz[r];
                g.b[r] += d;
                let gx = &mut g.wx[r * f_n..(r + 1) * f_n];
                for (a, v) in gx.iter_mut().zip(x) {
                    *a += d * v;
                }
                if let Some(hp) = h_prev {
                    let gh = &mut g.wh[r * h..(r + 1) * h];
                    for (a, v) in gh.iter_mut().zip(hp) {
                        *a += d * v;
                    }
                }
            }
        }
        dh_next.fill(0.0);
        for r in 0..4 * h {
            let d = dz[r];
            if prev.is_some() {
                let wh = &cell.wh[r * h..(r + 1) * h];
                for (a, w) in dh_next.iter_mut().zip(wh) {
                    *a += d * w;
                }
            }
            if let Some(dx) = dx.as_deref_mut() {
                let wx = &cell.wx[r * f_n..(r + 1) * f_n];
                let dxt = &mut dx[t * f_n..(t + 1) * f_n];
                for (a, w) in dxt.iter_mut().zip(wx) {
                    *a += d * w;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> EqualizerConfig {
        EqualizerConfig::new(3, 2, 2, 1)
    }

    #[test]
    fn init_is_deterministic_and_sized() {
        let a = EqualizerModel::init(EqualizerConfig::new(32, 10, 40, 10), 5).unwrap();
        let b = EqualizerModel::init(EqualizerConfig::new(32, 10, 40, 10), 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.params.conv.len(), 1312);
        assert_eq!(a.params.bilstm.len(), 23360);
        assert_eq!(a.params.dense.len(), 3362);
        assert!(a.params.conv.b.iter().all(|&v| v == 0.0));
        assert!(a.params.bilstm.fw.b[40..80].iter().all(|&v| v == 1.0));
        assert!(a.params.bilstm.fw.b[..40].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_model_zero_output() {
        let m = EqualizerModel::zeros(EqualizerConfig::new(4, 3, 5, 2));
        let x = vec![0.0; 3 * 5 * 4];
        assert_eq!(m.forward(&x, [3, 5, 4]).unwrap(), vec![0.0; 6]);
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let m = EqualizerModel::zeros(tiny());
        let err = m.forward(&[0.0; 20], [1, 5, 4]).unwrap_err().to_string();
        assert!(err.contains("(B, 3, 4)") && err.contains("[1, 5, 4]"), "{err}");
    }

    #[test]
    fn cached_and_scratch_paths_agree() {
        let m = EqualizerModel::init(EqualizerConfig::new(5, 4, 3, 3), 2).unwrap();
        let x: Vec<f64> = (0..2 * 7 * 4).map(|i| ((i * 37) % 11) as f64 / 7.0 - 0.7).collect();
        let a = m.forward(&x, [2, 7, 4]).unwrap();
        let b = m.forward_train(&x, [2, 7, 4]).unwrap().predictions;
        assert_eq!(a, b);
    }

    #[test]
    fn frozen_blocks_have_no_gradients() {
        let mut m = EqualizerModel::init(tiny(), 1).unwrap();
        let x: Vec<f64> = (0..4 * 3 * 4).map(|i| (i as f64 * 0.37).sin()).collect();
        let t: Vec<f64> = (0..8).map(|i| (i as f64).cos()).collect();
        let all = m.loss_and_gradients(&x, [4, 3, 4], &t).unwrap();
        m.freeze = Freeze {
            conv: true,
            ..Freeze::NONE
        };
        let g = m.loss_and_gradients(&x, [4, 3, 4], &t).unwrap();
        assert!(g.conv.is_none());
        assert_eq!(g.bilstm, all.bilstm);
        assert_eq!(g.dense, all.dense);
        m.freeze = Freeze {
            conv: false,
            bilstm: true,
            dense: true,
        };
        let g = m.loss_and_gradients(&x, [4, 3, 4], &t).unwrap();
        assert!(g.bilstm.is_none() && g.dense.is_none());
        assert_eq!(g.conv, all.conv);
    }

    #[test]
    fn gradient_vanishes_at_exact_fit() {
        let m = EqualizerModel::init(tiny(), 4).unwrap();
        let x: Vec<f64> = (0..4 * 3 * 4).map(|i| (i as f64 * 0.11).cos()).collect();
        let pred = m.forward(&x, [4, 3, 4]).unwrap();
        let g = m.loss_and_gradients(&x, [4, 3, 4], &pred).unwrap();
        assert_eq!(g.loss, 0.0);
        for s in g
            .conv
            .unwrap()
            .slices()
            .into_iter()
            .chain(g.bilstm.as_ref().unwrap().slices())
        {
            assert!(s.iter().all(|v| v.abs() < 1e-12));
        }
    }
}

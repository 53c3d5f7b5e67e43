use num_complex::Complex64;

use super::adam::adam_step;
use super::config::{EqualizerConfig, TlStrategy, TrainConfig};
use super::model::{EqualizerModel, Freeze};
use crate::dataset::{shuffle_epoch, window_frame, Pol, WindowedDataset, FEATURES};
use crate::error::{Error, Result};
use crate::metrics::{compute_ber, q_from_ber, BitErrors, MetricTrace, TraceRow};
use crate::rxdsp::SymbolFrame;
use crate::txsig::ModFormat;

/// Windowed test frame plus the constellation used for hard decisions.
#[derive(Debug, Clone)]
pub struct TestSet {
    pub ds: WindowedDataset,
    pub fmt: ModFormat,
}

impl TestSet {
    pub fn from_frame(frame: &SymbolFrame, n_taps: usize, pol: Pol) -> Result<Self> {
        Ok(Self {
            ds: window_frame(frame, n_taps, pol)?,
            fmt: frame.mod_format.clone(),
        })
    }
}

/// Batched inference over a whole dataset.
pub fn predict(model: &EqualizerModel, ds: &WindowedDataset) -> Result<Vec<f64>> {
    model.forward(&ds.inputs, [ds.len(), ds.window_len(), FEATURES])
}

pub fn mse(pred: &[f64], targets: &[f64]) -> f64 {
    let s: f64 = pred.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    s / pred.len().max(1) as f64
}

/// Bit errors of the equalized test set, with the model treated as frozen.
pub fn evaluate(model: &EqualizerModel, test: &TestSet) -> Result<BitErrors> {
    let pred = predict(model, &test.ds)?;
    let soft: Vec<Complex64> = pred.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
    compute_ber(&soft, &test.ds.target_idx, &test.fmt)
}

fn eval_row(model: &EqualizerModel, epoch: usize, train_mse: f64, test: &TestSet) -> Result<TraceRow> {
    let be = evaluate(model, test)?;
    Ok(TraceRow {
        epoch,
        train_mse,
        ber: be.ber(),
        q_db: q_from_ber(be.ber()),
    })
}

/// Mini-batch Adam training. Row 0 of the trace evaluates the initial model;
/// each later row follows one epoch.
pub fn train(
    mut model: EqualizerModel,
    train_ds: &WindowedDataset,
    test: &TestSet,
    tcfg: &TrainConfig,
    trace: MetricTrace,
) -> Result<(EqualizerModel, MetricTrace)> {
    tcfg.validate()?;
    if train_ds.is_empty() {
        return Err(Error::InvalidSpec("empty training dataset".into()));
    }
    let mut trace = trace;
    let initial_mse = mse(&predict(&model, train_ds)?, &train_ds.targets);
    trace.push(eval_row(&model, 0, initial_mse, test)?);

    let m = train_ds.window_len();
    let stride = train_ds.example_stride();
    let n = train_ds.len();
    let mut xb = Vec::with_capacity(tcfg.batch_size * stride);
    let mut yb = Vec::with_capacity(tcfg.batch_size * 2);
    for epoch in 1..=tcfg.max_epochs {
        let perm = shuffle_epoch(n, epoch, tcfg.seed);
        let mut sum = 0.0;
        for (batch, idx) in perm.chunks(tcfg.batch_size).enumerate() {
            xb.clear();
            yb.clear();
            for &i in idx {
                xb.extend_from_slice(train_ds.input(i));
                yb.extend_from_slice(&train_ds.target(i));
            }
            let g = model.loss_and_gradients(&xb, [idx.len(), m, FEATURES], &yb)?;
            if !g.loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            sum += g.loss * idx.len() as f64;
            adam_step(&mut model, &g, tcfg.learning_rate);
        }
        trace.push(eval_row(&model, epoch, sum / n as f64, test)?);
    }
    Ok((model, trace))
}

pub fn strategy_freeze(strategy: TlStrategy) -> Freeze {
    match strategy {
        TlStrategy::None | TlStrategy::RetrainAll => Freeze::NONE,
        TlStrategy::FreezeConv => Freeze {
            conv: true,
            ..Freeze::NONE
        },
        TlStrategy::FreezeRecurrent => Freeze {
            conv: false,
            bilstm: true,
            dense: true,
        },
    }
}

/// Copies the source weights into a fresh model for `target` with the
/// strategy's freeze flags and a reset optimizer.
pub fn apply_tl_strategy(
    source: &EqualizerModel,
    target: &EqualizerConfig,
    strategy: TlStrategy,
) -> Result<EqualizerModel> {
    let (s, t) = (&source.cfg, target);
    let mut bad = Vec::new();
    if (s.n_filters, s.kernel_size) != (t.n_filters, t.kernel_size) {
        bad.push(format!(
            "conv (filters {}x{} vs {}x{})",
            s.n_filters, s.kernel_size, t.n_filters, t.kernel_size
        ));
    }
    if (s.lstm_hidden, s.n_filters) != (t.lstm_hidden, t.n_filters) {
        bad.push(format!("bilstm (hidden {} vs {})", s.lstm_hidden, t.lstm_hidden));
    }
    if (s.n_taps, s.lstm_hidden) != (t.n_taps, t.lstm_hidden) {
        bad.push(format!("dense (taps {} vs {})", s.n_taps, t.n_taps));
    }
    if !bad.is_empty() {
        return Err(Error::ArchitectureMismatch(bad));
    }
    let mut model = EqualizerModel::from_params(*target, source.params.clone());
    model.freeze = strategy_freeze(strategy);
    Ok(model)
}

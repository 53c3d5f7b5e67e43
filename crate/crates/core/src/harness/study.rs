//! Reference curves, savings bookkeeping and transfer-direction studies.

use std::collections::HashMap;
use std::rc::Rc;

use num_complex::Complex64;

use crate::dataset::{subset_fraction, window_frame, Pol, WindowedDataset, FEATURES};
use crate::error::{Error, Result};
use crate::fiberlink::splitmix64;
use crate::metrics::{compute_ber, q_from_ber, BitErrors, MetricTrace, TraceRow};
use crate::neuralnet::{apply_tl_strategy, evaluate, mse, predict, train, EqualizerModel, TestSet, TlStrategy};
use crate::rxdsp::{build_symbol_frame, SymbolFrame};
use crate::txsig::generate_symbols;

use super::scenario::{Profile, Scenario};

/// Which independent realization of a scenario to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameRole {
    Train,
    Test,
}

impl Scenario {
    /// Simulates the frame with the scenario's own seeds.
    pub fn simulate(&self) -> Result<SymbolFrame> {
        self.validate()?;
        let stream = generate_symbols(&self.tx)?;
        let mut frame = build_symbol_frame(&stream, &self.tx, Some(&self.link), self.transceiver_noise)?;
        frame.meta.label = self.label.clone();
        Ok(frame)
    }

    /// Simulates the `role` realization for experiment `seed`. Symbol and
    /// noise seeds depend on the seed, the role and the launch configuration
    /// (not the label), so train and test frames are independent and equal
    /// scenarios give equal frames.
    pub fn realize(&self, seed: u64, role: FrameRole) -> Result<SymbolFrame> {
        let role_tag = match role {
            FrameRole::Train => 0x0074_7261_696e,
            FrameRole::Test => 0x7465_7374,
        };
        let cfg_tag = crc32fast::hash(self.fingerprint().as_bytes()) as u64;
        let base = splitmix64(splitmix64(seed) ^ role_tag ^ (cfg_tag << 17));
        let mut s = self.clone();
        s.tx.seed = base;
        s.link.noise_seed = splitmix64(base ^ 0xA5E);
        s.simulate()
    }

    /// Every physical field that affects the simulated frame.
    fn fingerprint(&self) -> String {
        let (t, l) = (&self.tx, &self.link);
        format!(
            "{}|{}|{}|{}|{}|{}|{:?}|{}|{}|{}|{}|{}|{}",
            t.mod_format.order,
            t.symbol_rate_baud,
            t.rolloff,
            t.samples_per_symbol,
            t.launch_power_dbm,
            t.n_symbols,
            l.fiber,
            l.n_spans,
            l.span_length_km,
            l.step_km,
            l.edfa_noise_figure_db,
            l.ase_enabled,
            self.transceiver_noise
        )
    }
}

/// Windowed train/test data of one scenario realization plus its linear-only
/// (no equalizer) bit errors on the test windows.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub train: WindowedDataset,
    pub test: TestSet,
    pub linear: BitErrors,
    /// MSE of the unequalized centre symbols against the targets (train set).
    pub linear_mse: f64,
}

fn centre_symbols(ds: &WindowedDataset) -> Vec<Complex64> {
    let off = ds.n_taps * FEATURES + if ds.pol == Pol::X { 0 } else { 2 };
    (0..ds.len())
        .map(|i| {
            let w = ds.input(i);
            Complex64::new(w[off], w[off + 1])
        })
        .collect()
}

impl ScenarioData {
    pub fn from_frames(train: &SymbolFrame, test: &SymbolFrame, n_taps: usize, pol: Pol) -> Result<Self> {
        let train = window_frame(train, n_taps, pol)?;
        let test = TestSet::from_frame(test, n_taps, pol)?;
        let linear = compute_ber(&centre_symbols(&test.ds), &test.ds.target_idx, &test.fmt)?;
        let lin_train: Vec<f64> = centre_symbols(&train).iter().flat_map(|c| [c.re, c.im]).collect();
        let linear_mse = mse(&lin_train, &train.targets);
        Ok(Self {
            train,
            test,
            linear,
            linear_mse,
        })
    }

    pub fn linear_q(&self) -> Option<f64> {
        q_from_ber(self.linear.ber())
    }
}

/// The four curves compared in a transfer study, all on one target test frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCurves {
    /// Linear-only equalization, constant across epochs.
    pub wo_nn: MetricTrace,
    /// Source model evaluated unchanged on the target, constant across epochs.
    pub snn: MetricTrace,
    /// Random-init training on the target.
    pub wo_tl: MetricTrace,
    /// Transfer training, one trace per fraction in experiment order.
    pub tl: Vec<MetricTrace>,
}

impl ReferenceCurves {
    pub fn all(&self) -> impl Iterator<Item = &MetricTrace> {
        [&self.wo_nn, &self.snn, &self.wo_tl].into_iter().chain(&self.tl)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TLExperiment {
    pub source: Scenario,
    pub target: Scenario,
    pub strategy: TlStrategy,
    pub fractions: Vec<f64>,
    pub q_tolerance_db: f64,
    pub seeds: Vec<u64>,
}

impl TLExperiment {
    /// Experiment with the profile's fractions, tolerance, seeds and strategy
    /// (or the change-type default).
    pub fn new(profile: &Profile, source: Scenario, target: Scenario) -> Self {
        let strategy = profile
            .strategy
            .unwrap_or_else(|| super::scenario::default_strategy(&source, &target));
        Self {
            source,
            target,
            strategy,
            fractions: profile.fractions.clone(),
            q_tolerance_db: profile.q_tolerance_db,
            seeds: profile.seeds.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.target.validate()?;
        if self.strategy == TlStrategy::None {
            return Err(Error::InvalidSpec("transfer needs a strategy other than none".into()));
        }
        if self.fractions.is_empty() || self.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::InvalidSpec(format!(
                "fractions {:?} must lie in (0, 1]",
                self.fractions
            )));
        }
        if !(self.q_tolerance_db > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "q_tolerance_db {} must be > 0",
                self.q_tolerance_db
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidSpec("at least one seed required".into()));
        }
        Ok(())
    }

    pub fn direction_label(&self) -> String {
        format!("{} -> {}", self.source.label, self.target.label)
    }
}

type Key = (String, u64);

fn key(s: &Scenario, seed: u64) -> Key {
    (s.fingerprint(), seed)
}

/// Runs studies under one [`Profile`], memoizing simulated data, source models
/// and from-scratch traces so shared pieces are computed once.
#[derive(Debug)]
pub struct Lab {
    pub profile: Profile,
    data: HashMap<Key, Rc<ScenarioData>>,
    sources: HashMap<Key, (EqualizerModel, MetricTrace)>,
    scratch: HashMap<Key, MetricTrace>,
}

/// Constant trace used for the curves that do not train.
fn flat_trace(id: &str, strategy: &str, epochs: usize, mse: f64, be: BitErrors) -> MetricTrace {
    let mut t = MetricTrace::new(id, strategy, 1.0);
    for epoch in 0..=epochs {
        t.push(TraceRow {
            epoch,
            train_mse: mse,
            ber: be.ber(),
            q_db: q_from_ber(be.ber()),
        });
    }
    t
}

impl Lab {
    pub fn new(profile: Profile) -> Self {
        Self {
            profile,
            data: HashMap::new(),
            sources: HashMap::new(),
            scratch: HashMap::new(),
        }
    }

    pub fn data(&mut self, scenario: &Scenario, seed: u64) -> Result<Rc<ScenarioData>> {
        let k = key(scenario, seed);
        if let Some(d) = self.data.get(&k) {
            return Ok(Rc::clone(d));
        }
        let train = scenario.realize(seed, FrameRole::Train)?;
        let test = scenario.realize(seed, FrameRole::Test)?;
        let d = Rc::new(ScenarioData::from_frames(
            &train,
            &test,
            self.profile.equalizer.n_taps,
            self.profile.pol,
        )?);
        self.data.insert(k, Rc::clone(&d));
        Ok(d)
    }

    fn fit(
        &mut self,
        model: EqualizerModel,
        scenario: &Scenario,
        seed: u64,
        epochs: usize,
        fraction: f64,
        strategy: &str,
    ) -> Result<(EqualizerModel, MetricTrace)> {
        let data = self.data(scenario, seed)?;
        let train_ds = if fraction < 1.0 {
            subset_fraction(&data.train, fraction, seed)?
        } else {
            data.train.clone()
        };
        let tcfg = crate::neuralnet::TrainConfig {
            max_epochs: epochs,
            seed,
            ..self.profile.train
        };
        train(
            model,
            &train_ds,
            &data.test,
            &tcfg,
            MetricTrace::new(&scenario.label, strategy, fraction),
        )
    }

    /// Trains (once per seed) the source model for `scenario`.
    pub fn train_source(&mut self, scenario: &Scenario, seed: u64) -> Result<&(EqualizerModel, MetricTrace)> {
        let k = key(scenario, seed);
        if !self.sources.contains_key(&k) {
            let init = EqualizerModel::init(self.profile.equalizer, seed)?;
            let epochs = self.profile.source_epochs;
            let fitted = self.fit(init, scenario, seed, epochs, 1.0, "none")?;
            self.sources.insert(k.clone(), fitted);
        }
        Ok(&self.sources[&k])
    }

    /// Registers an externally trained source model (e.g. a loaded checkpoint).
    pub fn insert_source(&mut self, scenario: &Scenario, seed: u64, model: EqualizerModel) {
        let trace = MetricTrace::new(&scenario.label, "none", 1.0);
        self.sources.insert(key(scenario, seed), (model, trace));
    }

    pub fn source(&self, scenario: &Scenario, seed: u64) -> Option<&EqualizerModel> {
        self.sources.get(&key(scenario, seed)).map(|(m, _)| m)
    }

    /// Random-init training on `target` for the profile's epoch budget.
    pub fn train_from_scratch(&mut self, target: &Scenario, seed: u64) -> Result<MetricTrace> {
        let k = key(target, seed);
        if let Some(t) = self.scratch.get(&k) {
            return Ok(t.clone());
        }
        let init = EqualizerModel::init(self.profile.equalizer, seed)?;
        let epochs = self.profile.train.max_epochs;
        let (_, trace) = self.fit(init, target, seed, epochs, 1.0, "none")?;
        self.scratch.insert(k, trace.clone());
        Ok(trace)
    }

    /// Transfer training from `source` into `target` on a data fraction.
    pub fn transfer(
        &mut self,
        source: &EqualizerModel,
        target: &Scenario,
        strategy: TlStrategy,
        fraction: f64,
        seed: u64,
    ) -> Result<(EqualizerModel, MetricTrace)> {
        let model = apply_tl_strategy(source, &self.profile.equalizer, strategy)?;
        let epochs = self.profile.train.max_epochs;
        self.fit(model, target, seed, epochs, fraction, strategy.as_str())
    }

    /// Source model evaluated unchanged on the target's test frame.
    pub fn evaluate_on(&mut self, model: &EqualizerModel, target: &Scenario, seed: u64) -> Result<BitErrors> {
        let d = self.data(target, seed)?;
        evaluate(model, &d.test)
    }

    /// The four curves for one seed. The source model must already be
    /// present, via [`Self::train_source`] or [`Self::insert_source`].
    pub fn reference_curves(&mut self, exp: &TLExperiment, seed: u64) -> Result<ReferenceCurves> {
        exp.validate()?;
        let source = self
            .source(&exp.source, seed)
            .cloned()
            .ok_or_else(|| Error::MissingSource(exp.source.label.clone()))?;
        let epochs = self.profile.train.max_epochs;
        let target = self.data(&exp.target, seed)?;
        let id = &exp.target.label;
        let wo_nn = flat_trace(id, "wo_nn", epochs, target.linear_mse, target.linear);
        let snn_mse = mse(&predict(&source, &target.train)?, &target.train.targets);
        let snn = flat_trace(id, "snn", epochs, snn_mse, evaluate(&source, &target.test)?);
        let wo_tl = self.train_from_scratch(&exp.target, seed)?;
        let tl = exp
            .fractions
            .iter()
            .map(|&f| {
                self.transfer(&source, &exp.target, exp.strategy, f, seed)
                    .map(|(_, t)| t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ReferenceCurves { wo_nn, snn, wo_tl, tl })
    }
}

/// Standalone form of [`Lab::reference_curves`]: `source` is the trained
/// source model, `None` is reported as a missing checkpoint.
pub fn run_reference_curves(
    profile: &Profile,
    exp: &TLExperiment,
    seed: u64,
    source: Option<&EqualizerModel>,
) -> Result<ReferenceCurves> {
    let mut lab = Lab::new(profile.clone());
    let model = source.ok_or_else(|| Error::MissingSource(exp.source.label.clone()))?;
    lab.insert_source(&exp.source, seed, model.clone());
    lab.reference_curves(exp, seed)
}

/// Q of a row for threshold tests: BER 0 counts as +∞, BER ≥ 0.5 as −∞.
pub fn effective_q(row: &TraceRow) -> f64 {
    match row.q_db {
        Some(q) => q,
        None if row.ber == 0.0 => f64::INFINITY,
        None => f64::NEG_INFINITY,
    }
}

pub fn best_effective_q(trace: &MetricTrace) -> Option<f64> {
    trace.rows.iter().map(effective_q).reduce(f64::max)
}

/// First epoch whose Q reaches `threshold`, counting epoch 0 as 1.
pub fn epochs_to_threshold(trace: &MetricTrace, threshold: f64) -> Option<usize> {
    trace
        .rows
        .iter()
        .find(|r| effective_q(r) >= threshold)
        .map(|r| r.epoch.max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavingsRow {
    pub strategy: String,
    pub fraction: f64,
    pub best_q_db: Option<f64>,
    /// `None` when the trace never reaches the threshold.
    pub epochs_to_threshold: Option<usize>,
    pub epoch_savings_pct: Option<f64>,
    pub data_savings_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavingsReport {
    pub q_tolerance_db: f64,
    pub best_q_wo_tl: f64,
    pub threshold_db: f64,
    pub epochs_wo_tl: usize,
    pub q_wo_nn: Option<f64>,
    pub q_snn: Option<f64>,
    pub trace_wo_tl: MetricTrace,
    pub rows: Vec<SavingsRow>,
}

impl SavingsReport {
    /// Data savings of the smallest fraction that reached the threshold.
    pub fn data_savings_pct(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.epochs_to_threshold.is_some())
            .min_by(|a, b| a.fraction.total_cmp(&b.fraction))
            .and_then(|r| r.data_savings_pct)
    }

    /// Row of the largest fraction (normally the full dataset).
    pub fn full_data_row(&self) -> Option<&SavingsRow> {
        self.rows.iter().max_by(|a, b| a.fraction.total_cmp(&b.fraction))
    }
}

/// `(1 - e_tl / e_wo_tl) * 100`.
pub fn epoch_savings_pct(e_tl: usize, e_wo_tl: usize) -> f64 {
    (1.0 - e_tl as f64 / e_wo_tl as f64) * 100.0
}

/// Threshold = best from-scratch Q − tolerance; each transfer trace is scored
/// against it.
pub fn compute_savings(curves: &ReferenceCurves, q_tolerance_db: f64) -> Result<SavingsReport> {
    if !(q_tolerance_db > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "q_tolerance_db {q_tolerance_db} must be > 0"
        )));
    }
    let best = best_effective_q(&curves.wo_tl)
        .filter(|q| *q > f64::NEG_INFINITY)
        .ok_or_else(|| Error::InvalidSpec("from-scratch trace has no usable Q values".into()))?;
    let threshold = best - q_tolerance_db;
    let e_wo = epochs_to_threshold(&curves.wo_tl, threshold).expect("the best row reaches its own threshold");
    let rows = curves
        .tl
        .iter()
        .map(|t| {
            let e = epochs_to_threshold(t, threshold);
            SavingsRow {
                strategy: t.strategy.clone(),
                fraction: t.fraction,
                best_q_db: best_effective_q(t),
                epochs_to_threshold: e,
                epoch_savings_pct: e.map(|e| epoch_savings_pct(e, e_wo)),
                data_savings_pct: e.map(|_| (1.0 - t.fraction) * 100.0),
            }
        })
        .collect();
    Ok(SavingsReport {
        q_tolerance_db,
        best_q_wo_tl: best,
        threshold_db: threshold,
        epochs_wo_tl: e_wo,
        q_wo_nn: curves.wo_nn.rows.first().map(effective_q),
        q_snn: curves.snn.rows.first().map(effective_q),
        trace_wo_tl: curves.wo_tl.clone(),
        rows,
    })
}

/// Median with missing values ranked as `missing` (±∞). An even count
/// averages the two middle values.
pub fn median_ranked(values: &[Option<f64>], missing: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.unwrap_or(missing)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    };
    m.is_finite().then_some(m)
}

/// One line of a transfer-direction table.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionRow {
    pub direction: String,
    /// Median over seeds of the best Q.
    pub best_q_db: Option<f64>,
    /// Median over seeds; "not reached" ranks above every count.
    pub epochs_required: Option<f64>,
    pub per_seed_epochs: Vec<Option<usize>>,
}

/// For every target a "w/o TL" row, then one row per experiment, each with the
/// epochs its trace needs to reach that target's from-scratch best Q.
pub fn run_direction_study(lab: &mut Lab, experiments: &[TLExperiment]) -> Result<Vec<DirectionRow>> {
    let mut rows = Vec::new();
    let mut seen_targets: Vec<String> = Vec::new();
    for exp in experiments {
        exp.validate()?;
        let fraction = exp.fractions.iter().copied().fold(0.0, f64::max);
        let mut per_seed = Vec::new();
        let mut best = Vec::new();
        let mut scratch_rows = (Vec::new(), Vec::new());
        for &seed in &exp.seeds {
            let source = lab.train_source(&exp.source, seed)?.0.clone();
            let wo_tl = lab.train_from_scratch(&exp.target, seed)?;
            let (_, tl) = lab.transfer(&source, &exp.target, exp.strategy, fraction, seed)?;
            let curves = ReferenceCurves {
                wo_nn: MetricTrace::default(),
                snn: MetricTrace::default(),
                wo_tl,
                tl: vec![tl],
            };
            let report = compute_savings(&curves, exp.q_tolerance_db)?;
            per_seed.push(report.rows[0].epochs_to_threshold);
            best.push(report.rows[0].best_q_db);
            scratch_rows.0.push(Some(report.epochs_wo_tl));
            scratch_rows.1.push(Some(report.best_q_wo_tl));
        }
        if !seen_targets.contains(&exp.target.label) {
            seen_targets.push(exp.target.label.clone());
            rows.push(DirectionRow {
                direction: format!("w/o TL {}", exp.target.label),
                best_q_db: median_ranked(&scratch_rows.1, f64::NEG_INFINITY),
                epochs_required: median_ranked(
                    &scratch_rows.0.iter().map(|e| e.map(|e| e as f64)).collect::<Vec<_>>(),
                    f64::INFINITY,
                ),
                per_seed_epochs: scratch_rows.0,
            });
        }
        rows.push(DirectionRow {
            direction: format!("TL {}", exp.direction_label()),
            best_q_db: median_ranked(&best, f64::NEG_INFINITY),
            epochs_required: median_ranked(
                &per_seed.iter().map(|e| e.map(|e| e as f64)).collect::<Vec<_>>(),
                f64::INFINITY,
            ),
            per_seed_epochs: per_seed,
        });
    }
    Ok(rows)
}

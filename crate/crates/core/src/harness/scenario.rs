//! Transmission scenarios and run profiles, plus their config-file keys.
//!
//! Scenario keys (all optional, defaults come from the profile):
//!
//! | key | meaning |
//! |---|---|
//! | `label` | scenario name used in trace CSVs |
//! | `fiber` | `ssmf`, `twc` or `custom` |
//! | `alpha_db_per_km`, `dispersion_ps_nm_km`, `gamma_per_w_km`, `wavelength_nm` | fiber overrides |
//! | `n_spans`, `span_length_km`, `step_km` | link geometry and SSFM step |
//! | `edfa_nf_db`, `ase` | amplifier noise figure and ASE on/off |
//! | `transceiver_noise` | SNR-versus-rate transceiver noise on/off |
//! | `modulation` | QAM order: 16, 32, 64 or 128 |
//! | `symbol_rate_gbd`, `rolloff`, `samples_per_symbol` | waveform |
//! | `launch_power_dbm` | total launch power |
//! | `n_symbols` | frame length, a power of two |
//! | `tx_seed`, `noise_seed` | seeds for single-frame commands |
//!
//! Profile keys:
//!
//! | key | meaning |
//! |---|---|
//! | `profile` | `quick`, `desk` or `paper` base values |
//! | `n_filters`, `kernel_size`, `lstm_hidden`, `n_taps`, `conv_activation` | equalizer shape |
//! | `learning_rate`, `batch_size`, `max_epochs`, `source_epochs` | training |
//! | `polarization` | `x` or `y`, the equalized polarization |
//! | `seeds`, `fractions`, `q_tolerance_db`, `strategy` | experiment settings |

use crate::dataset::Pol;
use crate::error::{Error, Result};
use crate::fiberlink::{FiberSpec, LinkSpec};
use crate::neuralnet::{Activation, EqualizerConfig, TlStrategy, TrainConfig};
use crate::txsig::{make_constellation, TxSpec};

use super::config::KvConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub tx: TxSpec,
    pub link: LinkSpec,
    pub transceiver_noise: bool,
    pub label: String,
}

/// Named fiber presets.
pub fn fiber_by_name(name: &str) -> Option<FiberSpec> {
    match name.to_ascii_lowercase().as_str() {
        "ssmf" => Some(FiberSpec::ssmf()),
        "twc" => Some(FiberSpec::twc()),
        _ => None,
    }
}

pub fn fiber_name(f: &FiberSpec) -> &'static str {
    if *f == FiberSpec::ssmf() {
        "ssmf"
    } else if *f == FiberSpec::twc() {
        "twc"
    } else {
        "custom"
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.tx.validate()?;
        self.link.validate()?;
        if self.label.contains(',') || self.label.contains('\n') {
            return Err(Error::InvalidSpec(format!(
                "label `{}` must not contain commas",
                self.label
            )));
        }
        Ok(())
    }

    /// Compact label such as `twc5x50_16qam_10gbd_3dbm`.
    pub fn auto_label(&self) -> String {
        format!(
            "{}{}x{}_{}qam_{}gbd_{}dbm",
            fiber_name(&self.link.fiber),
            self.link.n_spans,
            self.link.span_length_km,
            self.tx.mod_format.order,
            self.tx.symbol_rate_baud / 1e9,
            self.tx.launch_power_dbm
        )
    }

    pub fn with_power(&self, dbm: f64) -> Self {
        let mut s = self.clone();
        s.tx.launch_power_dbm = dbm;
        s.label = s.auto_label();
        s
    }

    pub fn with_rate_gbd(&self, gbd: f64) -> Self {
        let mut s = self.clone();
        s.tx.symbol_rate_baud = gbd * 1e9;
        s.label = s.auto_label();
        s
    }

    pub fn with_order(&self, order: usize) -> Result<Self> {
        let mut s = self.clone();
        s.tx.mod_format = make_constellation(order)?;
        s.label = s.auto_label();
        Ok(s)
    }

    pub fn with_fiber(&self, fiber: FiberSpec) -> Self {
        let mut s = self.clone();
        s.link.fiber = fiber;
        s.label = s.auto_label();
        s
    }

    /// Reads scenario keys on top of `base`; the label defaults to
    /// [`Self::auto_label`] unless given.
    pub fn from_kv(kv: &mut KvConfig, base: &Scenario) -> Result<Self> {
        let mut s = base.clone();
        let fiber_key: Option<String> = kv.take("fiber")?;
        if let Some(name) = &fiber_key {
            if name != "custom" {
                s.link.fiber = fiber_by_name(name).ok_or_else(|| Error::Config {
                    line: 0,
                    msg: format!("unknown fiber `{name}` (ssmf, twc or custom)"),
                })?;
            }
        }
        let f = s.link.fiber;
        let alpha = kv.take_or("alpha_db_per_km", f.alpha_db_per_km())?;
        let d = kv.take_or("dispersion_ps_nm_km", f.dispersion_d())?;
        let gamma = kv.take_or("gamma_per_w_km", f.gamma())?;
        let wl = kv.take_or("wavelength_nm", f.wavelength_nm())?;
        s.link.fiber = FiberSpec::new(alpha, d, gamma, wl)?;
        s.link.n_spans = kv.take_or("n_spans", s.link.n_spans)?;
        s.link.span_length_km = kv.take_or("span_length_km", s.link.span_length_km)?;
        s.link.step_km = kv.take_or("step_km", s.link.step_km)?;
        s.link.edfa_noise_figure_db = kv.take_or("edfa_nf_db", s.link.edfa_noise_figure_db)?;
        s.link.ase_enabled = kv.take_bool("ase", s.link.ase_enabled)?;
        s.link.noise_seed = kv.take_or("noise_seed", s.link.noise_seed)?;
        s.transceiver_noise = kv.take_bool("transceiver_noise", s.transceiver_noise)?;
        if let Some(order) = kv.take::<usize>("modulation")? {
            s.tx.mod_format = make_constellation(order)?;
        }
        if let Some(gbd) = kv.take::<f64>("symbol_rate_gbd")? {
            s.tx.symbol_rate_baud = gbd * 1e9;
        }
        s.tx.rolloff = kv.take_or("rolloff", s.tx.rolloff)?;
        s.tx.samples_per_symbol = kv.take_or("samples_per_symbol", s.tx.samples_per_symbol)?;
        s.tx.launch_power_dbm = kv.take_or("launch_power_dbm", s.tx.launch_power_dbm)?;
        s.tx.n_symbols = kv.take_or("n_symbols", s.tx.n_symbols)?;
        s.tx.seed = kv.take_or("tx_seed", s.tx.seed)?;
        s.label = match kv.take::<String>("label")? {
            Some(l) => l,
            None => s.auto_label(),
        };
        s.validate()?;
        Ok(s)
    }
}

/// Everything besides the scenarios that a study needs: equalizer shape,
/// optimizer settings, seeds, fractions and the scenario defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub name: String,
    pub equalizer: EqualizerConfig,
    pub train: TrainConfig,
    /// Epochs spent training each source model.
    pub source_epochs: usize,
    pub pol: Pol,
    pub seeds: Vec<u64>,
    pub fractions: Vec<f64>,
    pub q_tolerance_db: f64,
    /// `None` picks the strategy from the kind of scenario change.
    pub strategy: Option<TlStrategy>,
    pub base: Scenario,
}

fn base_scenario(fiber: FiberSpec, n_spans: usize, rate_gbd: f64, power_dbm: f64, n_symbols: usize) -> Scenario {
    let mut s = Scenario {
        tx: TxSpec {
            mod_format: make_constellation(16).expect("16-QAM is supported"),
            symbol_rate_baud: rate_gbd * 1e9,
            rolloff: 0.1,
            samples_per_symbol: 8,
            launch_power_dbm: power_dbm,
            n_symbols,
            seed: 1,
        },
        link: LinkSpec {
            fiber,
            n_spans,
            span_length_km: 50.0,
            step_km: 1.0,
            edfa_noise_figure_db: 4.5,
            noise_seed: 2,
            ase_enabled: true,
        },
        transceiver_noise: false,
        label: String::new(),
    };
    s.label = s.auto_label();
    s
}

impl Profile {
    /// Small model on a reduced-rate TWC link; minutes per study on one core.
    pub fn quick() -> Self {
        Self {
            name: "quick".into(),
            equalizer: EqualizerConfig::new(16, 10, 16, 5),
            train: TrainConfig {
                learning_rate: 1e-2,
                batch_size: 256,
                max_epochs: 20,
                ..TrainConfig::default()
            },
            source_epochs: 60,
            pol: Pol::X,
            seeds: vec![1, 2, 3],
            fractions: vec![1.0, 0.1],
            q_tolerance_db: 0.05,
            strategy: None,
            base: base_scenario(FiberSpec::twc(), 5, 10.0, 3.0, 1 << 14),
        }
    }

    /// 2^14 symbols, 5×50 km, N=10, F=32, H=40, batch 256, 60 epochs.
    pub fn desk() -> Self {
        Self {
            name: "desk".into(),
            equalizer: EqualizerConfig::desk_scale(),
            train: TrainConfig {
                learning_rate: 1e-3,
                batch_size: 256,
                max_epochs: 60,
                ..TrainConfig::default()
            },
            source_epochs: 60,
            base: base_scenario(FiberSpec::twc(), 5, 34.4, 2.0, 1 << 14),
            ..Self::quick()
        }
    }

    /// Full-size equalizer, 2^18-symbol frames, 18×50 km SSMF at 34.4 GBd.
    pub fn paper() -> Self {
        Self {
            name: "paper".into(),
            equalizer: EqualizerConfig::paper_scale(),
            train: TrainConfig::default(),
            source_epochs: 200,
            fractions: vec![1.0, 0.5, 0.1, 0.01],
            base: base_scenario(FiberSpec::ssmf(), 18, 34.4, 5.0, 1 << 18),
            ..Self::quick()
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "quick" => Some(Self::quick()),
            "desk" => Some(Self::desk()),
            "paper" => Some(Self::paper()),
            _ => None,
        }
    }

    /// Reads `profile` and the profile keys, then the scenario keys into `base`.
    pub fn from_kv(kv: &mut KvConfig) -> Result<Self> {
        let name: String = kv.take_or("profile", "quick".to_string())?;
        let mut p = Self::by_name(&name).ok_or_else(|| Error::Config {
            line: 0,
            msg: format!("unknown profile `{name}` (quick, desk or paper)"),
        })?;
        let e = &mut p.equalizer;
        e.n_filters = kv.take_or("n_filters", e.n_filters)?;
        e.kernel_size = kv.take_or("kernel_size", e.kernel_size)?;
        e.lstm_hidden = kv.take_or("lstm_hidden", e.lstm_hidden)?;
        e.n_taps = kv.take_or("n_taps", e.n_taps)?;
        e.conv_activation = kv.take_or::<Activation>("conv_activation", e.conv_activation)?;
        e.validate()?;
        let t = &mut p.train;
        t.learning_rate = kv.take_or("learning_rate", t.learning_rate)?;
        t.batch_size = kv.take_or("batch_size", t.batch_size)?;
        t.max_epochs = kv.take_or("max_epochs", t.max_epochs)?;
        t.validate()?;
        p.source_epochs = kv.take_or("source_epochs", p.source_epochs)?;
        if let Some(pol) = kv.take::<String>("polarization")? {
            p.pol = match pol.to_ascii_lowercase().as_str() {
                "x" => Pol::X,
                "y" => Pol::Y,
                _ => {
                    return Err(Error::Config {
                        line: 0,
                        msg: format!("polarization `{pol}` is not x or y"),
                    })
                }
            };
        }
        if let Some(seeds) = kv.take_list("seeds")? {
            p.seeds = seeds;
        }
        if let Some(fr) = kv.take_list("fractions")? {
            p.fractions = fr;
        }
        p.q_tolerance_db = kv.take_or("q_tolerance_db", p.q_tolerance_db)?;
        if let Some(s) = kv.take::<String>("strategy")? {
            p.strategy = if s == "auto" { None } else { Some(s.parse()?) };
        }
        p.base = Scenario::from_kv(kv, &p.base)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidSpec("at least one seed required".into()));
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
        self.equalizer.validate()?;
        self.train.validate()?;
        self.base.validate()
    }
}

/// The strategy used when none is configured: format or power changes retrain
/// the front-end conv only, a rate change retrains the recurrent part, and a
/// fiber or combined change retrains everything.
pub fn default_strategy(source: &Scenario, target: &Scenario) -> TlStrategy {
    let fiber = source.link.fiber != target.link.fiber
        || source.link.n_spans != target.link.n_spans
        || source.link.span_length_km != target.link.span_length_km;
    let rate = source.tx.symbol_rate_baud != target.tx.symbol_rate_baud;
    let power = source.tx.launch_power_dbm != target.tx.launch_power_dbm;
    let format = source.tx.mod_format.order != target.tx.mod_format.order;
    match (fiber, rate, power || format) {
        (true, _, _) | (false, true, true) => TlStrategy::RetrainAll,
        (false, true, false) => TlStrategy::FreezeConv,
        (false, false, _) => TlStrategy::FreezeRecurrent,
    }
}

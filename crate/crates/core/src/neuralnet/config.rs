use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Nonlinearity after the convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    LeakyRelu(f64),
    Relu,
    Tanh,
    Linear,
}

impl Default for Activation {
    fn default() -> Self {
        Activation::LeakyRelu(0.2)
    }
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    x
                } else {
                    a * x
                }
            }
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the pre-activation `x`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Linear => 1.0,
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leaky_relu" => Ok(Activation::default()),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::InvalidSpec(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualizerConfig {
    pub n_filters: usize,
    pub kernel_size: usize,
    pub lstm_hidden: usize,
    pub n_taps: usize,
    pub conv_activation: Activation,
}

impl EqualizerConfig {
    pub fn new(n_filters: usize, kernel_size: usize, lstm_hidden: usize, n_taps: usize) -> Self {
        Self {
            n_filters,
            kernel_size,
            lstm_hidden,
            n_taps,
            conv_activation: Activation::default(),
        }
    }

    /// 244 filters, kernel 10, 226 hidden units, N = 40.
    pub fn paper_scale() -> Self {
        Self::new(244, 10, 226, 40)
    }

    pub fn desk_scale() -> Self {
        Self::new(32, 10, 40, 10)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_filters == 0 || self.kernel_size == 0 || self.lstm_hidden == 0 {
            return Err(Error::InvalidSpec(format!(
                "equalizer sizes must be ≥ 1 (filters {}, kernel {}, hidden {})",
                self.n_filters, self.kernel_size, self.lstm_hidden
            )));
        }
        Ok(())
    }

    pub fn window_len(&self) -> usize {
        2 * self.n_taps + 1
    }

    pub fn conv_params(&self) -> usize {
        self.n_filters * (self.kernel_size * 4 + 1)
    }

    pub fn bilstm_params(&self) -> usize {
        let (h, f) = (self.lstm_hidden, self.n_filters);
        2 * 4 * (h * (f + h) + h)
    }

    pub fn dense_params(&self) -> usize {
        self.window_len() * 2 * self.lstm_hidden * 2 + 2
    }

    pub fn total_params(&self) -> usize {
        self.conv_params() + self.bilstm_params() + self.dense_params()
    }
}

/// Which layers are retrained when transferring a source model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TlStrategy {
    /// Training from random weights (no transfer).
    None,
    /// Everything retrained from the source weights.
    RetrainAll,
    /// Convolution frozen; biLSTM and dense retrained.
    FreezeConv,
    /// biLSTM and dense frozen; convolution retrained.
    FreezeRecurrent,
}

impl TlStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            TlStrategy::None => "none",
            TlStrategy::RetrainAll => "retrain_all",
            TlStrategy::FreezeConv => "freeze_conv",
            TlStrategy::FreezeRecurrent => "freeze_recurrent",
        }
    }
}

impl fmt::Display for TlStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TlStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TlStrategy::None),
            "retrain_all" | "a" => Ok(TlStrategy::RetrainAll),
            "freeze_conv" | "b" => Ok(TlStrategy::FreezeConv),
            "freeze_recurrent" | "c" => Ok(TlStrategy::FreezeRecurrent),
            other => Err(Error::InvalidSpec(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    Random,
    FromCheckpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub init_mode: InitMode,
    pub tl_strategy: TlStrategy,
}

impl Default for TrainConfig {
    /// Adam at 1e-3, batches of 1000, up to 200 epochs.
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 1000,
            max_epochs: 200,
            seed: 0,
            init_mode: InitMode::Random,
            tl_strategy: TlStrategy::None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "learning rate {} must be > 0",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidSpec("batch size must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_counts() {
        let c = EqualizerConfig::new(32, 10, 40, 10);
        assert_eq!(c.conv_params(), 1312);
        assert_eq!(c.bilstm_params(), 23360);
        assert_eq!(c.dense_params(), 3362);
        let p = EqualizerConfig::paper_scale();
        assert_eq!(p.conv_params(), 10004);
        assert_eq!(p.bilstm_params(), 851_568);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in [
            TlStrategy::None,
            TlStrategy::RetrainAll,
            TlStrategy::FreezeConv,
            TlStrategy::FreezeRecurrent,
        ] {
            assert_eq!(s.as_str().parse::<TlStrategy>().unwrap(), s);
        }
        assert!("freeze_everything".parse::<TlStrategy>().is_err());
    }

    #[test]
    fn train_config_validation() {
        let mut t = TrainConfig::default();
        assert!(t.validate().is_ok());
        t.learning_rate = 0.0;
        assert!(t.validate().is_err());
        let t = TrainConfig {
            batch_size: 0,
            ..Default::default()
        };
        assert!(t.validate().is_err());
    }
}

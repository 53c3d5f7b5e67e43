//! Transmitter: seeded QAM symbol streams and RRC pulse shaping into a
//! dual-polarization baseband waveform.

mod constellation;
mod rrc;

pub use constellation::{make_constellation, ModFormat};
pub use rrc::{rrc_taps, rrc_value, RRC_SPAN_SYMBOLS};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::circular_convolve_centered;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxSpec {
    pub mod_format: ModFormat,
    pub symbol_rate_baud: f64,
    pub rolloff: f64,
    pub samples_per_symbol: usize,
    /// Total over both polarizations.
    pub launch_power_dbm: f64,
    pub n_symbols: usize,
    pub seed: u64,
}

impl TxSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rolloff > 0.0 && self.rolloff < 1.0) {
            return Err(Error::InvalidSpec(format!("rolloff {} outside (0, 1)", self.rolloff)));
        }
        if self.samples_per_symbol < 2 {
            return Err(Error::InvalidSpec(format!(
                "samples_per_symbol {} < 2",
                self.samples_per_symbol
            )));
        }
        if !self.n_symbols.is_power_of_two() {
            return Err(Error::InvalidSpec(format!(
                "n_symbols {} is not a power of two",
                self.n_symbols
            )));
        }
        if !(self.symbol_rate_baud > 0.0 && self.symbol_rate_baud.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "symbol rate {} must be positive",
                self.symbol_rate_baud
            )));
        }
        if !self.launch_power_dbm.is_finite() {
            return Err(Error::InvalidSpec("launch power must be finite".into()));
        }
        Ok(())
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.symbol_rate_baud * self.samples_per_symbol as f64
    }

    pub fn launch_power_w(&self) -> f64 {
        dbm_to_watts(self.launch_power_dbm)
    }
}

/// Dual-polarization complex envelope sampled at `sample_rate_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub x_pol: Vec<Complex64>,
    pub y_pol: Vec<Complex64>,
    pub sample_rate_hz: f64,
    /// Cached `mean(|x|^2 + |y|^2)` in watts, see [`Waveform::refresh_power`].
    pub center_power_w: f64,
}

impl Waveform {
    pub fn new(x_pol: Vec<Complex64>, y_pol: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        assert_eq!(x_pol.len(), y_pol.len(), "polarizations must have equal length");
        let mut w = Self {
            x_pol,
            y_pol,
            sample_rate_hz,
            center_power_w: 0.0,
        };
        w.refresh_power();
        w
    }

    pub fn len(&self) -> usize {
        self.x_pol.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_pol.is_empty()
    }

    pub fn average_power(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e: f64 = self.x_pol.iter().chain(&self.y_pol).map(|v| v.norm_sqr()).sum();
        e / self.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.average_power() * self.len() as f64
    }

    pub fn refresh_power(&mut self) {
        self.center_power_w = self.average_power();
    }

    pub fn check_finite(&self) -> Result<()> {
        for (pol, s) in [("x", &self.x_pol), ("y", &self.y_pol)] {
            if let Some(index) = s.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::NonFinite { pol, index });
            }
        }
        Ok(())
    }

    pub(crate) fn map_pols(&mut self, mut f: impl FnMut(&mut Vec<Complex64>)) {
        f(&mut self.x_pol);
        f(&mut self.y_pol);
        self.refresh_power();
    }
}

/// Transmitted symbols for both polarizations together with their constellation indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    pub idx_x: Vec<u32>,
    pub idx_y: Vec<u32>,
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl SymbolStream {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Bits, MSB first per symbol, x polarization then y.
    pub fn bits(&self, fmt: &ModFormat) -> Vec<u8> {
        let b = fmt.bits_per_symbol;
        let mut out = Vec::with_capacity(2 * self.len() * b);
        for &i in self.idx_x.iter().chain(&self.idx_y) {
            let label = fmt.bits_of(i as usize);
            for k in (0..b).rev() {
                out.push(((label >> k) & 1) as u8);
            }
        }
        out
    }
}

pub fn generate_symbols(spec: &TxSpec) -> Result<SymbolStream> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let order = spec.mod_format.order as u32;
    let idx_x: Vec<u32> = (0..spec.n_symbols).map(|_| rng.random_range(0..order)).collect();
    let idx_y: Vec<u32> = (0..spec.n_symbols).map(|_| rng.random_range(0..order)).collect();
    let pts = &spec.mod_format.points;
    let x = idx_x.iter().map(|&i| pts[i as usize]).collect();
    let y = idx_y.iter().map(|&i| pts[i as usize]).collect();
    Ok(SymbolStream { idx_x, idx_y, x, y })
}

/// Zero-stuff by `sps` and filter circularly with `taps` (centered, zero delay).
pub fn pulse_shape(symbols: &[Complex64], taps: &[f64], sps: usize) -> Vec<Complex64> {
    let mut up = vec![Complex64::new(0.0, 0.0); symbols.len() * sps];
    for (k, s) in symbols.iter().enumerate() {
        up[k * sps] = *s;
    }
    circular_convolve_centered(&up, taps)
}

/// Upsample, RRC-filter and scale to the launch power (total over both polarizations).
pub fn shape_waveform(x: &[Complex64], y: &[Complex64], spec: &TxSpec) -> Result<Waveform> {
    if x.is_empty() {
        return Err(Error::InvalidSpec("no symbols to shape".into()));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "x/y symbol streams",
            left: x.len(),
            right: y.len(),
        });
    }
    let taps = rrc_taps(spec.rolloff, spec.samples_per_symbol);
    let sps = spec.samples_per_symbol;
    let mut wave = Waveform::new(
        pulse_shape(x, &taps, sps),
        pulse_shape(y, &taps, sps),
        spec.sample_rate_hz(),
    );
    let p = wave.average_power();
    if p > 0.0 {
        let g = (spec.launch_power_w() / p).sqrt();
        wave.map_pols(|s| s.iter_mut().for_each(|v| *v *= g));
    }
    Ok(wave)
}

//! Coherent receiver chain: transceiver noise, chromatic dispersion
//! compensation, matched filtering, symbol-rate sampling, alignment and
//! normalization to the transmitted symbols.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fiberlink::{add_awgn, dispersion_phase, propagate_link, splitmix64, FiberSpec, LinkSpec};
use crate::spectral::xcorr_peak;
use crate::txsig::{
    pulse_shape, rrc_taps, shape_waveform, ModFormat, SymbolStream, TxSpec, Waveform, RRC_SPAN_SYMBOLS,
};

/// Back-to-back SNR of the transceiver pair, `-0.175 R + 30` dB with `R` in GBd.
pub fn transceiver_snr_db(symbol_rate_gbd: f64) -> f64 {
    -0.175 * symbol_rate_gbd + 30.0
}

/// Where a half of the transceiver noise is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSite {
    Tx,
    Rx,
}

/// Adds one half of the transceiver AWGN budget at `site`.
///
/// The per-sample variance is sized so that, after the unit-energy matched
/// filter, the two halves together give the back-to-back SNR of
/// [`transceiver_snr_db`] relative to the waveform's current power.
pub fn apply_transceiver_noise(
    wave: &Waveform,
    symbol_rate_gbd: f64,
    enabled: bool,
    site: NoiseSite,
    seed: u64,
) -> Result<Waveform> {
    if !(symbol_rate_gbd > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "symbol rate {symbol_rate_gbd} GBd must be positive"
        )));
    }
    let mut out = wave.clone();
    if !enabled {
        return Ok(out);
    }
    let sps = wave.sample_rate_hz / (symbol_rate_gbd * 1e9);
    let snr = 10f64.powf(transceiver_snr_db(symbol_rate_gbd) / 10.0);
    let per_pol_signal = wave.center_power_w / 2.0;
    let total_var = sps * per_pol_signal / snr;
    let site_seed = match site {
        NoiseSite::Tx => splitmix64(seed ^ 0x7478),
        NoiseSite::Rx => splitmix64(seed ^ 0x7278),
    };
    add_awgn(&mut out, total_var / 2.0, site_seed);
    Ok(out)
}

/// Undoes the accumulated quadratic spectral phase of `total_length_km` of `fiber`.
pub fn compensate_dispersion(wave: &Waveform, fiber: &FiberSpec, total_length_km: f64) -> Result<Waveform> {
    if !(total_length_km >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "total length {total_length_km} km must be ≥ 0"
        )));
    }
    if total_length_km == 0.0 {
        return Ok(wave.clone());
    }
    Ok(dispersion_phase(wave, fiber.beta2(), total_length_km * 1e3, -1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSamples {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    /// Chosen sampling phase in `0..samples_per_symbol`.
    pub phase: usize,
}

/// Matched RRC filter, then keep the sampling phase with the most energy.
pub fn matched_filter_downsample(wave: &Waveform, spec: &TxSpec) -> Result<SymbolSamples> {
    let sps = spec.samples_per_symbol;
    let ratio = wave.sample_rate_hz / spec.symbol_rate_baud;
    if (ratio - sps as f64).abs() > 1e-6 * ratio || !wave.len().is_multiple_of(sps) {
        return Err(Error::InvalidSpec(format!(
            "sample rate {} Hz is not {} x symbol rate {} Bd",
            wave.sample_rate_hz, sps, spec.symbol_rate_baud
        )));
    }
    let taps = rrc_taps(spec.rolloff, sps);
    let fx = pulse_shape_full_rate(&wave.x_pol, &taps);
    let fy = pulse_shape_full_rate(&wave.y_pol, &taps);
    let phase = (0..sps)
        .map(|p| {
            let e: f64 = (p..fx.len())
                .step_by(sps)
                .map(|k| fx[k].norm_sqr() + fy[k].norm_sqr())
                .sum();
            (p, e)
        })
        .fold(
            (0, f64::NEG_INFINITY),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        )
        .0;
    let pick = |v: &[Complex64]| v.iter().skip(phase).step_by(sps).copied().collect::<Vec<_>>();
    Ok(SymbolSamples {
        x: pick(&fx),
        y: pick(&fy),
        phase,
    })
}

fn pulse_shape_full_rate(samples: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    pulse_shape(samples, taps, 1)
}

/// Least-squares complex scale `c = <tx, rx> / <rx, rx>` applied to `rx`.
pub fn normalize_to_reference(rx: &[Complex64], tx: &[Complex64]) -> Result<(Vec<Complex64>, Complex64)> {
    if rx.len() != tx.len() {
        return Err(Error::LengthMismatch {
            what: "rx/tx symbols",
            left: rx.len(),
            right: tx.len(),
        });
    }
    let energy: f64 = rx.iter().map(|v| v.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let cross: Complex64 = tx.iter().zip(rx).map(|(t, r)| t * r.conj()).sum();
    let c = cross / energy;
    Ok((rx.iter().map(|r| r * c).collect(), c))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameMeta {
    pub label: String,
    pub tx_seed: u64,
    pub noise_seed: u64,
}

/// Aligned, guard-trimmed and normalized transmitted/received symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub tx_x: Vec<Complex64>,
    pub tx_y: Vec<Complex64>,
    pub rx_x: Vec<Complex64>,
    pub rx_y: Vec<Complex64>,
    pub tx_idx_x: Vec<u32>,
    pub tx_idx_y: Vec<u32>,
    pub mod_format: ModFormat,
    pub meta: FrameMeta,
}

impl SymbolFrame {
    pub fn len(&self) -> usize {
        self.tx_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx_x.is_empty()
    }

    /// Builds a frame directly from aligned sequences, checking the length invariant.
    pub fn from_parts(
        tx: (Vec<Complex64>, Vec<Complex64>),
        rx: (Vec<Complex64>, Vec<Complex64>),
        idx: (Vec<u32>, Vec<u32>),
        mod_format: ModFormat,
        meta: FrameMeta,
    ) -> Result<Self> {
        let n = tx.0.len();
        for (what, len) in [
            ("tx_y", tx.1.len()),
            ("rx_x", rx.0.len()),
            ("rx_y", rx.1.len()),
            ("tx_idx_x", idx.0.len()),
            ("tx_idx_y", idx.1.len()),
        ] {
            if len != n {
                return Err(Error::LengthMismatch {
                    what,
                    left: n,
                    right: len,
                });
            }
        }
        if n == 0 {
            return Err(Error::FrameTooShort { len: 0, needed: 0 });
        }
        Ok(Self {
            tx_x: tx.0,
            tx_y: tx.1,
            rx_x: rx.0,
            rx_y: rx.1,
            tx_idx_x: idx.0,
            tx_idx_y: idx.1,
            mod_format,
            meta,
        })
    }
}

/// Dispersive walk-off across the signal bandwidth, in symbols (rounded up).
pub fn walkoff_symbols(tx: &TxSpec, link: Option<&LinkSpec>) -> usize {
    let Some(link) = link else { return 0 };
    let bw = 2.0 * std::f64::consts::PI * tx.symbol_rate_baud * (1.0 + tx.rolloff);
    let spread_s = link.fiber.beta2().abs() * link.total_length_km() * 1e3 * bw;
    (spread_s * tx.symbol_rate_baud).ceil() as usize
}

/// Symbols discarded at each frame edge.
pub fn guard_symbols(tx: &TxSpec, link: Option<&LinkSpec>) -> usize {
    2 * (RRC_SPAN_SYMBOLS + walkoff_symbols(tx, link))
}

fn trx_seed(tx: &TxSpec, link: Option<&LinkSpec>) -> u64 {
    splitmix64(tx.seed ^ link.map_or(0, |l| l.noise_seed.rotate_left(17)))
}

/// Pulse shaping plus Tx-side transceiver noise.
pub fn transmit(stream: &SymbolStream, tx: &TxSpec, link: Option<&LinkSpec>, trx_noise: bool) -> Result<Waveform> {
    let wave = shape_waveform(&stream.x, &stream.y, tx)?;
    apply_transceiver_noise(
        &wave,
        tx.symbol_rate_baud / 1e9,
        trx_noise,
        NoiseSite::Tx,
        trx_seed(tx, link),
    )
}

/// Receiver-side processing of a link output into an aligned [`SymbolFrame`].
pub fn recover_frame(
    stream: &SymbolStream,
    received: &Waveform,
    tx: &TxSpec,
    link: Option<&LinkSpec>,
    trx_noise: bool,
) -> Result<SymbolFrame> {
    let expected = stream.len() * tx.samples_per_symbol;
    if received.len() != expected {
        return Err(Error::LengthMismatch {
            what: "transmitted record vs received samples",
            left: expected,
            right: received.len(),
        });
    }
    let mut wave = apply_transceiver_noise(
        received,
        tx.symbol_rate_baud / 1e9,
        trx_noise,
        NoiseSite::Rx,
        trx_seed(tx, link),
    )?;
    if let Some(link) = link {
        wave = compensate_dispersion(&wave, &link.fiber, link.total_length_km())?;
    }
    let samples = matched_filter_downsample(&wave, tx)?;

    let (lag, peak) = xcorr_peak(&samples.x, &stream.x);
    if peak < 0.2 {
        return Err(Error::AlignmentFailure { peak });
    }
    let n = stream.len();
    let shift = lag.rem_euclid(n as isize) as usize;
    let realign = |v: &[Complex64]| (0..n).map(|k| v[(k + shift) % n]).collect::<Vec<_>>();
    let rx_x = realign(&samples.x);
    let rx_y = realign(&samples.y);

    let guard = guard_symbols(tx, link);
    if n <= 2 * guard {
        return Err(Error::FrameTooShort {
            len: n,
            needed: 2 * guard,
        });
    }
    let keep = guard..n - guard;
    let (rx_x, _) = normalize_to_reference(&rx_x[keep.clone()], &stream.x[keep.clone()])?;
    let (rx_y, _) = normalize_to_reference(&rx_y[keep.clone()], &stream.y[keep.clone()])?;
    SymbolFrame::from_parts(
        (stream.x[keep.clone()].to_vec(), stream.y[keep.clone()].to_vec()),
        (rx_x, rx_y),
        (stream.idx_x[keep.clone()].to_vec(), stream.idx_y[keep].to_vec()),
        tx.mod_format.clone(),
        FrameMeta {
            label: String::new(),
            tx_seed: tx.seed,
            noise_seed: link.map_or(0, |l| l.noise_seed),
        },
    )
}

/// Full chain: Tx noise, link (or back-to-back when `link` is `None`), Rx noise,
/// CDC, matched filter, downsampling, alignment, guard trimming, normalization.
pub fn build_symbol_frame(
    stream: &SymbolStream,
    tx: &TxSpec,
    link: Option<&LinkSpec>,
    trx_noise: bool,
) -> Result<SymbolFrame> {
    let launched = transmit(stream, tx, link, trx_noise)?;
    let received = match link {
        Some(l) => propagate_link(&launched, l)?,
        None => launched,
    };
    recover_frame(stream, &received, tx, link, trx_noise)
}

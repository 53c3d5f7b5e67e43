//! Hard decisions, BER, Q-factor, EVM and SNR, plus the per-epoch
//! [`MetricTrace`] record and its CSV form.

use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::txsig::ModFormat;

/// Nearest constellation point; ties go to the lowest index.
pub fn hard_decide(rx: &[Complex64], fmt: &ModFormat) -> Vec<u32> {
    rx.iter()
        .map(|r| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (k, p) in fmt.points.iter().enumerate() {
                let d = (r - p).norm_sqr();
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            best as u32
        })
        .collect()
}

/// Bit-error count over aligned index sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BitErrors {
    pub errors: u64,
    pub bits: u64,
}

impl BitErrors {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        self.errors as f64 / self.bits as f64
    }

    pub fn merge(self, other: BitErrors) -> BitErrors {
        BitErrors {
            errors: self.errors + other.errors,
            bits: self.bits + other.bits,
        }
    }

    pub fn estimate(&self) -> BerEstimate {
        if self.errors == 0 {
            BerEstimate::Below(1.0 / self.bits.max(1) as f64)
        } else {
            BerEstimate::Measured(self.ber())
        }
    }
}

/// BER with the zero-error case kept distinct.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BerEstimate {
    Measured(f64),
    /// No errors observed; the value is `1 / n_bits`.
    Below(f64),
}

impl fmt::Display for BerEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BerEstimate::Measured(b) => write!(f, "{b:.3e}"),
            BerEstimate::Below(b) => write!(f, "< {b:.3e}"),
        }
    }
}

pub fn count_bit_errors(decided: &[u32], sent: &[u32], fmt: &ModFormat) -> Result<BitErrors> {
    if decided.len() != sent.len() {
        return Err(Error::LengthMismatch {
            what: "decided/sent symbols",
            left: decided.len(),
            right: sent.len(),
        });
    }
    let errors = decided
        .iter()
        .zip(sent)
        .map(|(&d, &s)| (fmt.bits_of(d as usize) ^ fmt.bits_of(s as usize)).count_ones() as u64)
        .sum();
    Ok(BitErrors {
        errors,
        bits: (decided.len() * fmt.bits_per_symbol) as u64,
    })
}

/// Decide `rx` and count bit errors against the transmitted indices.
pub fn compute_ber(rx: &[Complex64], sent: &[u32], fmt: &ModFormat) -> Result<BitErrors> {
    count_bit_errors(&hard_decide(rx, fmt), sent, fmt)
}

/// Gaussian-equivalent Q-factor `20 log10(sqrt(2) erfcinv(2 ber))`; `None` outside (0, 0.5).
pub fn q_from_ber(ber: f64) -> Option<f64> {
    if !(ber > 0.0 && ber < 0.5) {
        return None;
    }
    let q = std::f64::consts::SQRT_2 * erfc_inv(2.0 * ber);
    let db = 20.0 * q.log10();
    db.is_finite().then_some(db)
}

/// `10 log10(mean|tx|^2 / mean|rx - tx|^2)`; `+inf` when the error power is zero.
pub fn measure_snr(rx: &[Complex64], tx: &[Complex64]) -> f64 {
    let sig: f64 = tx.iter().map(|t| t.norm_sqr()).sum();
    let err: f64 = rx.iter().zip(tx).map(|(r, t)| (r - t).norm_sqr()).sum();
    if err == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (sig / err).log10()
}

/// RMS error vector magnitude relative to the reference power.
pub fn evm(rx: &[Complex64], tx: &[Complex64]) -> f64 {
    let sig: f64 = tx.iter().map(|t| t.norm_sqr()).sum();
    let err: f64 = rx.iter().zip(tx).map(|(r, t)| (r - t).norm_sqr()).sum();
    (err / sig).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub train_mse: f64,
    pub ber: f64,
    /// `None` when the BER is 0 or ≥ 0.5.
    pub q_db: Option<f64>,
}

pub const TRACE_HEADER: &str = "epoch,train_mse,ber,q_db,scenario_id,strategy,fraction";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricTrace {
    pub rows: Vec<TraceRow>,
    pub scenario_id: String,
    pub strategy: String,
    pub fraction: f64,
}

impl MetricTrace {
    pub fn new(scenario_id: impl Into<String>, strategy: impl Into<String>, fraction: f64) -> Self {
        Self {
            rows: Vec::new(),
            scenario_id: scenario_id.into(),
            strategy: strategy.into(),
            fraction,
        }
    }

    /// Appends a row; epochs must increase strictly.
    pub fn push(&mut self, row: TraceRow) {
        if let Some(last) = self.rows.last() {
            assert!(row.epoch > last.epoch, "epochs must increase");
        }
        self.rows.push(row);
    }

    pub fn best_q(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.q_db).reduce(f64::max)
    }

    pub fn final_q(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.q_db)
    }

    /// Mean Q over the last quarter of the rows (at least one row).
    pub fn plateau_q(&self) -> Option<f64> {
        let n = self.rows.len();
        if n == 0 {
            return None;
        }
        let tail = (n / 4).max(1);
        let qs: Vec<f64> = self.rows[n - tail..].iter().filter_map(|r| r.q_db).collect();
        (!qs.is_empty()).then(|| qs.iter().sum::<f64>() / qs.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let q = r.q_db.map_or_else(|| "NA".to_string(), |q| q.to_string());
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.epoch, r.train_mse, r.ber, q, self.scenario_id, self.strategy, self.fraction
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            _ => {
                return Err(Error::Config {
                    line: 1,
                    msg: "missing trace header".into(),
                })
            }
        }
        let mut trace = MetricTrace::default();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Config {
                line: i + 1,
                msg: msg.to_string(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad("expected 7 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            let row = TraceRow {
                epoch: f[0].parse().map_err(|_| bad("bad epoch"))?,
                train_mse: num(f[1])?,
                ber: num(f[2])?,
                q_db: if f[3] == "NA" { None } else { Some(num(f[3])?) },
            };
            if trace.rows.last().is_some_and(|l| l.epoch >= row.epoch) {
                return Err(bad("epochs must increase"));
            }
            trace.rows.push(row);
            trace.scenario_id = f[4].to_string();
            trace.strategy = f[5].to_string();
            trace.fraction = num(f[6])?;
        }
        Ok(trace)
    }
}

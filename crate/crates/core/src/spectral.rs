//! FFT helpers shared by pulse shaping, propagation and receiver DSP.
//!
//! All transforms are circular: a frame is treated as one period of a
//! periodic signal.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse transform pair for one length. The inverse is scaled by `1/n`.
pub struct FftPair {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    n: usize,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            fwd,
            inv,
            scratch: vec![Complex64::new(0.0, 0.0); len],
            n,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.fwd.process_with_scratch(buf, &mut self.scratch);
    }

    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inv.process_with_scratch(buf, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Angular frequencies (rad/s) of the FFT bins in natural FFT order.
pub fn angular_frequencies(n: usize, sample_rate_hz: f64) -> Vec<f64> {
    let df = sample_rate_hz / n as f64;
    (0..n)
        .map(|k| {
            let k = if k < n.div_ceil(2) {
                k as f64
            } else {
                k as f64 - n as f64
            };
            2.0 * PI * k * df
        })
        .collect()
}

/// Circular convolution of `signal` with a real, odd-length kernel whose
/// center tap sits at index `kernel.len() / 2` (zero group delay).
pub fn circular_convolve_centered(signal: &[Complex64], kernel: &[f64]) -> Vec<Complex64> {
    let n = signal.len();
    let half = kernel.len() / 2;
    let mut h = vec![Complex64::new(0.0, 0.0); n];
    for (j, &tap) in kernel.iter().enumerate() {
        let lag = j as isize - half as isize;
        let idx = lag.rem_euclid(n as isize) as usize;
        h[idx] += tap;
    }
    let mut fft = FftPair::new(n);
    let mut x = signal.to_vec();
    fft.forward(&mut x);
    fft.forward(&mut h);
    for (a, b) in x.iter_mut().zip(&h) {
        *a *= b;
    }
    fft.inverse(&mut x);
    x
}

/// Circular cross-correlation `r[l] = sum_k a[k + l] * conj(b[k])`, normalized by
/// `||a|| ||b||`. Index `l` runs over `0..n`; negative lags wrap to the top.
pub fn normalized_xcorr(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let ea: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    let eb: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    let norm = (ea * eb).sqrt();
    let mut fft = FftPair::new(n);
    let mut fa = a.to_vec();
    let mut fb = b.to_vec();
    fft.forward(&mut fa);
    fft.forward(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y.conj();
    }
    fft.inverse(&mut fa);
    if norm > 0.0 {
        for v in fa.iter_mut() {
            *v /= norm;
        }
    }
    fa
}

/// Lag (signed) and magnitude of the largest normalized cross-correlation.
pub fn xcorr_peak(a: &[Complex64], b: &[Complex64]) -> (isize, f64) {
    let r = normalized_xcorr(a, b);
    let n = r.len() as isize;
    let mut best = (0isize, -1.0);
    for (l, v) in r.iter().enumerate() {
        let m = v.norm();
        if m > best.1 {
            let lag = if (l as isize) > n / 2 {
                l as isize - n
            } else {
                l as isize
            };
            best = (lag, m);
        }
    }
    best
}

/// Power spectrum `|X_k|^2` of a sequence.
pub fn power_spectrum(x: &[Complex64]) -> Vec<f64> {
    let mut buf = x.to_vec();
    FftPair::new(x.len()).forward(&mut buf);
    buf.iter().map(|v| v.norm_sqr()).collect()
}

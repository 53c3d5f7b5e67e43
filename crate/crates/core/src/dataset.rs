//! Sliding-window supervised datasets cut from symbol frames.

use std::io::Write;

use num_complex::Complex64;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fiberlink::splitmix64;
use crate::rxdsp::SymbolFrame;
use crate::spectral::normalized_xcorr;

/// Input features per time step: `[Re rx_x, Im rx_x, Re rx_y, Im rx_y]`.
pub const FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pol {
    X,
    Y,
}

impl std::fmt::Display for Pol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pol::X => "X",
            Pol::Y => "Y",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    /// Row-major `(n_examples, M, 4)`.
    pub inputs: Vec<f64>,
    /// Row-major `(n_examples, 2)`.
    pub targets: Vec<f64>,
    /// Transmitted constellation index of each target symbol.
    pub target_idx: Vec<u32>,
    pub n_taps: usize,
    pub pol: Pol,
    pub provenance: String,
}

impl WindowedDataset {
    pub fn window_len(&self) -> usize {
        2 * self.n_taps + 1
    }

    pub fn len(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn example_stride(&self) -> usize {
        self.window_len() * FEATURES
    }

    pub fn input(&self, i: usize) -> &[f64] {
        let s = self.example_stride();
        &self.inputs[i * s..(i + 1) * s]
    }

    pub fn target(&self, i: usize) -> [f64; 2] {
        [self.targets[2 * i], self.targets[2 * i + 1]]
    }

    /// Copies the listed examples, in order, into a new dataset.
    pub fn select(&self, indices: &[usize]) -> WindowedDataset {
        let s = self.example_stride();
        let mut inputs = Vec::with_capacity(indices.len() * s);
        let mut targets = Vec::with_capacity(indices.len() * 2);
        let mut target_idx = Vec::with_capacity(indices.len());
        for &i in indices {
            inputs.extend_from_slice(self.input(i));
            targets.extend_from_slice(&self.targets[2 * i..2 * i + 2]);
            target_idx.push(self.target_idx[i]);
        }
        WindowedDataset {
            inputs,
            targets,
            target_idx,
            n_taps: self.n_taps,
            pol: self.pol,
            provenance: self.provenance.clone(),
        }
    }
}

pub fn window_frame(frame: &SymbolFrame, n_taps: usize, pol: Pol) -> Result<WindowedDataset> {
    let len = frame.len();
    let m = 2 * n_taps + 1;
    if len <= 2 * n_taps {
        return Err(Error::FrameTooShort {
            len,
            needed: 2 * n_taps,
        });
    }
    let n = len - 2 * n_taps;
    let mut inputs = Vec::with_capacity(n * m * FEATURES);
    let mut targets = Vec::with_capacity(2 * n);
    let mut target_idx = Vec::with_capacity(n);
    let (tx, idx) = match pol {
        Pol::X => (&frame.tx_x, &frame.tx_idx_x),
        Pol::Y => (&frame.tx_y, &frame.tx_idx_y),
    };
    for k in 0..n {
        for t in k..k + m {
            let (a, b) = (frame.rx_x[t], frame.rx_y[t]);
            inputs.extend_from_slice(&[a.re, a.im, b.re, b.im]);
        }
        let centre = k + n_taps;
        targets.extend_from_slice(&[tx[centre].re, tx[centre].im]);
        target_idx.push(idx[centre]);
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        target_idx,
        n_taps,
        pol,
        provenance: frame.meta.label.clone(),
    })
}

/// Deterministic permutation of `0..n` for a given `(seed, epoch)`.
pub fn shuffle_epoch(n: usize, epoch: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(epoch as u64)));
    perm.shuffle(&mut rng);
    perm
}

/// Number of examples kept for a fraction: `ceil(fraction * n)`.
pub fn subset_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n.max(1))
}

/// Uniform sample of `ceil(fraction * n)` examples without replacement.
pub fn subset_fraction(ds: &WindowedDataset, fraction: f64, seed: u64) -> Result<WindowedDataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidSpec(format!("fraction {fraction} outside (0, 1]")));
    }
    let n = ds.len();
    let k = subset_size(n, fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x005A_B5E7));
    let picked = index::sample(&mut rng, n, k).into_vec();
    Ok(ds.select(&picked))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Independence {
    /// Largest normalized cross-correlation magnitude over all lags.
    pub peak: f64,
    pub peak_lag: isize,
    pub lag0: f64,
}

/// Normalized cross-correlation between the transmitted symbol streams
/// (x then y) of two frames, truncated to the shorter one.
pub fn independence_check(train: &SymbolFrame, test: &SymbolFrame) -> Independence {
    let n = train.len().min(test.len());
    let cat = |f: &SymbolFrame| -> Vec<Complex64> { f.tx_x[..n].iter().chain(&f.tx_y[..n]).copied().collect() };
    let (a, b) = (cat(train), cat(test));
    let r = normalized_xcorr(&a, &b);
    let len = r.len() as isize;
    let (mut peak, mut peak_lag) = (0.0, 0);
    for (l, v) in r.iter().enumerate() {
        if v.norm() > peak {
            peak = v.norm();
            peak_lag = if l as isize > len / 2 {
                l as isize - len
            } else {
                l as isize
            };
        }
    }
    Independence {
        peak,
        peak_lag,
        lag0: r[0].norm(),
    }
}

pub const WNDS_MAGIC: &[u8; 4] = b"WNDS";
pub const WNDS_VERSION: u32 = 1;

/// Binary tensor dump: magic, u32 version, u64 n, u32 M, u32 dims, then the
/// inputs and the targets as little-endian f64.
pub fn write_wnds(ds: &WindowedDataset, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(WNDS_MAGIC)?;
    w.write_all(&WNDS_VERSION.to_le_bytes())?;
    w.write_all(&(ds.len() as u64).to_le_bytes())?;
    w.write_all(&(ds.window_len() as u32).to_le_bytes())?;
    w.write_all(&(FEATURES as u32).to_le_bytes())?;
    for v in ds.inputs.iter().chain(&ds.targets) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Manifest accompanying a WNDS dump.
pub fn wnds_manifest(ds: &WindowedDataset, data_file: &str) -> String {
    format!(
        "key,value\nfile,{data_file}\nn,{}\nm,{}\ndims,{FEATURES}\nn_taps,{}\npol,{}\nprovenance,{}\n",
        ds.len(),
        ds.window_len(),
        ds.n_taps,
        ds.pol,
        ds.provenance
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rxdsp::FrameMeta;
    use crate::txsig::make_constellation;

    fn identity_frame(n: usize) -> SymbolFrame {
        let fmt = make_constellation(16).unwrap();
        let idx_x: Vec<u32> = (0..n).map(|k| ((k * 7 + 3) % 16) as u32).collect();
        let idx_y: Vec<u32> = (0..n).map(|k| ((k * 5 + 1) % 16) as u32).collect();
        let x: Vec<Complex64> = idx_x.iter().map(|&i| fmt.points[i as usize]).collect();
        let y: Vec<Complex64> = idx_y.iter().map(|&i| fmt.points[i as usize]).collect();
        SymbolFrame::from_parts(
            (x.clone(), y.clone()),
            (x, y),
            (idx_x, idx_y),
            fmt,
            FrameMeta {
                label: "identity".into(),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn window_counts() {
        let f = identity_frame(100);
        let ds = window_frame(&f, 10, Pol::X).unwrap();
        assert_eq!(ds.len(), 80);
        assert_eq!(ds.window_len(), 21);
        assert_eq!(ds.input(0).len(), 21 * 4);
        let mem = window_frame(&f, 0, Pol::X).unwrap();
        assert_eq!(mem.window_len(), 1);
        assert_eq!(mem.len(), 100);
        assert!(matches!(window_frame(&f, 50, Pol::X), Err(Error::FrameTooShort { .. })));
    }

    #[test]
    fn identity_centre_matches_target() {
        let f = identity_frame(64);
        for pol in [Pol::X, Pol::Y] {
            let ds = window_frame(&f, 3, pol).unwrap();
            let off = match pol {
                Pol::X => 0,
                Pol::Y => 2,
            };
            for i in 0..ds.len() {
                let c = &ds.input(i)[3 * 4..4 * 4];
                assert_eq!([c[off], c[off + 1]], ds.target(i));
            }
        }
    }

    #[test]
    fn centre_steps_rebuild_rx_stream() {
        let f = identity_frame(50);
        let ds = window_frame(&f, 4, Pol::X).unwrap();
        let rebuilt: Vec<Complex64> = (0..ds.len())
            .map(|i| {
                let c = &ds.input(i)[4 * 4..5 * 4];
                Complex64::new(c[0], c[1])
            })
            .collect();
        assert_eq!(rebuilt, f.rx_x[4..46].to_vec());
    }

    #[test]
    fn shuffles_are_deterministic_bijections() {
        let a = shuffle_epoch(100, 0, 9);
        assert_eq!(a, shuffle_epoch(100, 0, 9));
        assert_ne!(a, shuffle_epoch(100, 1, 9));
        let mut s = a.clone();
        s.sort_unstable();
        assert_eq!(s, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn subset_sizes_and_errors() {
        let f = identity_frame(300);
        let ds = window_frame(&f, 2, Pol::X).unwrap();
        let full = subset_fraction(&ds, 1.0, 1).unwrap();
        assert_eq!(full.len(), ds.len());
        let mut a = full.target_idx.clone();
        let mut b = ds.target_idx.clone();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        assert_eq!(subset_fraction(&ds, 0.1, 1).unwrap().len(), 30);
        assert_eq!(subset_size(262_100, 0.01), 2621);
        assert_eq!(subset_size(262_101, 0.01), 2622);
        assert!(subset_fraction(&ds, 0.0, 1).is_err());
        assert!(subset_fraction(&ds, 1.5, 1).is_err());
    }

    #[test]
    fn identical_frames_correlate_fully() {
        let f = identity_frame(256);
        let r = independence_check(&f, &f);
        assert!((r.peak - 1.0).abs() < 1e-12);
        assert_eq!(r.peak_lag, 0);
        assert!((r.lag0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wnds_layout() {
        let f = identity_frame(20);
        let ds = window_frame(&f, 1, Pol::X).unwrap();
        let mut buf = Vec::new();
        write_wnds(&ds, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"WNDS");
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 18);
        assert_eq!(u32::from_le_bytes(buf[16..20].try_into().unwrap()), 3);
        assert_eq!(buf.len(), 24 + 8 * (18 * 3 * 4 + 18 * 2));
        assert!(wnds_manifest(&ds, "d.bin").contains("n,18\n"));
    }
}

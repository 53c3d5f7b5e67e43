//! QAM constellations with Gray (square) and quasi-Gray (cross) bit labels.
//!
//! Point index and bit label coincide: `points[i]` carries label `i`, MSBs
//! on the in-phase axis.
//!
//! Cross formats start from a rectangular Gray map and fold the outermost
//! in-phase columns into new rows above and below the square core:
//!
//! * 32-QAM: 8x4 rectangle on odd integers; a point `(±7, q)` moves to
//!   `(±(4 - |q|), 5·sign(q))`.
//! * 128-QAM: 16x8 rectangle; a point `(±i, q)` with `i ∈ {13, 15}` moves to
//!   `(±(8 - |q|), (24 - i)·sign(q))`.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ModFormat {
    pub order: usize,
    pub bits_per_symbol: usize,
    /// Unit average energy.
    pub points: Vec<Complex64>,
    pub labels: Vec<u32>,
}

fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

/// Rectangular Gray map on the odd-integer lattice, indexed by label.
fn rectangular(bits_i: u32, bits_q: u32) -> Vec<(i32, i32)> {
    let ni = 1u32 << bits_i;
    let nq = 1u32 << bits_q;
    let mut pts = vec![(0, 0); (ni * nq) as usize];
    for a in 0..ni {
        for b in 0..nq {
            let i = 2 * a as i32 - (ni as i32 - 1);
            let q = 2 * b as i32 - (nq as i32 - 1);
            let label = (gray(a) << bits_q) | gray(b);
            pts[label as usize] = (i, q);
        }
    }
    pts
}

fn fold_cross(pts: &mut [(i32, i32)], core_max: i32, fold: impl Fn(i32, i32) -> (i32, i32)) {
    for p in pts.iter_mut() {
        if p.0.abs() > core_max {
            let (ni, nq) = fold(p.0.abs(), p.1);
            *p = (p.0.signum() * ni, nq);
        }
    }
}

pub fn make_constellation(order: usize) -> Result<ModFormat> {
    let lattice = match order {
        16 => rectangular(2, 2),
        64 => rectangular(3, 3),
        32 => {
            let mut p = rectangular(3, 2);
            fold_cross(&mut p, 5, |_, q| (4 - q.abs(), 5 * q.signum()));
            p
        }
        128 => {
            let mut p = rectangular(4, 3);
            fold_cross(&mut p, 11, |i, q| (8 - q.abs(), (24 - i) * q.signum()));
            p
        }
        other => return Err(Error::UnsupportedOrder(other)),
    };
    let energy: f64 = lattice.iter().map(|&(i, q)| (i * i + q * q) as f64).sum::<f64>() / lattice.len() as f64;
    let scale = energy.sqrt();
    let points = lattice
        .iter()
        .map(|&(i, q)| Complex64::new(i as f64 / scale, q as f64 / scale))
        .collect();
    Ok(ModFormat {
        order,
        bits_per_symbol: order.trailing_zeros() as usize,
        points,
        labels: (0..order as u32).collect(),
    })
}

impl ModFormat {
    pub fn bits_of(&self, index: usize) -> u32 {
        self.labels[index]
    }

    /// Smallest distance between two distinct points.
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (a, pa) in self.points.iter().enumerate() {
            for pb in &self.points[a + 1..] {
                best = best.min((pa - pb).norm());
            }
        }
        best
    }

    /// Pairs of points at minimum distance.
    pub fn nearest_neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let d = self.min_distance();
        let mut pairs = Vec::new();
        for a in 0..self.order {
            for b in a + 1..self.order {
                if ((self.points[a] - self.points[b]).norm() - d).abs() < 1e-9 {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }

    /// CSV with columns `index,i,q,label`; the label is written as a bit string.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,i,q,label\n");
        for (k, p) in self.points.iter().enumerate() {
            let _ = writeln!(
                out,
                "{k},{:.17},{:.17},{:0width$b}",
                p.re,
                p.im,
                self.labels[k],
                width = self.bits_per_symbol
            );
        }
        out
    }
}

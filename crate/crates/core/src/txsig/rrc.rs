use std::f64::consts::PI;

/// Filter span in symbol periods.
pub const RRC_SPAN_SYMBOLS: usize = 64;

/// Continuous root-raised-cosine impulse response at `t` symbol periods.
pub fn rrc_value(t: f64, rolloff: f64) -> f64 {
    let b = rolloff;
    if t.abs() < 1e-12 {
        return 1.0 - b + 4.0 * b / PI;
    }
    let singular = 1.0 / (4.0 * b);
    if ((t.abs() - singular) / singular).abs() < 1e-9 {
        let a = PI / (4.0 * b);
        return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
    let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
    num / den
}

/// Truncated RRC taps spanning [`RRC_SPAN_SYMBOLS`] symbols, odd length, unit energy.
pub fn rrc_taps(rolloff: f64, samples_per_symbol: usize) -> Vec<f64> {
    let n = RRC_SPAN_SYMBOLS * samples_per_symbol + 1;
    let half = (n / 2) as f64;
    let mut taps: Vec<f64> = (0..n)
        .map(|j| rrc_value((j as f64 - half) / samples_per_symbol as f64, rolloff))
        .collect();
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let norm = energy.sqrt();
    for h in taps.iter_mut() {
        *h /= norm;
    }
    taps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taps_are_symmetric_unit_energy_odd() {
        let taps = rrc_taps(0.1, 8);
        assert_eq!(taps.len() % 2, 1);
        let e: f64 = taps.iter().map(|h| h * h).sum();
        assert!((e - 1.0).abs() < 1e-12);
        for k in 0..taps.len() / 2 {
            assert!((taps[k] - taps[taps.len() - 1 - k]).abs() < 1e-15);
        }
        let c = taps.len() / 2;
        assert!(taps.iter().all(|&h| h <= taps[c]));
    }

    #[test]
    fn singular_point_is_continuous() {
        let b = 0.25;
        let t0 = 1.0 / (4.0 * b);
        let at = rrc_value(t0, b);
        let near = rrc_value(t0 + 1e-6, b);
        assert!((at - near).abs() < 1e-5);
    }

    #[test]
    fn raised_cosine_is_nyquist() {
        // RRC * RRC sampled at symbol spacing: unit at lag 0, near zero elsewhere.
        let sps = 8;
        let taps = rrc_taps(0.1, sps);
        let n = taps.len();
        let rc = |lag: isize| -> f64 {
            let mut acc = 0.0;
            for (j, &h) in taps.iter().enumerate() {
                let k = j as isize + lag;
                if k >= 0 && (k as usize) < n {
                    acc += h * taps[k as usize];
                }
            }
            acc
        };
        assert!((rc(0) - 1.0).abs() < 1e-12);
        for m in 1..20isize {
            assert!(rc(m * sps as isize).abs() < 1e-3, "lag {m}: {}", rc(m * sps as isize));
        }
    }
}

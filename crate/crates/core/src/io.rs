//! Interchange formats: raw waveform dumps and symbol-frame CSV.

use std::fmt::Write as _;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::rxdsp::SymbolFrame;
use crate::txsig::Waveform;

pub const WAVE_MAGIC: &[u8; 4] = b"WAVE";
pub const WAVE_VERSION: u32 = 1;
pub const WAVE_HEADER_LEN: usize = 32;

/// 32-byte header (magic, u32 version, u64 n_samples, f64 sample rate, 8
/// reserved zero bytes) followed by interleaved little-endian f64 I/Q,
/// x polarization then y.
pub fn write_wave(wave: &Waveform, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(WAVE_MAGIC)?;
    w.write_all(&WAVE_VERSION.to_le_bytes())?;
    w.write_all(&(wave.len() as u64).to_le_bytes())?;
    w.write_all(&wave.sample_rate_hz.to_le_bytes())?;
    w.write_all(&[0u8; 8])?;
    for v in wave.x_pol.iter().chain(&wave.y_pol) {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_wave(mut r: impl Read) -> std::io::Result<Waveform> {
    let invalid = |m: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string());
    let mut head = [0u8; WAVE_HEADER_LEN];
    r.read_exact(&mut head)?;
    if &head[..4] != WAVE_MAGIC {
        return Err(invalid("bad WAVE magic"));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != WAVE_VERSION {
        return Err(invalid("unsupported WAVE version"));
    }
    let n = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let fs = f64::from_le_bytes(head[16..24].try_into().unwrap());
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != n * 32 {
        return Err(invalid("WAVE payload length does not match header"));
    }
    let vals: Vec<Complex64> = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let (x, y) = vals.split_at(n);
    Ok(Waveform::new(x.to_vec(), y.to_vec(), fs))
}

pub const FRAME_HEADER: &str = "index,tx_x_re,tx_x_im,tx_y_re,tx_y_im,rx_x_re,rx_x_im,rx_y_re,rx_y_im";

pub fn frame_to_csv(frame: &SymbolFrame) -> String {
    let mut out = String::with_capacity(frame.len() * 160);
    out.push_str(FRAME_HEADER);
    out.push('\n');
    for k in 0..frame.len() {
        let (a, b, c, d) = (frame.tx_x[k], frame.tx_y[k], frame.rx_x[k], frame.rx_y[k]);
        let _ = writeln!(
            out,
            "{k},{},{},{},{},{},{},{},{}",
            a.re, a.im, b.re, b.im, c.re, c.im, d.re, d.im
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wave_round_trip() {
        let x: Vec<Complex64> = (0..5).map(|k| Complex64::new(k as f64, -0.5 * k as f64)).collect();
        let y: Vec<Complex64> = (0..5).map(|k| Complex64::new(1e-3 * k as f64, 2.0)).collect();
        let w = Waveform::new(x, y, 275.2e9);
        let mut buf = Vec::new();
        write_wave(&w, &mut buf).unwrap();
        assert_eq!(buf.len(), WAVE_HEADER_LEN + 5 * 2 * 16);
        assert_eq!(&buf[..4], b"WAVE");
        let back = read_wave(buf.as_slice()).unwrap();
        assert_eq!(back, w);
        assert!(read_wave(&buf[..40]).is_err());
    }
}

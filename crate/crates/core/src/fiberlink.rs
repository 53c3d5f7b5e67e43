//! Multi-span fiber link: symmetric split-step Fourier solution of the
//! pass-averaged Manakov equation
//!
//! ```text
//! dA/dz = -(alpha/2) A - i (beta2/2) d^2A/dt^2 + i (8/9) gamma (|Ax|^2 + |Ay|^2) A
//! ```
//!
//! with a lumped EDFA after every span.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spectral::{angular_frequencies, FftPair};
use crate::txsig::Waveform;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const DEFAULT_WAVELENGTH_NM: f64 = 1550.0;

/// Kerr coefficient factor from averaging over the Poincaré sphere.
pub const MANAKOV_FACTOR: f64 = 8.0 / 9.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    alpha_db_per_km: f64,
    dispersion_d: f64,
    gamma: f64,
    wavelength_nm: f64,
    beta2: f64,
}

impl FiberSpec {
    /// `dispersion_d` in ps/(nm km), `gamma` in 1/(W km).
    pub fn new(alpha_db_per_km: f64, dispersion_d: f64, gamma: f64, wavelength_nm: f64) -> Result<Self> {
        if !(alpha_db_per_km >= 0.0) || !(gamma >= 0.0) || !dispersion_d.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "fiber needs alpha >= 0, gamma >= 0 and finite D (got {alpha_db_per_km}, {gamma}, {dispersion_d})"
            )));
        }
        if !(1200.0..=1700.0).contains(&wavelength_nm) {
            return Err(Error::InvalidSpec(format!(
                "wavelength {wavelength_nm} nm outside [1200, 1700]"
            )));
        }
        let lambda = wavelength_nm * 1e-9;
        // ps/(nm km) -> s/m^2
        let d_si = dispersion_d * 1e-6;
        let beta2 = -d_si * lambda * lambda / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT);
        Ok(Self {
            alpha_db_per_km,
            dispersion_d,
            gamma,
            wavelength_nm,
            beta2,
        })
    }

    pub fn ssmf() -> Self {
        Self::new(0.2, 17.0, 1.2, DEFAULT_WAVELENGTH_NM).expect("valid preset")
    }

    /// TrueWave Classic.
    pub fn twc() -> Self {
        Self::new(0.23, 2.8, 2.5, DEFAULT_WAVELENGTH_NM).expect("valid preset")
    }

    pub fn alpha_db_per_km(&self) -> f64 {
        self.alpha_db_per_km
    }
    pub fn dispersion_d(&self) -> f64 {
        self.dispersion_d
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_nm
    }
    /// Group-velocity dispersion in s^2/m.
    pub fn beta2(&self) -> f64 {
        self.beta2
    }
    /// Power attenuation in 1/m.
    pub fn alpha_per_m(&self) -> f64 {
        self.alpha_db_per_km * std::f64::consts::LN_10 / 10.0 / 1e3
    }
    pub fn gamma_per_w_m(&self) -> f64 {
        self.gamma / 1e3
    }
    pub fn carrier_hz(&self) -> f64 {
        SPEED_OF_LIGHT / (self.wavelength_nm * 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub fiber: FiberSpec,
    pub n_spans: usize,
    pub span_length_km: f64,
    pub step_km: f64,
    pub edfa_noise_figure_db: f64,
    pub noise_seed: u64,
    pub ase_enabled: bool,
}

fn steps_in(span_length_km: f64, step_km: f64) -> Result<usize> {
    if !(span_length_km > 0.0) || !(step_km > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "span length {span_length_km} km and step {step_km} km must be positive"
        )));
    }
    let n = (span_length_km / step_km).round();
    if n < 1.0 || (n * step_km - span_length_km).abs() > 1e-9 {
        return Err(Error::InvalidSpec(format!(
            "step {step_km} km does not divide span {span_length_km} km"
        )));
    }
    Ok(n as usize)
}

impl LinkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_spans < 1 {
            return Err(Error::InvalidSpec("n_spans ≥ 1 required".into()));
        }
        steps_in(self.span_length_km, self.step_km)?;
        Ok(())
    }

    pub fn total_length_km(&self) -> f64 {
        self.n_spans as f64 * self.span_length_km
    }

    pub fn span_gain_db(&self) -> f64 {
        self.fiber.alpha_db_per_km() * self.span_length_km
    }

    /// Seed for the amplifier after span `span` (0-based).
    pub fn span_seed(&self, span: usize) -> u64 {
        splitmix64(self.noise_seed ^ splitmix64(span as u64 + 1))
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `exp((-alpha/2 + i beta2 w^2 / 2) dz)` per FFT bin.
fn linear_operator(omega: &[f64], fiber: &FiberSpec, dz_m: f64) -> Vec<Complex64> {
    let loss = (-0.5 * fiber.alpha_per_m() * dz_m).exp();
    omega
        .iter()
        .map(|w| Complex64::from_polar(loss, 0.5 * fiber.beta2() * w * w * dz_m))
        .collect()
}

/// One span of symmetric split-step propagation (linear half, nonlinear full, linear half).
pub fn propagate_span(wave: &Waveform, fiber: &FiberSpec, span_length_km: f64, step_km: f64) -> Result<Waveform> {
    wave.check_finite()?;
    let n_steps = steps_in(span_length_km, step_km)?;
    let n = wave.len();
    let h = step_km * 1e3;
    let omega = angular_frequencies(n, wave.sample_rate_hz);
    let half = linear_operator(&omega, fiber, 0.5 * h);
    let full = linear_operator(&omega, fiber, h);
    let nl = MANAKOV_FACTOR * fiber.gamma_per_w_m() * h;

    let mut fft = FftPair::new(n);
    let mut x = wave.x_pol.clone();
    let mut y = wave.y_pol.clone();
    fft.forward(&mut x);
    fft.forward(&mut y);
    apply(&mut x, &mut y, &half);
    for step in 0..n_steps {
        fft.inverse(&mut x);
        fft.inverse(&mut y);
        if nl != 0.0 {
            for (a, b) in x.iter_mut().zip(y.iter_mut()) {
                let rot = Complex64::cis(nl * (a.norm_sqr() + b.norm_sqr()));
                *a *= rot;
                *b *= rot;
            }
        }
        fft.forward(&mut x);
        fft.forward(&mut y);
        let op = if step + 1 == n_steps { &half } else { &full };
        apply(&mut x, &mut y, op);
    }
    fft.inverse(&mut x);
    fft.inverse(&mut y);
    Ok(Waveform::new(x, y, wave.sample_rate_hz))
}

fn apply(x: &mut [Complex64], y: &mut [Complex64], op: &[Complex64]) {
    for ((a, b), o) in x.iter_mut().zip(y.iter_mut()).zip(op) {
        *a *= o;
        *b *= o;
    }
}

/// Per-polarization, per-sample ASE variance `h nu n_sp (G - 1) f_s` with `n_sp = NF/2`.
pub fn ase_variance(gain_db: f64, noise_figure_db: f64, wavelength_nm: f64, sample_rate_hz: f64) -> f64 {
    let g = 10f64.powf(gain_db / 10.0);
    let nu = SPEED_OF_LIGHT / (wavelength_nm * 1e-9);
    let n_sp = 10f64.powf(noise_figure_db / 10.0) / 2.0;
    PLANCK * nu * n_sp * (g - 1.0) * sample_rate_hz
}

/// Adds circular complex white Gaussian noise of per-sample variance `variance`
/// to both polarizations.
pub(crate) fn add_awgn(wave: &mut Waveform, variance: f64, seed: u64) {
    if variance <= 0.0 {
        return;
    }
    let sigma = (variance / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    wave.map_pols(|s| {
        for v in s.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v += Complex64::new(sigma * re, sigma * im);
        }
    });
}

/// Lumped amplifier. `ase_seed = None` gives a noiseless amplifier.
pub fn amplify_with_ase(
    wave: &Waveform,
    gain_db: f64,
    noise_figure_db: f64,
    wavelength_nm: f64,
    ase_seed: Option<u64>,
) -> Result<Waveform> {
    if !(gain_db >= 0.0) {
        return Err(Error::InvalidSpec(format!("gain {gain_db} dB must be ≥ 0")));
    }
    let amp = 10f64.powf(gain_db / 20.0);
    let mut out = wave.clone();
    out.map_pols(|s| s.iter_mut().for_each(|v| *v *= amp));
    if let Some(seed) = ase_seed {
        let var = ase_variance(gain_db, noise_figure_db, wavelength_nm, wave.sample_rate_hz);
        add_awgn(&mut out, var, seed);
    }
    Ok(out)
}

pub fn propagate_link(wave: &Waveform, link: &LinkSpec) -> Result<Waveform> {
    link.validate()?;
    let mut w = wave.clone();
    for span in 0..link.n_spans {
        w = propagate_span(&w, &link.fiber, link.span_length_km, link.step_km)?;
        w = amplify_with_ase(
            &w,
            link.span_gain_db(),
            link.edfa_noise_figure_db,
            link.fiber.wavelength_nm(),
            link.ase_enabled.then(|| link.span_seed(span)),
        )?;
    }
    Ok(w)
}

/// Multiplies the spectrum by `exp(i sign beta2 w^2 L / 2)`; `sign = +1` reproduces the
/// link's accumulated dispersion, `sign = -1` undoes it.
pub(crate) fn dispersion_phase(wave: &Waveform, beta2: f64, length_m: f64, sign: f64) -> Waveform {
    let n = wave.len();
    let omega = angular_frequencies(n, wave.sample_rate_hz);
    let op: Vec<Complex64> = omega
        .iter()
        .map(|w| Complex64::cis(sign * 0.5 * beta2 * w * w * length_m))
        .collect();
    let mut fft = FftPair::new(n);
    let mut x = wave.x_pol.clone();
    let mut y = wave.y_pol.clone();
    fft.forward(&mut x);
    fft.forward(&mut y);
    apply(&mut x, &mut y, &op);
    fft.inverse(&mut x);
    fft.inverse(&mut y);
    Waveform::new(x, y, wave.sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::power_spectrum;

    fn random_wave(n: usize, fs: f64, seed: u64, power: f64) -> Waveform {
        let mut w = Waveform::new(vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n], fs);
        add_awgn(&mut w, power / 2.0, seed);
        w
    }

    #[test]
    fn beta2_of_ssmf() {
        // D = 17 ps/(nm km) at 1550 nm is about -21.7 ps^2/km.
        let b2_ps2_per_km = FiberSpec::ssmf().beta2() * 1e24 * 1e3;
        assert!((b2_ps2_per_km + 21.68).abs() < 0.02, "{b2_ps2_per_km}");
    }

    #[test]
    fn rejects_bad_fiber_and_link() {
        assert!(FiberSpec::new(-1.0, 17.0, 1.2, 1550.0).is_err());
        assert!(FiberSpec::new(0.2, 17.0, 1.2, 1000.0).is_err());
        let mut link = LinkSpec {
            fiber: FiberSpec::ssmf(),
            n_spans: 0,
            span_length_km: 50.0,
            step_km: 1.0,
            edfa_noise_figure_db: 4.5,
            noise_seed: 1,
            ase_enabled: true,
        };
        let err = link.validate().unwrap_err();
        assert!(err.to_string().contains("n_spans ≥ 1"));
        link.n_spans = 1;
        link.step_km = 0.7;
        assert!(link.validate().is_err());
    }

    #[test]
    fn dispersion_only_is_all_pass() {
        let w = random_wave(1024, 100e9, 4, 1e-3);
        let fiber = FiberSpec::new(0.0, 17.0, 0.0, 1550.0).unwrap();
        let out = propagate_span(&w, &fiber, 50.0, 1.0).unwrap();
        let (a, b) = (power_spectrum(&w.x_pol), power_spectrum(&out.x_pol));
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() <= 1e-9 * p.max(1e-30) + 1e-25);
        }
    }

    #[test]
    fn attenuation_law() {
        let w = random_wave(512, 100e9, 5, 1e-3);
        let fiber = FiberSpec::new(0.2, 0.0, 0.0, 1550.0).unwrap();
        let out = propagate_span(&w, &fiber, 50.0, 1.0).unwrap();
        let ratio = out.average_power() / w.average_power();
        assert!((ratio - 0.1).abs() < 1e-12, "{ratio}");
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut w = random_wave(64, 1e9, 1, 1e-3);
        w.y_pol[3] = Complex64::new(f64::NAN, 0.0);
        let err = propagate_span(&w, &FiberSpec::ssmf(), 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { pol: "y", index: 3 }));
    }

    #[test]
    fn noiseless_gain_is_exact() {
        let w = random_wave(256, 1e9, 2, 1e-3);
        let out = amplify_with_ase(&w, 10.0, 4.5, 1550.0, None).unwrap();
        let g = 10f64.sqrt();
        for (a, b) in w.x_pol.iter().zip(&out.x_pol) {
            assert_eq!(*b, *a * g);
        }
        let unity = amplify_with_ase(&w, 0.0, 4.5, 1550.0, Some(7)).unwrap();
        assert_eq!(unity.x_pol, w.x_pol);
        assert!(amplify_with_ase(&w, -1.0, 4.5, 1550.0, None).is_err());
    }

    #[test]
    fn span_seeds_differ() {
        let link = LinkSpec {
            fiber: FiberSpec::twc(),
            n_spans: 3,
            span_length_km: 50.0,
            step_km: 1.0,
            edfa_noise_figure_db: 4.5,
            noise_seed: 11,
            ase_enabled: true,
        };
        assert_ne!(link.span_seed(0), link.span_seed(1));
        assert_eq!(link.span_seed(2), link.span_seed(2));
    }
}

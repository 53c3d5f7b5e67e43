//! Sends a shaped 16-QAM waveform through an amplified SSMF link span by
//! span and shows how dispersion compensation recovers it when the Kerr term
//! is switched off.

use fibertl::fiberlink::{amplify_with_ase, propagate_link, propagate_span, FiberSpec, LinkSpec};
use fibertl::rxdsp::compensate_dispersion;
use fibertl::txsig::{generate_symbols, make_constellation, shape_waveform, watts_to_dbm, TxSpec, Waveform};

fn rel_error(a: &Waveform, b: &Waveform) -> f64 {
    let num: f64 = a
        .x_pol
        .iter()
        .chain(&a.y_pol)
        .zip(b.x_pol.iter().chain(&b.y_pol))
        .map(|(u, v)| (u - v).norm_sqr())
        .sum();
    (num / b.energy()).sqrt()
}

fn main() -> fibertl::Result<()> {
    let spec = TxSpec {
        mod_format: make_constellation(16)?,
        symbol_rate_baud: 34.4e9,
        rolloff: 0.1,
        samples_per_symbol: 8,
        launch_power_dbm: 5.0,
        n_symbols: 1 << 12,
        seed: 1,
    };
    let s = generate_symbols(&spec)?;
    let launched = shape_waveform(&s.x, &s.y, &spec)?;
    let link = LinkSpec {
        fiber: FiberSpec::ssmf(),
        n_spans: 6,
        span_length_km: 50.0,
        step_km: 1.0,
        edfa_noise_figure_db: 4.5,
        noise_seed: 3,
        ase_enabled: true,
    };
    println!("launch {:.2} dBm", watts_to_dbm(launched.average_power()));
    let mut field = launched.clone();
    for span in 0..link.n_spans {
        let out = propagate_span(&field, &link.fiber, link.span_length_km, link.step_km)?;
        let before = watts_to_dbm(out.average_power());
        field = amplify_with_ase(
            &out,
            link.span_gain_db(),
            link.edfa_noise_figure_db,
            link.fiber.wavelength_nm(),
            Some(link.span_seed(span)),
        )?;
        println!(
            "span {}: {before:.2} dBm at span end, {:.2} dBm after the amplifier",
            span + 1,
            watts_to_dbm(field.average_power())
        );
    }
    let cdc = compensate_dispersion(&field, &link.fiber, link.total_length_km())?;
    println!(
        "nonlinear noisy link, error after CDC {:.3e}",
        rel_error(&cdc, &launched)
    );

    let linear = LinkSpec {
        fiber: FiberSpec::new(0.2, 17.0, 0.0, 1550.0)?,
        ase_enabled: false,
        ..link
    };
    let out = propagate_link(&launched, &linear)?;
    let back = compensate_dispersion(&out, &linear.fiber, linear.total_length_km())?;
    println!(
        "linear noiseless link, error before CDC {:.3e}, after CDC {:.3e}",
        rel_error(&out, &launched),
        rel_error(&back, &launched)
    );
    Ok(())
}

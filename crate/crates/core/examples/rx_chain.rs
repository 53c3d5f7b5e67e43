//! Runs the receiver chain (CDC, matched filter, symbol timing, LS scaling)
//! on a TWC link over a range of launch powers, then checks the transceiver
//! noise model back to back at the four symbol rates.

use fibertl::fiberlink::{FiberSpec, LinkSpec};
use fibertl::metrics::{compute_ber, measure_snr, q_from_ber};
use fibertl::rxdsp::{build_symbol_frame, transceiver_snr_db};
use fibertl::txsig::{generate_symbols, make_constellation, TxSpec};

fn main() -> fibertl::Result<()> {
    let base = TxSpec {
        mod_format: make_constellation(16)?,
        symbol_rate_baud: 10e9,
        rolloff: 0.1,
        samples_per_symbol: 8,
        launch_power_dbm: 0.0,
        n_symbols: 1 << 13,
        seed: 4,
    };
    let link = LinkSpec {
        fiber: FiberSpec::twc(),
        n_spans: 5,
        span_length_km: 50.0,
        step_km: 1.0,
        edfa_noise_figure_db: 4.5,
        noise_seed: 5,
        ase_enabled: true,
    };
    println!("TWC 5x50 km, 10 GBd 16-QAM, linear equalization only");
    println!("power_dbm,snr_db,ber,q_db");
    for p in [-4.0, -1.0, 2.0, 5.0, 8.0] {
        let tx = TxSpec {
            launch_power_dbm: p,
            ..base.clone()
        };
        let f = build_symbol_frame(&generate_symbols(&tx)?, &tx, Some(&link), false)?;
        let be =
            compute_ber(&f.rx_x, &f.tx_idx_x, &f.mod_format)?.merge(compute_ber(&f.rx_y, &f.tx_idx_y, &f.mod_format)?);
        let snr = measure_snr(&f.rx_x, &f.tx_x);
        let q = q_from_ber(be.ber()).map_or_else(|| "inf".into(), |q| format!("{q:.2}"));
        println!("{p},{snr:.2},{},{q}", be.estimate());
    }

    println!("\nback-to-back transceiver noise");
    println!("rate_gbd,target_snr_db,measured_snr_db");
    for rate in [34.4, 45.0, 65.0, 85.0] {
        let tx = TxSpec {
            symbol_rate_baud: rate * 1e9,
            ..base.clone()
        };
        let f = build_symbol_frame(&generate_symbols(&tx)?, &tx, None, true)?;
        println!(
            "{rate},{:.3},{:.3}",
            transceiver_snr_db(rate),
            measure_snr(&f.rx_x, &f.tx_x)
        );
    }
    Ok(())
}

//! Builds every supported QAM alphabet, reports its geometry and Gray
//! quality, and draws one seeded dual-polarization symbol stream.

use fibertl::txsig::{generate_symbols, make_constellation, TxSpec};

fn main() -> fibertl::Result<()> {
    for order in [16, 32, 64, 128] {
        let fmt = make_constellation(order)?;
        let pairs = fmt.nearest_neighbor_pairs();
        let one_bit = pairs
            .iter()
            .filter(|&&(a, b)| (fmt.bits_of(a) ^ fmt.bits_of(b)).count_ones() == 1)
            .count();
        let energy = fmt.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
        println!(
            "{order:>3}-QAM: {} bits/symbol, mean energy {energy:.6}, min distance {:.4}, {one_bit}/{} neighbour pairs differ in one bit",
            fmt.bits_per_symbol,
            fmt.min_distance(),
            pairs.len()
        );
    }

    let spec = TxSpec {
        mod_format: make_constellation(16)?,
        symbol_rate_baud: 34.4e9,
        rolloff: 0.1,
        samples_per_symbol: 8,
        launch_power_dbm: 5.0,
        n_symbols: 1 << 10,
        seed: 7,
    };
    let s = generate_symbols(&spec)?;
    println!("first symbols x: {:?}", &s.idx_x[..8]);
    println!("first symbols y: {:?}", &s.idx_y[..8]);
    print!("{}", make_constellation(16)?.to_csv());
    Ok(())
}

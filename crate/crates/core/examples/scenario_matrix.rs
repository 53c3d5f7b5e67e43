//! Runs a scenario-matrix sweep from a config file and prints the summary.
//!
//! `cargo run --release --example scenario_matrix -- [config] [output dir]`
//! (defaults: `examples/configs/sweep_small.conf` and a temporary directory).

use std::path::PathBuf;

use fibertl::harness::{run_scenario_matrix, summary_csv, SweepConfig};

fn main() -> fibertl::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg_path: PathBuf = args.next().map_or_else(
        || concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/sweep_small.conf").into(),
        Into::into,
    );
    let out: PathBuf = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("fibertl_sweep"), Into::into);
    let cfg = SweepConfig::load(&cfg_path)?;
    for r in &cfg.rows {
        println!(
            "row {}: {} -> {} ({})",
            r.id,
            r.source.label,
            r.target.label,
            r.strategy.as_str()
        );
    }
    let rows = run_scenario_matrix(&cfg, &out)?;
    print!("{}", summary_csv(&rows));
    println!("traces written to {}", out.display());
    Ok(())
}

//! Transfer between launch powers on the quick profile: a source model
//! trained at 6 dBm is fine-tuned for a 3 dBm target with the recurrent part
//! frozen. Prints the four reference curves and the savings report.
//!
//! `cargo run --release --example transfer_power -- [source dBm] [target dBm] [seed]`

use fibertl::harness::{compute_savings, Lab, Profile, TLExperiment};
use fibertl::neuralnet::TlStrategy;

fn main() -> fibertl::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<f64>().expect("numeric argument"));
    let (p_src, p_dst) = (args.next().unwrap_or(6.0), args.next().unwrap_or(3.0));
    let seed = args.next().unwrap_or(1.0) as u64;
    let profile = Profile::quick();
    let exp = TLExperiment {
        strategy: TlStrategy::FreezeRecurrent,
        ..TLExperiment::new(&profile, profile.base.with_power(p_src), profile.base.with_power(p_dst))
    };
    let mut lab = Lab::new(profile);
    let (_, source_trace) = lab.train_source(&exp.source, seed)?;
    println!(
        "source {} best Q {:.2} dB",
        exp.source.label,
        source_trace.best_q().unwrap_or(f64::NAN)
    );

    let curves = lab.reference_curves(&exp, seed)?;
    let q = |t: &fibertl::metrics::MetricTrace, e: usize| {
        t.rows[e].q_db.map_or_else(|| "inf".into(), |q| format!("{q:.2}"))
    };
    let mut header = String::from("epoch,wo_nn,snn,wo_tl");
    for t in &curves.tl {
        header.push_str(&format!(",tl_{}", t.fraction));
    }
    println!("{header}");
    for e in 0..curves.wo_tl.rows.len() {
        let tl: Vec<String> = curves.tl.iter().map(|t| q(t, e)).collect();
        println!(
            "{e},{},{},{},{}",
            q(&curves.wo_nn, e),
            q(&curves.snn, e),
            q(&curves.wo_tl, e),
            tl.join(",")
        );
    }

    let r = compute_savings(&curves, exp.q_tolerance_db)?;
    println!(
        "threshold {:.2} dB reached from scratch after {} epochs",
        r.threshold_db, r.epochs_wo_tl
    );
    for row in &r.rows {
        println!(
            "{} on {:.0}% of the data: {:?} epochs, epoch savings {:?}%",
            row.strategy,
            row.fraction * 100.0,
            row.epochs_to_threshold,
            row.epoch_savings_pct.map(|s| s.round())
        );
    }
    Ok(())
}

//! Transfer-direction table on the quick profile: one target power reached
//! from a source 3 dB above it and from a source 3 dB below it, with the
//! median epochs over the profile's seeds.
//!
//! `cargo run --release --example direction_study -- [target dBm]`

use fibertl::harness::{run_direction_study, Lab, Profile, TLExperiment};
use fibertl::neuralnet::TlStrategy;

fn main() -> fibertl::Result<()> {
    let target = std::env::args()
        .nth(1)
        .map_or(3.0, |a| a.parse().expect("target power in dBm"));
    let profile = Profile::quick();
    let t = profile.base.with_power(target);
    let exp = |p: f64| TLExperiment {
        strategy: TlStrategy::FreezeRecurrent,
        fractions: vec![1.0],
        ..TLExperiment::new(&profile, profile.base.with_power(p), t.clone())
    };
    let mut lab = Lab::new(profile.clone());
    let rows = run_direction_study(&mut lab, &[exp(target + 3.0), exp(target - 3.0)])?;
    println!("scenario,max_q_db,epochs_required,per_seed");
    for r in rows {
        let q = r.best_q_db.map_or_else(|| "NA".into(), |q| format!("{q:.2}"));
        let e = r
            .epochs_required
            .map_or_else(|| format!(">{}", profile.train.max_epochs), |e| e.to_string());
        println!("{},{q},{e},{:?}", r.direction, r.per_seed_epochs);
    }
    Ok(())
}

//! Trains the CNN+biLSTM equalizer from scratch on the quick profile's TWC
//! scenario, prints the per-epoch trace and saves the model.
//!
//! `cargo run --release --example train_equalizer -- [epochs] [checkpoint path]`

use fibertl::harness::{Lab, Profile};
use fibertl::metrics::MetricTrace;
use fibertl::neuralnet::{save_checkpoint, train, EqualizerModel, TrainConfig};

fn main() -> fibertl::Result<()> {
    let mut args = std::env::args().skip(1);
    let profile = Profile::quick();
    let epochs = args.next().map_or(profile.train.max_epochs, |e| {
        e.parse().expect("epochs must be an integer")
    });
    let path = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("quick.nneq"), Into::into);
    let scenario = profile.base.clone();
    let seed = profile.seeds[0];

    let data = Lab::new(profile.clone()).data(&scenario, seed)?;
    println!(
        "{}: {} training windows, linear-only Q {:.2} dB",
        scenario.label,
        data.train.len(),
        data.linear_q().unwrap_or(f64::INFINITY)
    );
    let model = EqualizerModel::init(profile.equalizer, seed)?;
    println!("{} trainable parameters", model.parameter_count());
    let cfg = TrainConfig {
        max_epochs: epochs,
        seed,
        ..profile.train
    };
    let (trained, trace) = train(
        model,
        &data.train,
        &data.test,
        &cfg,
        MetricTrace::new(&scenario.label, "none", 1.0),
    )?;
    print!("{}", trace.to_csv());
    println!("best Q {:.2} dB", trace.best_q().unwrap_or(f64::INFINITY));
    save_checkpoint(&trained, &path)?;
    println!("saved {}", path.display());
    Ok(())
}

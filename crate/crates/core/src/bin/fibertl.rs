//! Command-line front end. Every subcommand reads one flat `key = value`
//! config file (profile and scenario keys, see `fibertl::harness`).
//!
//! Exit codes: 0 success, 2 configuration or I/O error, 3 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fibertl::harness::{run_scenario_matrix, summary_csv, KvConfig, Lab, Profile, SweepConfig};
use fibertl::io::frame_to_csv;
use fibertl::metrics::{compute_ber, measure_snr, q_from_ber, MetricTrace};
use fibertl::neuralnet::{evaluate, load_checkpoint, save_checkpoint, train, EqualizerModel, TlStrategy, TrainConfig};
use fibertl::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fibertl",
    version,
    about = "Transfer learning for fiber-channel NN equalizers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate the configured scenario and write its symbol frame as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an equalizer from scratch; writes model.nneq and trace.csv.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Data/init seed (default: first configured seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fine-tune a source checkpoint on the configured target scenario.
    Transfer {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        source_ckpt: PathBuf,
        #[arg(long)]
        strategy: TlStrategy,
        #[arg(long, default_value_t = 1.0)]
        fraction: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on the configured scenario (one CSV row on stdout).
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a scenario matrix; writes trace CSVs and summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_profile(path: &Path) -> Result<Profile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    let mut kv = KvConfig::parse(&text)?;
    let p = Profile::from_kv(&mut kv)?;
    kv.finish()?;
    Ok(p)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
}

fn train_config(p: &Profile, seed: u64, strategy: TlStrategy) -> TrainConfig {
    TrainConfig {
        seed,
        tl_strategy: strategy,
        ..p.train
    }
}

/// Loads a source checkpoint, mapping a missing file to the "train source
/// first" error. The conv activation is not stored and comes from `p`.
fn load_source(path: &Path, p: &Profile) -> Result<EqualizerModel> {
    if !path.exists() {
        return Err(Error::MissingSource(path.display().to_string()));
    }
    let mut m = load_checkpoint(path)?;
    m.cfg.conv_activation = p.equalizer.conv_activation;
    Ok(m)
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Simulate { config, out } => {
            let p = read_profile(&config)?;
            let frame = p.base.simulate()?;
            create_dir(&out)?;
            write(out.join(format!("{}_frame.csv", p.base.label)), &frame_to_csv(&frame))?;
            let be = compute_ber(&frame.rx_x, &frame.tx_idx_x, &frame.mod_format)?.merge(compute_ber(
                &frame.rx_y,
                &frame.tx_idx_y,
                &frame.mod_format,
            )?);
            println!("scenario_id,n_symbols,ber,q_db,snr_x_db");
            println!(
                "{},{},{},{},{}",
                p.base.label,
                frame.len(),
                be.estimate(),
                q_from_ber(be.ber()).map_or("NA".into(), |q| q.to_string()),
                measure_snr(&frame.rx_x, &frame.tx_x)
            );
        }
        Cmd::Train { config, out, seed } => {
            let p = read_profile(&config)?;
            let seed = seed.unwrap_or(p.seeds[0]);
            let mut lab = Lab::new(p.clone());
            let data = lab.data(&p.base, seed)?;
            let model = EqualizerModel::init(p.equalizer, seed)?;
            let trace = MetricTrace::new(&p.base.label, "none", 1.0);
            let (model, trace) = train(
                model,
                &data.train,
                &data.test,
                &train_config(&p, seed, TlStrategy::None),
                trace,
            )?;
            create_dir(&out)?;
            save_checkpoint(&model, out.join("model.nneq"))?;
            write(out.join("trace.csv"), &trace.to_csv())?;
            eprintln!("best Q {:?} dB over {} epochs", trace.best_q(), p.train.max_epochs);
        }
        Cmd::Transfer {
            config,
            source_ckpt,
            strategy,
            fraction,
            out,
            seed,
        } => {
            let p = read_profile(&config)?;
            let source = load_source(&source_ckpt, &p)?;
            let seed = seed.unwrap_or(p.seeds[0]);
            let mut lab = Lab::new(Profile {
                equalizer: source.cfg,
                ..p.clone()
            });
            let (model, trace) = lab.transfer(&source, &p.base, strategy, fraction, seed)?;
            create_dir(&out)?;
            save_checkpoint(&model, out.join("model.nneq"))?;
            write(out.join("trace.csv"), &trace.to_csv())?;
            eprintln!("best Q {:?} dB", trace.best_q());
        }
        Cmd::Evaluate { config, ckpt, seed } => {
            let p = read_profile(&config)?;
            let model = load_source(&ckpt, &p)?;
            let seed = seed.unwrap_or(p.seeds[0]);
            let mut lab = Lab::new(Profile {
                equalizer: model.cfg,
                ..p.clone()
            });
            let data = lab.data(&p.base, seed)?;
            let be = evaluate(&model, &data.test)?;
            println!("scenario_id,n_bits,bit_errors,ber,q_db,linear_ber,linear_q_db");
            let q = |b: f64| q_from_ber(b).map_or("NA".into(), |q| q.to_string());
            println!(
                "{},{},{},{},{},{},{}",
                p.base.label,
                be.bits,
                be.errors,
                be.ber(),
                q(be.ber()),
                data.linear.ber(),
                q(data.linear.ber())
            );
        }
        Cmd::Sweep { config, out } => {
            let cfg = SweepConfig::load(&config)?;
            let rows = run_scenario_matrix(&cfg, &out)?;
            print!("{}", summary_csv(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

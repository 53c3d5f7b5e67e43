//! Scenario-matrix sweeps: one transfer experiment per configured row, trace
//! CSVs for every curve and seed, and a one-line-per-row summary.
//!
//! Row keys, all under `row.<id>.`:
//! `fiber_src`, `fiber_dst` (`ssmf`/`twc`), `spans_src`, `spans_dst`,
//! `p_src`, `p_dst` (dBm), `rate_src`, `rate_dst` (GBd), `fmt_src`, `fmt_dst`
//! (QAM order) and `strategy` (`auto` or a strategy name). Omitted values
//! fall back to the base scenario; `_dst` values fall back to `_src`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::neuralnet::TlStrategy;

use super::config::KvConfig;
use super::scenario::{default_strategy, fiber_by_name, fiber_name, Profile, Scenario};
use super::study::{best_effective_q, compute_savings, median_ranked, Lab, TLExperiment};

pub const SUMMARY_HEADER: &str =
    "row,fiber_src,fiber_dst,p_src,p_dst,rate_src,rate_dst,fmt_src,fmt_dst,strategy,best_q_db,epochs_saved_pct,data_saved_pct";

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow {
    pub id: String,
    pub source: Scenario,
    pub target: Scenario,
    pub strategy: TlStrategy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub profile: Profile,
    pub rows: Vec<MatrixRow>,
}

fn side(kv: &mut KvConfig, base: &Scenario, suffix: &str, fallback: Option<&Scenario>) -> Result<Scenario> {
    let start = fallback.unwrap_or(base);
    let mut s = start.clone();
    if let Some(name) = kv.take::<String>(&format!("fiber_{suffix}"))? {
        s.link.fiber = fiber_by_name(&name).ok_or_else(|| Error::Config {
            line: 0,
            msg: format!("unknown fiber `{name}`"),
        })?;
    }
    s.link.n_spans = kv.take_or(&format!("spans_{suffix}"), s.link.n_spans)?;
    s.tx.launch_power_dbm = kv.take_or(&format!("p_{suffix}"), s.tx.launch_power_dbm)?;
    if let Some(gbd) = kv.take::<f64>(&format!("rate_{suffix}"))? {
        s.tx.symbol_rate_baud = gbd * 1e9;
    }
    if let Some(order) = kv.take::<usize>(&format!("fmt_{suffix}"))? {
        s = s.with_order(order)?;
    }
    s.label = s.auto_label();
    s.validate()?;
    Ok(s)
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KvConfig::parse(text)?;
        let mut row_kv = kv.take_prefixed("row.");
        let profile = Profile::from_kv(&mut kv)?;
        kv.finish()?;

        let mut ids: Vec<String> = row_kv
            .keys()
            .filter_map(|k| k.split_once('.').map(|(id, _)| id.to_string()))
            .collect();
        ids.sort_by(|a, b| match (a.parse::<u64>(), b.parse::<u64>()) {
            (Ok(x), Ok(y)) => x.cmp(&y),
            _ => a.cmp(b),
        });
        ids.dedup();
        let mut rows = Vec::new();
        for id in ids {
            let mut r = row_kv.take_prefixed(&format!("{id}."));
            let source = side(&mut r, &profile.base, "src", None)?;
            let target = side(&mut r, &profile.base, "dst", Some(&source))?;
            let strategy = match r.take::<String>("strategy")?.as_deref() {
                None | Some("auto") => profile.strategy.unwrap_or_else(|| default_strategy(&source, &target)),
                Some(s) => s.parse()?,
            };
            r.finish().map_err(|e| match e {
                Error::Config { line, msg } => Error::Config {
                    line,
                    msg: format!("row {id}: {msg}"),
                },
                e => e,
            })?;
            rows.push(MatrixRow {
                id,
                source,
                target,
                strategy,
            });
        }
        row_kv.finish()?;
        Ok(Self { profile, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Outcome of one matrix row; `result` is the error text for failed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub row: MatrixRow,
    pub result: std::result::Result<SummaryValues, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryValues {
    /// Median best Q of the full-data transfer trace.
    pub best_q_db: Option<f64>,
    /// Median epoch savings of the full-data transfer trace.
    pub epochs_saved_pct: Option<f64>,
    /// Median data savings (smallest reaching fraction).
    pub data_saved_pct: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let (s, t) = (&r.row.source, &r.row.target);
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},",
            r.row.id,
            fiber_name(&s.link.fiber),
            fiber_name(&t.link.fiber),
            s.tx.launch_power_dbm,
            t.tx.launch_power_dbm,
            s.tx.symbol_rate_baud / 1e9,
            t.tx.symbol_rate_baud / 1e9,
            s.tx.mod_format.order,
            t.tx.mod_format.order,
            r.row.strategy
        );
        match &r.result {
            Ok(v) => {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    opt(v.best_q_db),
                    opt(v.epochs_saved_pct),
                    opt(v.data_saved_pct)
                );
            }
            Err(_) => out.push_str("FAILED,FAILED,FAILED\n"),
        }
    }
    out
}

fn write_file(path: PathBuf, text: &str) -> Result<()> {
    std::fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn run_row(lab: &mut Lab, row: &MatrixRow, out_dir: &Path) -> Result<SummaryValues> {
    let p = &lab.profile;
    let exp = TLExperiment {
        source: row.source.clone(),
        target: row.target.clone(),
        strategy: row.strategy,
        fractions: p.fractions.clone(),
        q_tolerance_db: p.q_tolerance_db,
        seeds: p.seeds.clone(),
    };
    exp.validate()?;
    let (mut best, mut epochs, mut data) = (Vec::new(), Vec::new(), Vec::new());
    for &seed in &exp.seeds {
        lab.train_source(&exp.source, seed)?;
        let curves = lab.reference_curves(&exp, seed)?;
        let stem = format!("row{}_seed{}", row.id, seed);
        write_file(out_dir.join(format!("{stem}_wo_nn.csv")), &curves.wo_nn.to_csv())?;
        write_file(out_dir.join(format!("{stem}_snn.csv")), &curves.snn.to_csv())?;
        write_file(out_dir.join(format!("{stem}_wo_tl.csv")), &curves.wo_tl.to_csv())?;
        for (i, t) in curves.tl.iter().enumerate() {
            write_file(out_dir.join(format!("{stem}_tl{i}.csv")), &t.to_csv())?;
        }
        let report = compute_savings(&curves, exp.q_tolerance_db)?;
        let full = report.full_data_row().expect("at least one fraction");
        let full_trace = curves
            .tl
            .iter()
            .find(|t| t.fraction == full.fraction)
            .expect("row comes from a trace");
        best.push(best_effective_q(full_trace));
        epochs.push(full.epoch_savings_pct);
        data.push(report.data_savings_pct());
    }
    Ok(SummaryValues {
        best_q_db: median_ranked(&best, f64::NEG_INFINITY),
        epochs_saved_pct: median_ranked(&epochs, f64::NEG_INFINITY),
        data_saved_pct: median_ranked(&data, f64::NEG_INFINITY),
    })
}

/// Runs every row into `out_dir`: `row<id>_seed<s>_{wo_nn,snn,wo_tl,tl<k>}.csv`
/// traces, `row<id>.error.txt` for failed rows, the echoed `sweep.conf`
/// settings and `summary.csv`.
pub fn run_scenario_matrix(cfg: &SweepConfig, out_dir: &Path) -> Result<Vec<SummaryRow>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let p = &cfg.profile;
    let seeds: Vec<String> = p.seeds.iter().map(u64::to_string).collect();
    let fractions: Vec<String> = p.fractions.iter().map(f64::to_string).collect();
    write_file(
        out_dir.join("sweep.conf"),
        &format!(
            "profile = {}\nseeds = {}\nfractions = {}\nq_tolerance_db = {}\n",
            p.name,
            seeds.join(","),
            fractions.join(","),
            p.q_tolerance_db
        ),
    )?;
    let mut lab = Lab::new(p.clone());
    let mut rows = Vec::new();
    for row in &cfg.rows {
        let result = run_row(&mut lab, row, out_dir).map_err(|e| e.to_string());
        if let Err(msg) = &result {
            write_file(out_dir.join(format!("row{}.error.txt", row.id)), msg)?;
        }
        rows.push(SummaryRow {
            row: row.clone(),
            result,
        });
    }
    write_file(out_dir.join("summary.csv"), &summary_csv(&rows))?;
    Ok(rows)
}

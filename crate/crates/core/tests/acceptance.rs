//! End-to-end acceptance run. Every criterion executes in sequence on one
//! thread and prints a single `criterion N: PASS|FAIL <detail>` line; the
//! process exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fibertl::dataset::{window_frame, Pol, FEATURES};
use fibertl::fiberlink::{propagate_link, propagate_span, FiberSpec, LinkSpec};
use fibertl::harness::{
    compute_savings, effective_q, median_ranked, run_scenario_matrix, Lab, Profile, Scenario, SweepConfig, TLExperiment,
};
use fibertl::metrics::{compute_ber, evm, measure_snr, MetricTrace};
use fibertl::neuralnet::{
    apply_tl_strategy, encode_checkpoint, load_checkpoint, mse, save_checkpoint, train, EqualizerConfig,
    EqualizerModel, Gradients, Params, TestSet, TlStrategy, TrainConfig,
};
use fibertl::rxdsp::{build_symbol_frame, compensate_dispersion, normalize_to_reference, FrameMeta, SymbolFrame};
use fibertl::txsig::{generate_symbols, make_constellation, shape_waveform, TxSpec, Waveform};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tx(rate_gbd: f64, power_dbm: f64, n: usize, seed: u64) -> TxSpec {
    TxSpec {
        mod_format: make_constellation(16).unwrap(),
        symbol_rate_baud: rate_gbd * 1e9,
        rolloff: 0.1,
        samples_per_symbol: 8,
        launch_power_dbm: power_dbm,
        n_symbols: n,
        seed,
    }
}

fn launched(power_dbm: f64, n: usize, seed: u64) -> Waveform {
    let t = tx(34.4, power_dbm, n, seed);
    let s = generate_symbols(&t).unwrap();
    shape_waveform(&s.x, &s.y, &t).unwrap()
}

fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn wave_diff(a: &Waveform, b: &Waveform) -> f64 {
    rel_diff(&a.x_pol, &b.x_pol).max(rel_diff(&a.y_pol, &b.y_pol))
}

fn linear_inversion() -> Outcome {
    let start = Instant::now();
    let fiber = FiberSpec::new(0.2, 17.0, 0.0, 1550.0).unwrap();
    let link = LinkSpec {
        fiber,
        n_spans: 18,
        span_length_km: 50.0,
        step_km: 1.0,
        edfa_noise_figure_db: 4.5,
        noise_seed: 1,
        ase_enabled: false,
    };
    let t = tx(34.4, 0.0, 1 << 14, 9);
    let s = generate_symbols(&t).unwrap();
    let through = build_symbol_frame(&s, &t, Some(&link), false).unwrap();
    let elapsed = start.elapsed();

    // The matched-filter output of an ideal back-to-back system is the
    // symbol-level reference; compare over the same symbols with one LS scale.
    let b2b = build_symbol_frame(&s, &t, None, false).unwrap();
    let off = (b2b.len() - through.len()) / 2;
    let (reference, _) = normalize_to_reference(&b2b.rx_x[off..off + through.len()], &through.tx_x).unwrap();
    let sym = evm(&through.rx_x, &reference);

    let w = shape_waveform(&s.x, &s.y, &t).unwrap();
    let back = compensate_dispersion(&propagate_link(&w, &link).unwrap(), &fiber, link.total_length_km()).unwrap();
    let wave = wave_diff(&back, &w);
    check(
        sym < 1e-6 && wave < 1e-6 && elapsed < Duration::from_secs(30),
        format!(
            "symbol EVM {sym:.2e}, waveform EVM {wave:.2e}, {:.1} s for 2^14 symbols",
            elapsed.as_secs_f64()
        ),
    )
}

fn ssfm_unitarity() -> Outcome {
    let w = launched(8.0, 1 << 11, 4);
    let mut worst = 0.0f64;
    for d in [2.8, 8.0, 17.0] {
        for gamma in [1.2, 1.8, 2.5] {
            let fiber = FiberSpec::new(0.0, d, gamma, 1550.0).unwrap();
            let mut field = w.clone();
            for _ in 0..3 {
                let next = propagate_span(&field, &fiber, 50.0, 1.0).unwrap();
                worst = worst.max((next.energy() / field.energy() - 1.0).abs());
                field = next;
            }
        }
    }
    let mut converging = true;
    let mut ratios = Vec::new();
    for fiber in [FiberSpec::ssmf(), FiberSpec::twc()] {
        let runs: Vec<Waveform> = [4.0, 2.0, 1.0, 0.5, 0.25]
            .iter()
            .map(|&h| propagate_span(&w, &fiber, 20.0, h).unwrap())
            .collect();
        let diffs: Vec<f64> = runs.windows(2).map(|p| wave_diff(&p[0], &p[1])).collect();
        for d in diffs.windows(2) {
            converging &= d[1] < d[0] / 2.0;
            ratios.push(d[0] / d[1]);
        }
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        worst < 1e-9 && converging,
        format!("max per-span energy drift {worst:.1e}, step-halving ratio >= {min_ratio:.2}"),
    )
}

fn spm_closed_form() -> Outcome {
    let w = launched(10.0, 1 << 10, 3);
    let (gamma, length) = (1.2, 50.0);
    let fiber = FiberSpec::new(0.0, 0.0, gamma, 1550.0).unwrap();
    let out = propagate_span(&w, &fiber, length, 1.0).unwrap();
    let mut x = w.x_pol.clone();
    let mut y = w.y_pol.clone();
    for (u, v) in x.iter_mut().zip(y.iter_mut()) {
        let rot = Complex64::from_polar(1.0, 8.0 / 9.0 * gamma * (u.norm_sqr() + v.norm_sqr()) * length);
        *u *= rot;
        *v *= rot;
    }
    let err = wave_diff(&out, &Waveform::new(x, y, w.sample_rate_hz));
    check(err < 1e-6, format!("relative error {err:.1e}"))
}

fn rate_law_loopback() -> Outcome {
    let mut worst = 0.0f64;
    let mut measured = Vec::new();
    for rate in [34.4, 45.0, 65.0, 85.0] {
        let want = -0.175 * rate + 30.0;
        let t = tx(rate, 0.0, 1 << 14, 11);
        let s = generate_symbols(&t).unwrap();
        let f = build_symbol_frame(&s, &t, None, true).unwrap();
        let rx: Vec<Complex64> = f.rx_x.iter().chain(&f.rx_y).copied().collect();
        let sent: Vec<Complex64> = f.tx_x.iter().chain(&f.tx_y).copied().collect();
        let snr = measure_snr(&rx, &sent);
        worst = worst.max((snr - want).abs());
        measured.push(format!("{rate}:{snr:.2}"));
    }
    check(
        worst <= 0.2,
        format!("SNR dB {} (max deviation {worst:.3} dB)", measured.join(" ")),
    )
}

fn blocks(model: &mut EqualizerModel) -> Vec<(&'static str, Vec<&mut Vec<f64>>)> {
    let p = &mut model.params;
    vec![
        ("conv", vec![&mut p.conv.w, &mut p.conv.b]),
        (
            "bilstm",
            vec![
                &mut p.bilstm.fw.wx,
                &mut p.bilstm.fw.wh,
                &mut p.bilstm.fw.b,
                &mut p.bilstm.bw.wx,
                &mut p.bilstm.bw.wh,
                &mut p.bilstm.bw.b,
            ],
        ),
        ("dense", vec![&mut p.dense.w, &mut p.dense.b]),
    ]
}

fn flat_grads(g: &Gradients) -> Vec<Vec<f64>> {
    let cat = |v: Vec<&Vec<f64>>| v.into_iter().flatten().copied().collect::<Vec<f64>>();
    let (c, l, d) = (
        g.conv.as_ref().unwrap(),
        g.bilstm.as_ref().unwrap(),
        g.dense.as_ref().unwrap(),
    );
    vec![
        cat(vec![&c.w, &c.b]),
        cat(vec![&l.fw.wx, &l.fw.wh, &l.fw.b, &l.bw.wx, &l.bw.wh, &l.bw.b]),
        cat(vec![&d.w, &d.b]),
    ]
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let cfg = EqualizerConfig::new(3, 2, 2, 1);
    let mut model = EqualizerModel::init(cfg, 17).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (_, group) in blocks(&mut model) {
        for v in group {
            for x in v.iter_mut() {
                *x += rng.random_range(-0.3..0.3);
            }
        }
    }
    let batch = 4;
    let x: Vec<f64> = (0..batch * cfg.window_len() * FEATURES)
        .map(|_| rng.random_range(-1.5..1.5))
        .collect();
    let y: Vec<f64> = (0..batch * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
    let shape = [batch, cfg.window_len(), FEATURES];
    let analytic = flat_grads(&model.loss_and_gradients(&x, shape, &y).unwrap());
    let loss = |m: &EqualizerModel| mse(&m.forward(&x, shape).unwrap(), &y);

    let eps = 1e-5;
    let mut details = Vec::new();
    let mut ok = true;
    for (bi, a) in analytic.iter().enumerate() {
        let name = blocks(&mut model.clone())[bi].0;
        let mut numeric = Vec::new();
        let n_slices = blocks(&mut model.clone())[bi].1.len();
        for si in 0..n_slices {
            for i in 0..blocks(&mut model.clone())[bi].1[si].len() {
                let mut plus = model.clone();
                blocks(&mut plus)[bi].1[si][i] += eps;
                let mut minus = model.clone();
                blocks(&mut minus)[bi].1[si][i] -= eps;
                numeric.push((loss(&plus) - loss(&minus)) / (2.0 * eps));
            }
        }
        let norm = |v: &[f64]| v.iter().map(|u| u * u).sum::<f64>().sqrt();
        let diff: Vec<f64> = a.iter().zip(&numeric).map(|(u, v)| u - v).collect();
        let rel = norm(&diff) / norm(a).max(norm(&numeric));
        ok &= a.len() == numeric.len() && rel < 1e-4;
        details.push(format!("{name} {rel:.1e}"));
    }
    let elapsed = start.elapsed();
    check(
        ok && elapsed < Duration::from_secs(60),
        format!("relative errors {}, {:.2} s", details.join(", "), elapsed.as_secs_f64()),
    )
}

fn awgn_frame(n: usize, sigma2: f64, seed: u64) -> SymbolFrame {
    let t = TxSpec {
        symbol_rate_baud: 10e9,
        samples_per_symbol: 2,
        ..tx(10.0, 0.0, n, seed)
    };
    let s = generate_symbols(&t).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABC);
    let mut noisy = |v: &[Complex64]| {
        v.iter()
            .map(|c| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                c + Complex64::new(re, im) * (sigma2 / 2.0).sqrt()
            })
            .collect::<Vec<_>>()
    };
    let rx = (noisy(&s.x), noisy(&s.y));
    SymbolFrame::from_parts((s.x, s.y), rx, (s.idx_x, s.idx_y), t.mod_format, FrameMeta::default()).unwrap()
}

fn param_bytes(blocks: &[&[f64]]) -> Vec<u8> {
    blocks
        .iter()
        .flat_map(|b| b.iter())
        .flat_map(|v| v.to_le_bytes())
        .collect()
}

fn freeze_invariance() -> Outcome {
    let cfg = EqualizerConfig::new(4, 3, 4, 2);
    let ds = window_frame(&awgn_frame(1 << 11, 0.01, 1), cfg.n_taps, Pol::X).unwrap();
    let test = TestSet::from_frame(&awgn_frame(1 << 10, 0.01, 2), cfg.n_taps, Pol::X).unwrap();
    let tcfg = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 64,
        max_epochs: 10,
        seed: 3,
        ..TrainConfig::default()
    };
    let source = EqualizerModel::init(cfg, 6).unwrap();
    let frozen = |p: &Params, s: TlStrategy| match s {
        TlStrategy::FreezeConv => param_bytes(&[&p.conv.w, &p.conv.b]),
        _ => param_bytes(&[
            &p.bilstm.fw.wx,
            &p.bilstm.fw.wh,
            &p.bilstm.fw.b,
            &p.bilstm.bw.wx,
            &p.bilstm.bw.wh,
            &p.bilstm.bw.b,
            &p.dense.w,
            &p.dense.b,
        ]),
    };
    let mut ok = true;
    let mut details = Vec::new();
    for s in [TlStrategy::FreezeConv, TlStrategy::FreezeRecurrent] {
        let start = apply_tl_strategy(&source, &cfg, s).unwrap();
        let (end, _) = train(start, &ds, &test, &tcfg, MetricTrace::new("toy", s.as_str(), 1.0)).unwrap();
        let same = frozen(&source.params, s) == frozen(&end.params, s);
        let moved = source.params != end.params;
        ok &= same && moved;
        details.push(format!(
            "{}: frozen identical {same}, trainable moved {moved}",
            s.as_str()
        ));
    }
    check(ok, details.join("; "))
}

/// Gaussian tail by composite Simpson integration of the density.
fn gaussian_tail(x: f64) -> f64 {
    let n = 20_000;
    let h = 12.0 / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(x) + pdf(x + 12.0);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * pdf(x + k as f64 * h);
    }
    s * h / 3.0
}

fn awgn_ber() -> Outcome {
    let es_n0 = 10f64.powf(1.4);
    let fmt = make_constellation(16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let sigma = (0.5 / es_n0).sqrt();
    let n = 1 << 16;
    let idx: Vec<u32> = (0..n).map(|_| rng.random_range(0..16)).collect();
    let rx: Vec<Complex64> = idx
        .iter()
        .map(|&i| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            fmt.points[i as usize] + Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    let be = compute_ber(&rx, &idx, &fmt).unwrap();
    let x = (es_n0 / 5.0).sqrt();
    let analytic = (3.0 * gaussian_tail(x) + 2.0 * gaussian_tail(3.0 * x) - gaussian_tail(5.0 * x)) / 4.0;
    let rel = (be.ber() / analytic - 1.0).abs();
    check(
        rel < 0.1 && be.bits >= 1 << 16,
        format!(
            "BER {:.3e} vs analytic {analytic:.3e} over {} bits ({:.1}% off)",
            be.ber(),
            be.bits,
            rel * 100.0
        ),
    )
}

/// Per-seed numbers of the power-transfer study.
struct SeedResult {
    e_scratch: usize,
    e_forward: Option<usize>,
    e_forward_10: Option<usize>,
    e_reverse: Option<usize>,
    /// Q after the first transfer epoch, forward and reverse.
    q1_forward: f64,
    q1_reverse: f64,
    q_snn: f64,
    tl_plateau: f64,
    q_format_snn: f64,
    q_format_linear: f64,
}

struct PowerStudy {
    high: f64,
    target: f64,
    low: f64,
    seeds: Vec<SeedResult>,
    forward_time: Duration,
    total_time: Duration,
}

fn power_study() -> PowerStudy {
    let p = Profile::quick();
    let (high, target, low) = (6.0, 3.0, 0.0);
    let src = p.base.with_power(high);
    let tgt = p.base.with_power(target);
    let rev = p.base.with_power(low);
    let forward = TLExperiment {
        strategy: TlStrategy::FreezeRecurrent,
        ..TLExperiment::new(&p, src.clone(), tgt.clone())
    };
    let reverse = TLExperiment {
        fractions: vec![1.0],
        ..TLExperiment::new(&p, rev.clone(), tgt)
    };
    let format_target: Scenario = src.with_order(64).unwrap();
    let mut lab = Lab::new(p.clone());
    let start = Instant::now();
    let mut forward_time = Duration::ZERO;
    let mut seeds = Vec::new();
    for &seed in &p.seeds {
        let t0 = Instant::now();
        lab.train_source(&src, seed).unwrap();
        let curves = lab.reference_curves(&forward, seed).unwrap();
        forward_time += t0.elapsed();
        let report = compute_savings(&curves, forward.q_tolerance_db).unwrap();
        let by_fraction = |f: f64| {
            report
                .rows
                .iter()
                .find(|r| r.fraction == f)
                .and_then(|r| r.epochs_to_threshold)
        };

        lab.train_source(&rev, seed).unwrap();
        let rev_model = lab.source(&rev, seed).unwrap().clone();
        let (_, rv) = lab
            .transfer(&rev_model, &reverse.target, reverse.strategy, 1.0, seed)
            .unwrap();
        let q1_reverse = effective_q(&rv.rows[1]);
        let rv_report = compute_savings(
            &fibertl::harness::ReferenceCurves {
                tl: vec![rv],
                ..curves.clone()
            },
            reverse.q_tolerance_db,
        )
        .unwrap();

        let src_model = lab.source(&src, seed).unwrap().clone();
        let fmt_errors = lab.evaluate_on(&src_model, &format_target, seed).unwrap();
        let fmt_data = lab.data(&format_target, seed).unwrap();
        let as_row = |ber: f64| fibertl::metrics::TraceRow {
            epoch: 0,
            train_mse: 0.0,
            ber,
            q_db: fibertl::metrics::q_from_ber(ber),
        };

        let r = SeedResult {
            e_scratch: report.epochs_wo_tl,
            e_forward: by_fraction(1.0),
            e_forward_10: by_fraction(0.1),
            e_reverse: rv_report.rows[0].epochs_to_threshold,
            q1_forward: effective_q(&curves.tl[0].rows[1]),
            q1_reverse,
            q_snn: report.q_snn.unwrap(),
            tl_plateau: curves.tl[0].plateau_q().unwrap_or(f64::INFINITY),
            q_format_snn: effective_q(&as_row(fmt_errors.ber())),
            q_format_linear: effective_q(&as_row(fmt_data.linear.ber())),
        };
        eprintln!(
            "seed {seed}: scratch {} fw {:?} fw10 {:?} rv {:?} snn {:.2} plateau {:.2} fmt {:.2}/{:.2} ({:.0} s)",
            r.e_scratch,
            r.e_forward,
            r.e_forward_10,
            r.e_reverse,
            r.q_snn,
            r.tl_plateau,
            r.q_format_snn,
            r.q_format_linear,
            start.elapsed().as_secs_f64()
        );
        seeds.push(r);
    }
    PowerStudy {
        high,
        target,
        low,
        seeds,
        forward_time,
        total_time: start.elapsed(),
    }
}

fn as_f64(v: Option<usize>) -> Option<f64> {
    v.map(|e| e as f64)
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "not reached".into(), |x| format!("{x}"))
}

fn power_shift_savings(s: &PowerStudy) -> Outcome {
    let savings: Vec<Option<f64>> = s
        .seeds
        .iter()
        .map(|r| r.e_forward.map(|e| (1.0 - e as f64 / r.e_scratch as f64) * 100.0))
        .collect();
    let med = median_ranked(&savings, f64::NEG_INFINITY);
    let med10 = median_ranked(
        &s.seeds.iter().map(|r| as_f64(r.e_forward_10)).collect::<Vec<_>>(),
        f64::INFINITY,
    );
    let per_seed: Vec<String> = s
        .seeds
        .iter()
        .map(|r| format!("{:?}/{}/{:?}", r.e_forward, r.e_scratch, r.e_forward_10))
        .collect();
    check(
        med.is_some_and(|m| m >= 50.0) && med10.is_some() && s.forward_time <= Duration::from_secs(1800),
        format!(
            "{} -> {} dBm: median epoch savings {}%, median 10% data epochs {}, per seed tl/scratch/tl10 [{}], {:.0} s",
            s.high,
            s.target,
            show(med.map(|m| m.round())),
            show(med10),
            per_seed.join(" "),
            s.forward_time.as_secs_f64()
        ),
    )
}

fn direction_asymmetry(s: &PowerStudy) -> Outcome {
    let fw = median_ranked(
        &s.seeds.iter().map(|r| as_f64(r.e_forward)).collect::<Vec<_>>(),
        f64::INFINITY,
    );
    let rv = median_ranked(
        &s.seeds.iter().map(|r| as_f64(r.e_reverse)).collect::<Vec<_>>(),
        f64::INFINITY,
    );
    let ok = match (fw, rv) {
        (Some(f), Some(r)) => f <= r,
        (Some(_), None) => true,
        _ => false,
    };
    let q1: Vec<String> = s
        .seeds
        .iter()
        .map(|r| format!("{:.2}/{:.2}", r.q1_forward, r.q1_reverse))
        .collect();
    check(
        ok,
        format!(
            "median epochs {} -> {} dBm: {}, {} -> {} dBm: {}; Q after one epoch high/low source [{}]",
            s.high,
            s.target,
            show(fw),
            s.low,
            s.target,
            show(rv),
            q1.join(" ")
        ),
    )
}

fn format_transfer(s: &PowerStudy) -> Outcome {
    let margin: Vec<Option<f64>> = s
        .seeds
        .iter()
        .map(|r| Some(r.q_format_snn - r.q_format_linear))
        .collect();
    let med = median_ranked(&margin, f64::NEG_INFINITY);
    let per_seed: Vec<String> = s
        .seeds
        .iter()
        .map(|r| format!("{:.2}/{:.2}", r.q_format_snn, r.q_format_linear))
        .collect();
    check(
        med.is_some_and(|m| m >= 0.0),
        format!(
            "64-QAM at {} dBm, 16-QAM model vs linear Q dB [{}]",
            s.high,
            per_seed.join(" ")
        ),
    )
}

fn snn_degradation(s: &PowerStudy) -> Outcome {
    let gaps: Vec<Option<f64>> = s.seeds.iter().map(|r| Some(r.tl_plateau - r.q_snn)).collect();
    let med = median_ranked(&gaps, f64::NEG_INFINITY);
    let per_seed: Vec<String> = s
        .seeds
        .iter()
        .map(|r| format!("{:.2}/{:.2}", r.tl_plateau, r.q_snn))
        .collect();
    check(
        med.is_some_and(|m| m >= 0.5),
        format!(
            "{} dB shift: median plateau - S-NN {} dB, plateau/S-NN [{}]",
            s.high - s.target,
            show(med.map(|m| (m * 100.0).round() / 100.0)),
            per_seed.join(" ")
        ),
    )
}

const TINY_SWEEP: &str = "profile = quick
n_filters = 4
kernel_size = 3
lstm_hidden = 4
n_taps = 2
max_epochs = 3
source_epochs = 3
seeds = 1, 2
fractions = 1, 0.5
n_symbols = 1024
row.1.p_src = 4
row.1.p_dst = 1
row.2.fmt_src = 16
row.2.fmt_dst = 64
row.2.strategy = retrain_all
";

fn determinism_and_reporting() -> Outcome {
    let cfg = SweepConfig::parse(TINY_SWEEP).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_scenario_matrix(&cfg, a.path()).unwrap();
    run_scenario_matrix(&cfg, b.path()).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let traces = names.iter().filter(|n| n.to_string_lossy().ends_with(".csv")).count();
    let identical = names
        .iter()
        .all(|n| std::fs::read(a.path().join(n)).unwrap() == std::fs::read(b.path().join(n)).unwrap());

    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scripts/recompute_summary.py");
    let out = Command::new("python3").arg(script).arg(a.path()).output();
    let recomputed = out.as_ref().is_ok_and(|o| o.status.success());

    let ds = window_frame(&awgn_frame(1 << 10, 0.01, 7), 2, Pol::X).unwrap();
    let test = TestSet::from_frame(&awgn_frame(1 << 9, 0.01, 8), 2, Pol::X).unwrap();
    let tcfg = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 64,
        max_epochs: 2,
        seed: 1,
        ..TrainConfig::default()
    };
    let model = EqualizerModel::init(EqualizerConfig::new(4, 3, 4, 2), 2).unwrap();
    let (trained, _) = train(model, &ds, &test, &tcfg, MetricTrace::new("toy", "none", 1.0)).unwrap();
    let path = a.path().join("model.nneq");
    save_checkpoint(&trained, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    let round_trip = encode_checkpoint(&loaded) == std::fs::read(&path).unwrap()
        && param_bytes(&loaded.params.slices()) == param_bytes(&trained.params.slices());

    check(
        identical && recomputed && round_trip && traces > 0,
        format!(
            "{} files ({traces} csv) identical across runs: {identical}; summary recomputed: {recomputed}; checkpoint round trip: {round_trip}",
            names.len()
        ),
    )
}

fn run(n: usize, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(d) => println!("criterion {n}: PASS {d} [{secs:.1} s]"),
        Err(d) => println!("criterion {n}: FAIL {d} [{secs:.1} s]"),
    }
    outcome.is_ok()
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= run(1, linear_inversion);
    ok &= run(2, ssfm_unitarity);
    ok &= run(3, spm_closed_form);
    ok &= run(4, rate_law_loopback);
    ok &= run(5, gradient_check);
    ok &= run(6, freeze_invariance);
    ok &= run(7, awgn_ber);
    let study = catch_unwind(power_study);
    match &study {
        Ok(s) => {
            eprintln!("power study finished in {:.0} s", s.total_time.as_secs_f64());
            ok &= run(8, || power_shift_savings(s));
            ok &= run(9, || direction_asymmetry(s));
            ok &= run(10, || format_transfer(s));
            ok &= run(11, || snn_degradation(s));
        }
        Err(_) => {
            for n in 8..=11 {
                println!("criterion {n}: FAIL power study panicked");
            }
            ok = false;
        }
    }
    ok &= run(12, determinism_and_reporting);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

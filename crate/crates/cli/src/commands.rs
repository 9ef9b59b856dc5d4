//! Command execution. Each command appends its data to the stdout payload
//! (or writes it to the requested file) and the caller prints the run
//! manifest as the final line.

use std::fs;
use std::io::{ErrorKind, Write as _};
use std::path::Path;

use serde_json::json;
use spikebar_core::config::ModelConfig;
use spikebar_core::engine::seeded_rng;
use spikebar_core::network::{infer, trained, Crossbar};
use spikebar_core::synapse::{bcm_drift, delta_w_curve, PairingProtocol, StdpParams, WeightMap};
use spikebar_core::tasks::ecg::{classify_heart_rate, detect_beats, BcmParams, EcgRecord};
use spikebar_core::tasks::sweep::{perturb_sweep, recognition_sweep, JudgeSummary};
use spikebar_core::tasks::{DigitCorpus, Pattern};
use spikebar_core::{Error, Result};

use crate::args::{Cli, Cmd};
use crate::manifest::RunManifest;

/// Averaging window (seconds) for each sampled drift rate; long enough that
/// the Poisson estimate's sign is stable away from the threshold.
const DRIFT_WINDOW: f64 = 2e4;

/// Executes one parsed invocation. `argv` is recorded in the manifest.
pub fn run(cli: Cli, argv: &[String]) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::config(format!("cannot size the thread pool: {e}")))?;
    }
    let cfg = load_config(&cli)?;
    let mut man = RunManifest::new(argv, &cfg);
    let mut payload = String::new();

    match &cli.cmd {
        Cmd::Train { corpus, out } => {
            let corpus = load_corpus(corpus.as_deref())?;
            let xb = trained(&cfg, &corpus)?;
            write_output(&mut man, out, &xb.to_csv())?;
        }

        Cmd::Infer { weights, pattern, corpus } => {
            let text = read_file(weights)?;
            let xb = Crossbar::from_csv(&text, &cfg.wmap, cfg.delay)?;
            let corpus = load_corpus(corpus.as_deref())?;
            let p = resolve_pattern(pattern, &corpus)?;
            let o = infer(&xb, &cfg, &p, cfg.infer_duration)?;
            let line = json!({
                "winner": o.winner,
                "tie": o.tie,
                "tied": o.tied,
                "latency_s": o.latency,
                "spike_counts": o.spike_counts,
            });
            emit(&mut man, &mut payload, None, &line.to_string())?;
        }

        Cmd::SweepNoise { k, judge, out, out_cases, corpus } => {
            let corpus = load_corpus(corpus.as_deref())?;
            let report = recognition_sweep(&cfg, &corpus, *k as usize, (*judge).into())?;
            let per_judge = |s: Option<JudgeSummary>| {
                s.map(|s| json!({ "correct": s.correct, "rate_pct": s.rate_pct }))
            };
            let summary = json!({
                "k": report.k,
                "total": report.total,
                "oracle": per_judge(report.oracle),
                "circuit": per_judge(report.circuit),
            });
            emit(&mut man, &mut payload, out.as_deref(), &summary.to_string())?;
            if let Some(p) = out_cases {
                write_output(&mut man, p, &report.cases_csv())?;
            }
        }

        Cmd::StdpCurve { dt_range, out } => {
            let grid = parse_grid(dt_range)?;
            let mut csv = String::from("delta_t_s,delta_w\n");
            for dt in grid {
                csv.push_str(&format!("{dt},{}\n", delta_w_curve(&cfg.stdp, dt)));
            }
            emit(&mut man, &mut payload, out.as_deref(), &csv)?;
        }

        Cmd::BcmCurve { theta, freqs, out } => {
            let unit = match theta {
                1 => cfg.hr.theta_low,
                _ => cfg.hr.theta_high,
            };
            let p = rate_params(&unit)?;
            let map = WeightMap::unclamped();
            let grid = parse_grid(freqs)?;
            if grid.first().is_some_and(|f| *f <= 0.0) {
                return Err(Error::config("frequency grid must start above 0 Hz"));
            }
            let mut csv = String::from("freq_hz,drift_per_s\n");
            for (i, f) in grid.into_iter().enumerate() {
                let stream = 5_000_000 + (*theta as u64 - 1) * 1_000_000 + i as u64;
                let mut rng = seeded_rng(cfg.seed, stream);
                let drift =
                    bcm_drift(&p, &map, f, PairingProtocol::Poisson, DRIFT_WINDOW, &mut rng)?;
                csv.push_str(&format!("{f},{drift}\n"));
            }
            emit(&mut man, &mut payload, out.as_deref(), &csv)?;
        }

        Cmd::HrClassify { ecg, mode, sample_rate } => {
            let record = EcgRecord::from_csv(&read_file(ecg)?, *sample_rate)?;
            let beats = detect_beats(&record)?;
            let mut hr = cfg.hr;
            if let Some(m) = mode {
                hr.mode = *m;
            }
            let outcome = classify_heart_rate(&hr, &beats, cfg.seed)?;
            let line = serde_json::to_string(&outcome)
                .map_err(|e| Error::invariant(format!("cannot serialize outcome: {e}")))?;
            emit(&mut man, &mut payload, None, &line)?;
        }

        Cmd::Perturb { pct, seeds, corpus } => {
            let corpus = load_corpus(corpus.as_deref())?;
            let r = perturb_sweep(&cfg, &corpus, *pct, *seeds)?;
            let line = json!({
                "pct": r.pct,
                "seeds": r.seeds,
                "survivors": r.survivors,
                "survival": r.survival,
            });
            emit(&mut man, &mut payload, None, &line.to_string())?;
        }

        Cmd::Demo => {
            let corpus = DigitCorpus::canonical();
            let xb = trained(&cfg, &corpus)?;
            let mut all_ok = true;
            let mut lines = String::new();
            for d in 0..corpus.len() {
                let o = infer(&xb, &cfg, corpus.digit(d), cfg.infer_duration)?;
                let (label, ok) = match o.unique_winner() {
                    Some(w) => (w.to_string(), w == d),
                    None => ((if o.tie { "tie" } else { "none" }).into(), false),
                };
                lines.push_str(&format!(
                    "digit={d} winner={label} {}\n",
                    if ok { "OK" } else { "FAIL" }
                ));
                all_ok &= ok;
            }
            if !all_ok {
                print_stdout(&lines);
                return Err(Error::invariant(
                    "demo: the trained system misclassifies at least one clean digit",
                ));
            }
            payload.push_str(&lines);
        }
    }

    payload.push_str(&man.to_json());
    payload.push('\n');
    print_stdout(&payload);
    Ok(())
}

/// Writes to stdout, terminating quietly when the consumer closed the pipe.
fn print_stdout(s: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(s.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() == ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error kind=internal msg=\"cannot write stdout: {e}\"");
        std::process::exit(3);
    }
}

fn load_config(cli: &Cli) -> Result<ModelConfig> {
    let text = match &cli.config {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = ModelConfig::from_toml(&text)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn load_corpus(path: Option<&Path>) -> Result<DigitCorpus> {
    match path {
        Some(p) => DigitCorpus::from_file_text(&read_file(p)?),
        None => Ok(DigitCorpus::canonical()),
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))
}

fn write_output(man: &mut RunManifest, path: &Path, data: &str) -> Result<()> {
    fs::write(path, data)
        .map_err(|e| Error::input(format!("cannot write {}: {e}", path.display())))?;
    man.record(path, data.as_bytes());
    Ok(())
}

/// Routes data to `target` when given, otherwise onto the stdout payload.
fn emit(
    man: &mut RunManifest,
    payload: &mut String,
    target: Option<&Path>,
    data: &str,
) -> Result<()> {
    match target {
        Some(p) => write_output(man, p, data),
        None => {
            payload.push_str(data);
            if !data.ends_with('\n') {
                payload.push('\n');
            }
            Ok(())
        }
    }
}

/// A digit index (one or two characters) or a literal pixel bitstring.
fn resolve_pattern(s: &str, corpus: &DigitCorpus) -> Result<Pattern> {
    if s.len() <= 2 {
        let d: usize = s
            .parse()
            .map_err(|_| Error::input(format!("pattern {s:?} is neither a digit index nor a bitstring")))?;
        if d >= corpus.len() {
            return Err(Error::input(format!(
                "digit index {d} out of range for a corpus of {}",
                corpus.len()
            )));
        }
        Ok(corpus.digit(d).clone())
    } else {
        Pattern::from_bits(s)
    }
}

/// Parses `start:end:count` into an inclusive, evenly spaced grid.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(Error::config(format!("range {s:?} must be start:end:count")));
    };
    let a: f64 = a
        .parse()
        .map_err(|_| Error::config(format!("bad range start {a:?}")))?;
    let b: f64 = b
        .parse()
        .map_err(|_| Error::config(format!("bad range end {b:?}")))?;
    let n: usize = n
        .parse()
        .map_err(|_| Error::config(format!("bad range count {n:?}")))?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::config(format!("range start {a} must lie below end {b}")));
    }
    if n < 2 {
        return Err(Error::config(format!("range count must be at least 2, got {n}")));
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

/// Plasticity parameters of one threshold unit as a full curve description.
fn rate_params(b: &BcmParams) -> Result<StdpParams> {
    let p = StdpParams::rate_curve(b.a_plus, -b.a_minus, b.tau_plus, b.tau_minus);
    p.validate()?;
    Ok(p)
}

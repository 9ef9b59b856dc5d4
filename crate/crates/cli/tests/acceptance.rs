//! End-to-end checks of the installed binary: every command must be a pure
//! function of its arguments, config and input files — rerunning reproduces
//! identical bytes — and the documented exit-code and output contracts must
//! hold exactly.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use spikebar_cli::manifest::sha256_hex;
use spikebar_core::tasks::ecg::{synth_ecg, EcgRecord};
use spikebar_core::tasks::DigitCorpus;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spikebar"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// Splits stdout into the data payload and the trailing manifest line.
fn split_stdout(stdout: &str) -> (String, Value) {
    let trimmed = stdout.strip_suffix('\n').expect("stdout ends with a newline");
    let (payload, last) = match trimmed.rsplit_once('\n') {
        Some((head, tail)) => (head.to_string(), tail),
        None => (String::new(), trimmed),
    };
    let manifest: Value = serde_json::from_str(last).expect("last stdout line is the manifest");
    (payload, manifest)
}

fn run_ok(args: &[&str]) -> (String, Value) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    split_stdout(&String::from_utf8(out.stdout).expect("stdout is UTF-8"))
}

fn write_ecg_fixture(dir: &Path) -> String {
    let path = dir.join("ecg_1hz.csv");
    let record = synth_ecg(1.0, 12.0, 360.0).unwrap();
    fs::write(&path, record.to_csv()).unwrap();
    path.display().to_string()
}

#[test]
fn criterion_10_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let ecg = write_ecg_fixture(dir.path());
    let w = dir.path().join("w.csv").display().to_string();
    let s = dir.path().join("s.json").display().to_string();
    let c = dir.path().join("c.csv").display().to_string();

    let battery: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (vec!["demo"], vec![]),
        (vec!["train", "--out", &w], vec![&w]),
        (vec!["infer", "--weights", &w, "--pattern", "3"], vec![]),
        (vec!["infer", "--weights", &w, "--pattern", "010110010010111"], vec![]),
        (
            vec!["sweep-noise", "--k", "1", "--judge", "both", "--out", &s, "--out-cases", &c],
            vec![&s, &c],
        ),
        (vec!["stdp-curve", "--dt-range", "-5e-6:5e-6:21"], vec![]),
        (vec!["bcm-curve", "--theta", "2", "--freqs", "0.5:2.5:3"], vec![]),
        (vec!["hr-classify", "--ecg", &ecg], vec![]),
        (vec!["hr-classify", "--ecg", &ecg, "--mode", "simulated"], vec![]),
        (vec!["perturb", "--pct", "0.1", "--seeds", "12"], vec![]),
        (vec!["--seed", "7", "sweep-noise", "--k", "0", "--judge", "oracle"], vec![]),
    ];

    for (args, files) in &battery {
        let first = run(args);
        let first_files: Vec<Vec<u8>> =
            files.iter().map(|f| fs::read(f).expect("output file written")).collect();
        let second = run(args);
        let second_files: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();

        assert!(first.status.success(), "{args:?} failed");
        assert_eq!(first.status.code(), second.status.code(), "{args:?} exit code changed");
        assert_eq!(first.stdout, second.stdout, "{args:?} stdout changed between reruns");
        assert_eq!(first.stderr, second.stderr, "{args:?} stderr changed between reruns");
        assert_eq!(first_files, second_files, "{args:?} file outputs changed between reruns");
    }
    println!("criterion 10: {} commands byte-identical across reruns", battery.len());
}

#[test]
fn environment_variables_do_not_affect_output() {
    let bare = run(&["demo"]);
    let polluted = bin()
        .args(["demo"])
        .env("SPIKEBAR_SEED", "99")
        .env("SPIKEBAR_CONFIG", "/nonexistent.toml")
        .env("SPIKEBAR_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(bare.stdout, polluted.stdout);
    assert_eq!(bare.stderr, polluted.stderr);
}

#[test]
fn sweep_data_is_invariant_to_thread_count() {
    let (one, _) = run_ok(&["--threads", "1", "sweep-noise", "--k", "1", "--judge", "both"]);
    let (four, _) = run_ok(&["--threads", "4", "sweep-noise", "--k", "1", "--judge", "both"]);
    assert_eq!(one, four);
}

#[test]
fn demo_prints_one_ok_line_per_digit() {
    let (payload, manifest) = run_ok(&["demo"]);
    let lines: Vec<&str> = payload.lines().collect();
    let expected: Vec<String> = (0..6).map(|d| format!("digit={d} winner={d} OK")).collect();
    assert_eq!(lines, expected);

    assert_eq!(manifest["command"], "spikebar demo");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["outputs"], serde_json::json!([]));
    let digest = manifest["config_sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
}

#[test]
fn clean_sweep_summary_is_perfect_for_both_judges() {
    let (payload, _) = run_ok(&["sweep-noise", "--k", "0", "--judge", "both"]);
    let summary: Value = serde_json::from_str(&payload).unwrap();
    assert_eq!(summary["k"], 0);
    assert_eq!(summary["total"], 6);
    for judge in ["oracle", "circuit"] {
        assert_eq!(summary[judge]["correct"], 6, "{judge} correct count");
        assert_eq!(summary[judge]["rate_pct"], 100.0, "{judge} rate");
    }
}

#[test]
fn one_hertz_record_reports_the_boundary_and_low_label() {
    let dir = tempfile::tempdir().unwrap();
    let ecg = write_ecg_fixture(dir.path());
    let (payload, _) = run_ok(&["hr-classify", "--ecg", &ecg]);
    let v: Value = serde_json::from_str(&payload).unwrap();

    assert_eq!(v["label"], "LOW");
    assert_eq!(v["f_hz"], 1.0);
    assert!(v["dw1"].as_f64().unwrap() < 0.0);
    assert!(v["dw2"].as_f64().unwrap() < 0.0);
    assert!((v["theta_low_hz"].as_f64().unwrap() - 1.0102).abs() < 1e-3);
    assert!((v["theta_high_hz"].as_f64().unwrap() - 1.6419).abs() < 1e-3);
    let warning = v["warning"].as_str().expect("boundary rate warns");
    assert!(warning.contains("2%"), "unexpected warning: {warning}");
}

#[test]
fn train_then_infer_recovers_every_digit() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv").display().to_string();
    run_ok(&["train", "--out", &w]);

    for d in 0..6 {
        let (payload, _) = run_ok(&["infer", "--weights", &w, "--pattern", &d.to_string()]);
        let v: Value = serde_json::from_str(&payload).unwrap();
        assert_eq!(v["winner"], d, "digit {d}");
        assert_eq!(v["tie"], false, "digit {d}");
    }

    // An explicit corpus file holding the same font trains identical weights.
    let corpus_text: String = DigitCorpus::canonical()
        .patterns()
        .iter()
        .map(|p| p.to_bits() + "\n")
        .collect();
    let corpus = dir.path().join("font.txt").display().to_string();
    fs::write(&corpus, corpus_text).unwrap();
    let w2 = dir.path().join("w2.csv").display().to_string();
    run_ok(&["train", "--corpus", &corpus, "--out", &w2]);
    assert_eq!(fs::read(&w).unwrap(), fs::read(&w2).unwrap());
}

#[test]
fn curve_csvs_are_well_formed() {
    let (payload, _) = run_ok(&["stdp-curve", "--dt-range", "-2e-6:2e-6:5"]);
    let rows: Vec<&str> = payload.lines().collect();
    assert_eq!(rows[0], "delta_t_s,delta_w");
    assert_eq!(rows.len(), 6);
    let w_of = |row: &str| row.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!(w_of(rows[1]) < 0.0, "pre-after-post depresses");
    assert_eq!(w_of(rows[3]), 0.0, "coincidence is neutral");
    assert!(w_of(rows[5]) > 0.0, "pre-before-post potentiates");

    let (payload, _) = run_ok(&["bcm-curve", "--theta", "1", "--freqs", "0.5:1.6:2"]);
    let rows: Vec<&str> = payload.lines().collect();
    assert_eq!(rows[0], "freq_hz,drift_per_s");
    assert_eq!(rows.len(), 3);
    assert!(w_of(rows[1]) < 0.0, "below threshold drifts down");
    assert!(w_of(rows[2]) > 0.0, "above threshold drifts up");
}

#[test]
fn manifests_record_outputs_and_config_digest() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv").display().to_string();
    let (payload, manifest) = run_ok(&["train", "--out", &w]);
    assert!(payload.is_empty(), "file-routed output leaves stdout to the manifest");
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1);
    assert_eq!(outputs[0]["path"], w.as_str());
    assert_eq!(outputs[0]["sha256"], sha256_hex(&fs::read(&w).unwrap()));

    let s = dir.path().join("s.json").display().to_string();
    let c = dir.path().join("c.csv").display().to_string();
    let (payload, sweep_man) =
        run_ok(&["sweep-noise", "--k", "0", "--judge", "oracle", "--out", &s, "--out-cases", &c]);
    assert!(payload.is_empty());
    let outputs = sweep_man["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    assert_eq!(outputs[0]["path"], s.as_str());
    assert_eq!(outputs[1]["path"], c.as_str());
    let cases = fs::read_to_string(&c).unwrap();
    assert!(cases.starts_with("digit,flips,oracle,oracle_correct"));
    assert_eq!(cases.lines().count(), 7);

    // Same resolved config => same digest, across commands.
    assert_eq!(manifest["config_sha256"], sweep_man["config_sha256"]);
    // A different seed is a different resolved config.
    let (_, seeded) = run_ok(&["--seed", "7", "demo"]);
    assert_eq!(seeded["seed"], 7);
    assert_ne!(seeded["config_sha256"], manifest["config_sha256"]);
}

#[test]
fn exit_codes_distinguish_config_input_and_internal_errors() {
    let dir = tempfile::tempdir().unwrap();

    let check = |args: &[&str], code: i32, kind: Option<&str>| {
        let out = run(args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        if let Some(kind) = kind {
            let stderr = String::from_utf8_lossy(&out.stderr);
            let tag = format!("error kind={kind} msg=");
            assert!(stderr.starts_with(&tag), "{args:?} stderr: {stderr}");
            assert_eq!(stderr.lines().count(), 1, "{args:?} stderr is one line");
        }
    };

    check(&["--config", "/nonexistent.toml", "demo"], 1, Some("config"));

    let bad = dir.path().join("bad.toml").display().to_string();
    fs::write(&bad, "nonsense = true\n").unwrap();
    check(&["--config", &bad, "demo"], 1, Some("config"));

    check(&["stdp-curve", "--dt-range", "1:0:5"], 1, Some("config"));
    check(&["bcm-curve", "--freqs", "0:1:3"], 1, Some("config"));

    check(&["infer", "--weights", "/nonexistent.csv", "--pattern", "0"], 2, Some("input"));

    let flat = dir.path().join("flat.csv").display().to_string();
    fs::write(&flat, EcgRecord::new(100.0, vec![0.0; 300]).unwrap().to_csv()).unwrap();
    check(&["hr-classify", "--ecg", &flat], 2, Some("input"));

    // A summing stage too weak to ever fire an output neuron trains without
    // error but recognises nothing: an internal sanity failure.
    let dead = dir.path().join("dead.toml").display().to_string();
    fs::write(&dead, "[network]\nsumming_gain = 1.0\n").unwrap();
    let out = run(&["--config", &dead, "demo"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error kind=internal msg="));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("FAIL").count(), 6, "failed demo still shows its lines");

    // Usage errors and help/version are clap's domain.
    check(&["frobnicate"], 1, None);
    check(&["sweep-noise", "--k", "9"], 1, None);
    check(&["--help"], 0, None);
    check(&["--version"], 0, None);
}

#[test]
fn help_covers_every_flag_and_subcommand() {
    let mut cmd = spikebar_cli::command();
    cmd.build();

    let mut problems = Vec::new();
    fn walk(cmd: &clap::Command, path: &str, problems: &mut Vec<String>) {
        for arg in cmd.get_arguments() {
            if arg.is_hide_set() {
                problems.push(format!("{path}: hidden argument {}", arg.get_id()));
            }
            if arg.get_help().is_none() {
                problems.push(format!("{path}: undocumented argument {}", arg.get_id()));
            }
        }
        for sub in cmd.get_subcommands() {
            if sub.get_name() == "help" {
                continue;
            }
            if sub.get_about().is_none() {
                problems.push(format!("{path}: undocumented subcommand {}", sub.get_name()));
            }
            walk(sub, &format!("{path} {}", sub.get_name()), problems);
        }
    }
    walk(&cmd, "spikebar", &mut problems);
    assert!(problems.is_empty(), "help surface gaps: {problems:#?}");

    let mut names: Vec<&str> = cmd
        .get_subcommands()
        .map(|c| c.get_name())
        .filter(|n| *n != "help")
        .collect();
    names.sort_unstable();
    assert_eq!(
        names,
        ["bcm-curve", "demo", "hr-classify", "infer", "perturb", "stdp-curve", "sweep-noise", "train"]
    );
}

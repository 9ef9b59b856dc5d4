//! Command-line surface. Every flag is documented here; the help-audit test
//! walks this tree and fails on any undocumented or hidden argument.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use spikebar_core::tasks::ecg::HrMode;
use spikebar_core::tasks::sweep::Judge;

/// Deterministic simulator of a spiking crossbar classifier.
///
/// Every command is a pure function of the config file, the input files and
/// the seed; rerunning it reproduces the output byte for byte. The last
/// stdout line is always a JSON run manifest. Environment variables are
/// never consulted.
#[derive(Debug, Parser)]
#[command(name = "spikebar", version, propagate_version = true)]
pub struct Cli {
    /// TOML config overriding the built-in defaults (omit for defaults).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Override the RNG seed from the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Worker threads for sweeps; 0 means one per core. Results do not
    /// depend on this.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Train the crossbar on a pattern corpus and write the weight matrix.
    Train {
        /// Corpus file: one row of '0'/'1' pixels per pattern (defaults to
        /// the built-in digit font).
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,

        /// Destination CSV for the trained weight voltages.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },

    /// Classify one pattern with a previously trained weight matrix.
    Infer {
        /// Weight CSV produced by `train`.
        #[arg(long, value_name = "FILE")]
        weights: PathBuf,

        /// Corpus digit index (e.g. 3) or a literal pixel bitstring
        /// (e.g. 111101101101111).
        #[arg(long, value_name = "PATTERN")]
        pattern: String,

        /// Corpus file used to resolve a digit-index pattern.
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
    },

    /// Classify every k-flip corruption of every corpus pattern.
    SweepNoise {
        /// Number of flipped pixels per case.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
        k: u8,

        /// Which classifier(s) to consult.
        #[arg(long, value_enum, default_value_t = JudgeArg::Both)]
        judge: JudgeArg,

        /// Write the JSON summary here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,

        /// Also write the per-case CSV table here.
        #[arg(long, value_name = "FILE")]
        out_cases: Option<PathBuf>,

        /// Corpus file (defaults to the built-in digit font).
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
    },

    /// Sample the pair-timing weight-update curve as CSV.
    StdpCurve {
        /// Sample grid start:end:count over the pre-to-post delay in
        /// seconds; the start is usually negative.
        #[arg(long, value_name = "A:B:N", allow_hyphen_values = true, default_value = "-5e-6:5e-6:101")]
        dt_range: String,

        /// Write the CSV here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },

    /// Sample weight drift against firing rate for one threshold unit.
    BcmCurve {
        /// Threshold unit: 1 (lower rate threshold) or 2 (upper).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 1)]
        theta: u8,

        /// Frequency grid start:end:count in Hz.
        #[arg(long, value_name = "A:B:N", default_value = "0.2:4:24")]
        freqs: String,

        /// Write the CSV here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },

    /// Detect beats in an ECG record and classify the heart rate.
    HrClassify {
        /// ECG CSV with time_s,amplitude_mv columns (time_s optional when
        /// --sample-rate is given).
        #[arg(long, value_name = "FILE")]
        ecg: PathBuf,

        /// Drift evaluation mode: analytic or simulated (defaults to the
        /// config setting).
        #[arg(long, value_name = "MODE")]
        mode: Option<HrMode>,

        /// Sample rate in Hz for records without a time column.
        #[arg(long, value_name = "HZ")]
        sample_rate: Option<f64>,
    },

    /// Measure clean-digit survival under random parameter perturbation.
    Perturb {
        /// Relative half-width of the perturbation, at most 0.3.
        #[arg(long)]
        pct: f64,

        /// Number of independently perturbed systems to score.
        #[arg(long, default_value_t = 100)]
        seeds: usize,

        /// Corpus file (defaults to the built-in digit font).
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
    },

    /// Train on the built-in digits and re-infer each one.
    Demo,
}

/// `--judge` values, mapped onto the core sweep judge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JudgeArg {
    Oracle,
    Circuit,
    Both,
}

impl From<JudgeArg> for Judge {
    fn from(j: JudgeArg) -> Judge {
        match j {
            JudgeArg::Oracle => Judge::Oracle,
            JudgeArg::Circuit => Judge::Circuit,
            JudgeArg::Both => Judge::Both,
        }
    }
}

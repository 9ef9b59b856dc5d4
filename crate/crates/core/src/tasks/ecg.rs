//! ECG ingestion, beat detection, and the rate-based heart-rate classifier.
//!
//! The classifier holds two threshold units. Each unit is the same pair-based
//! plasticity rule operated in its rate-sensitive regime: weights drift down
//! when the input rate sits below the unit's threshold frequency and up when
//! it sits above. Unit 1 is tuned near the lower safe heart-rate limit
//! (~60 bpm) and unit 2 near the upper one (~100 bpm), so the sign pair
//! (Δw₁, Δw₂) separates LOW / NORMAL / HIGH.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{seeded_rng, SpikeTrain};
use crate::synapse::{bcm_drift, bcm_theta, PairingProtocol, StdpParams, WeightMap};
use crate::{Error, Result};

/// Uniformly sampled single-lead ECG signal.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    sample_rate: f64,
    samples: Vec<f64>,
    label: Option<String>,
}

impl EcgRecord {
    /// Sample rate in Hz, amplitudes in millivolts. Rate estimation needs at
    /// least 2 s of signal, shorter records are rejected.
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        if !sample_rate.is_finite() || sample_rate <= 0.0 {
            return Err(Error::input(format!("sample rate must be positive, got {sample_rate}")));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::input("record contains a non-finite sample"));
        }
        let r = EcgRecord { sample_rate, samples, label: None };
        if r.duration() < 2.0 {
            return Err(Error::input(format!(
                "record is {:.3} s long; rate estimation needs at least 2 s",
                r.duration()
            )));
        }
        Ok(r)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Parses a headered CSV export with columns `time_s,amplitude_mv`.
    ///
    /// The sample rate is derived from the time column unless `sample_rate`
    /// overrides it; with an override the time column may be absent entirely.
    pub fn from_csv(text: &str, sample_rate: Option<f64>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::input(format!("bad CSV header: {e}")))?;
        let col = |name: &str| headers.iter().position(|h| h == name);
        let time_col = col("time_s");
        let amp_col = col("amplitude_mv")
            .ok_or_else(|| Error::input("CSV is missing an amplitude_mv column"))?;

        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::input(format!("bad CSV row {}: {e}", n + 2)))?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::input(format!("CSV row {} is too short", n + 2)))?
                    .parse::<f64>()
                    .map_err(|e| Error::input(format!("CSV row {}: {e}", n + 2)))
            };
            samples.push(field(amp_col)?);
            if sample_rate.is_none() {
                let i = time_col
                    .ok_or_else(|| Error::input("CSV has no time_s column and no sample rate was supplied"))?;
                times.push(field(i)?);
            }
        }

        let rate = match sample_rate {
            Some(r) => r,
            None => {
                if times.len() < 2 {
                    return Err(Error::input("need at least two rows to derive a sample rate"));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::input("time_s column is not strictly increasing"));
                }
                (times.len() - 1) as f64 / (times[times.len() - 1] - times[0])
            }
        };
        EcgRecord::new(rate, samples)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,amplitude_mv\n");
        for (i, s) in self.samples.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i as f64 / self.sample_rate, s));
        }
        out
    }
}

/// Synthesizes a clean ECG-like record: one unit-amplitude Gaussian pulse
/// (σ = 20 ms) per beat at a steady `rate_hz`, beats centred at
/// `(k + 1/2) / rate_hz`.
pub fn synth_ecg(rate_hz: f64, duration: f64, sample_rate: f64) -> Result<EcgRecord> {
    if !rate_hz.is_finite() || rate_hz <= 0.0 {
        return Err(Error::input(format!("beat rate must be positive, got {rate_hz}")));
    }
    if !duration.is_finite() || duration <= 0.0 || !sample_rate.is_finite() || sample_rate <= 0.0 {
        return Err(Error::input("duration and sample rate must be positive"));
    }
    const SIGMA: f64 = 0.02;
    let n = (duration * sample_rate).ceil() as usize;
    let mut samples = vec![0.0; n];
    let mut k = 0usize;
    loop {
        let t_beat = (k as f64 + 0.5) / rate_hz;
        if t_beat > duration {
            break;
        }
        // Only the ±5σ neighbourhood of a pulse is numerically relevant.
        let lo = ((t_beat - 5.0 * SIGMA) * sample_rate).floor().max(0.0) as usize;
        let hi = (((t_beat + 5.0 * SIGMA) * sample_rate).ceil() as usize).min(n.saturating_sub(1));
        for (off, s) in samples[lo..=hi].iter_mut().enumerate() {
            let dt = (lo + off) as f64 / sample_rate - t_beat;
            *s += (-0.5 * (dt / SIGMA).powi(2)).exp();
        }
        k += 1;
    }
    EcgRecord::new(sample_rate, samples)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Detects one spike per heartbeat.
///
/// The rectified signal is thresholded at median + 2·MAD (data-relative, so
/// the detector is invariant under positive amplitude scaling); each
/// above-threshold run contributes its largest sample (earliest wins a tie)
/// as a candidate peak, and candidates within 250 ms of an accepted beat are
/// discarded as refractory.
pub fn detect_beats(r: &EcgRecord) -> Result<SpikeTrain> {
    const REFRACTORY: f64 = 0.25;

    let rect: Vec<f64> = r.samples.iter().map(|s| s.abs()).collect();
    let mut sorted = rect.clone();
    sorted.sort_by(f64::total_cmp);
    let med = median(&sorted);
    let mut dev: Vec<f64> = rect.iter().map(|x| (x - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let threshold = med + 2.0 * median(&dev);

    let mut times = Vec::new();
    let mut i = 0;
    while i < rect.len() {
        if rect[i] <= threshold {
            i += 1;
            continue;
        }
        let start = i;
        while i < rect.len() && rect[i] > threshold {
            i += 1;
        }
        let peak = (start..i)
            .max_by(|&a, &b| rect[a].total_cmp(&rect[b]).then(b.cmp(&a)))
            .expect("run is nonempty");
        let t = peak as f64 / r.sample_rate;
        if times.last().is_none_or(|&last| t - last >= REFRACTORY) {
            times.push(t);
        }
    }
    if times.is_empty() {
        return Err(Error::input("no beats detected"));
    }
    SpikeTrain::new(times, 1e-3)
}

/// Mean beat rate in Hz from first to last spike.
pub fn beat_rate_hz(beats: &SpikeTrain) -> Result<f64> {
    let t = beats.times();
    if t.len() < 2 {
        return Err(Error::input("rate estimation needs at least two beats"));
    }
    Ok((t.len() - 1) as f64 / (t[t.len() - 1] - t[0]))
}

/// Plasticity curve parameters of one threshold unit. `a_minus` carries its
/// sign (negative for depression).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcmParams {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
}

impl BcmParams {
    /// Unit tuned so its threshold sits near 1 Hz (60 bpm).
    pub fn low() -> Self {
        BcmParams { a_plus: 0.267, a_minus: -0.175, tau_plus: 0.7, tau_minus: 1.7 }
    }

    /// Unit tuned so its threshold sits near 1.667 Hz (100 bpm).
    pub fn high() -> Self {
        BcmParams { a_plus: 0.19, a_minus: -0.138, tau_plus: 0.7, tau_minus: 1.7 }
    }

    /// Threshold frequency separating depression from potentiation.
    pub fn theta(&self) -> Result<f64> {
        bcm_theta(self.a_plus, self.a_minus, self.tau_plus, self.tau_minus)
    }

    fn rate_curve(&self) -> Result<StdpParams> {
        let p = StdpParams::rate_curve(self.a_plus, -self.a_minus, self.tau_plus, self.tau_minus);
        p.validate()?;
        Ok(p)
    }
}

/// How the weight drifts are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HrMode {
    /// Closed-form drift sign `f·(f − θ)` per unit.
    #[default]
    Analytic,
    /// Event-driven drift of each unit under spike trains at the beat rate.
    Simulated,
}

impl fmt::Display for HrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HrMode::Analytic => "analytic",
            HrMode::Simulated => "simulated",
        })
    }
}

impl FromStr for HrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(HrMode::Analytic),
            "simulated" => Ok(HrMode::Simulated),
            other => Err(Error::config(format!(
                "unknown mode {other:?}, expected \"analytic\" or \"simulated\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HrLabel {
    Low,
    Normal,
    High,
}

impl fmt::Display for HrLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HrLabel::Low => "LOW",
            HrLabel::Normal => "NORMAL",
            HrLabel::High => "HIGH",
        })
    }
}

/// The two threshold units plus the evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrClassifierConfig {
    pub theta_low: BcmParams,
    pub theta_high: BcmParams,
    pub mode: HrMode,
}

impl Default for HrClassifierConfig {
    fn default() -> Self {
        HrClassifierConfig {
            theta_low: BcmParams::low(),
            theta_high: BcmParams::high(),
            mode: HrMode::Analytic,
        }
    }
}

impl HrClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        let lo = self.theta_low.theta().map_err(|e| Error::config(format!("theta_low: {e}")))?;
        let hi = self.theta_high.theta().map_err(|e| Error::config(format!("theta_high: {e}")))?;
        if lo >= hi {
            return Err(Error::config(format!(
                "threshold ordering violated: theta_low = {lo} Hz must be below theta_high = {hi} Hz"
            )));
        }
        Ok(())
    }
}

/// Classification result with everything needed to audit it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HrOutcome {
    pub f_hz: f64,
    pub bpm: f64,
    pub theta_low_hz: f64,
    pub theta_high_hz: f64,
    pub dw1: f64,
    pub dw2: f64,
    pub label: HrLabel,
    pub mode: HrMode,
    pub warning: Option<String>,
}

/// Event window for simulated drifts: long enough that Poisson sampling
/// noise stays far below the drift magnitude at any rate of interest.
const SIM_WINDOW: f64 = 2e4;

/// Labels a beat train LOW / NORMAL / HIGH from the drift signs of the two
/// threshold units.
///
/// NORMAL requires strict potentiation in unit 1 and strict depression in
/// unit 2; an exactly-zero drift is a boundary and resolves away from NORMAL
/// with a warning. Rates within 2% of either threshold also warn. Requires
/// at least 10 beats. `seed` matters only in simulated mode.
pub fn classify_heart_rate(
    hr: &HrClassifierConfig,
    beats: &SpikeTrain,
    seed: u64,
) -> Result<HrOutcome> {
    hr.validate()?;
    if beats.len() < 10 {
        return Err(Error::input(format!(
            "classification needs at least 10 beats, got {}",
            beats.len()
        )));
    }
    let f = beat_rate_hz(beats)?;
    let theta_low = hr.theta_low.theta()?;
    let theta_high = hr.theta_high.theta()?;

    let (dw1, dw2) = match hr.mode {
        HrMode::Analytic => (f * (f - theta_low), f * (f - theta_high)),
        HrMode::Simulated => {
            let map = WeightMap::unclamped();
            let drift = |p: &BcmParams, stream: u64| -> Result<f64> {
                let mut rng = seeded_rng(seed, stream);
                bcm_drift(&p.rate_curve()?, &map, f, PairingProtocol::Poisson, SIM_WINDOW, &mut rng)
            };
            (drift(&hr.theta_low, 3_000_000)?, drift(&hr.theta_high, 3_000_001)?)
        }
    };

    if dw1 < 0.0 && dw2 > 0.0 {
        return Err(Error::invariant(format!(
            "depression in the low unit with potentiation in the high unit at {f} Hz \
             contradicts theta_low < theta_high"
        )));
    }
    let label = if dw2 >= 0.0 {
        HrLabel::High
    } else if dw1 > 0.0 {
        HrLabel::Normal
    } else {
        HrLabel::Low
    };

    let proximity = (f / theta_low - 1.0).abs().min((f / theta_high - 1.0).abs());
    let warning = if dw1 == 0.0 || dw2 == 0.0 {
        Some("zero weight drift at a threshold boundary; label resolved away from NORMAL".into())
    } else if proximity < 0.02 {
        Some(format!("beat rate {f:.4} Hz lies within 2% of a classifier threshold"))
    } else {
        None
    };

    Ok(HrOutcome {
        f_hz: f,
        bpm: 60.0 * f,
        theta_low_hz: theta_low,
        theta_high_hz: theta_high,
        dw1,
        dw2,
        label,
        mode: hr.mode,
        warning,
    })
}

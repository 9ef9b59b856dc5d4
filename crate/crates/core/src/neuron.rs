//! Behavioral leaky integrate-and-fire neuron.
//!
//! The membrane integrates a rectified-linear input current on a capacitance
//! with a constant leak, fires when it crosses a regenerative (Schmitt)
//! threshold, then resets and holds through a refractory window. Spikes are
//! ideal rectangular pulses from 0 to the supply rail. An inhibit input
//! forces the membrane back to the reset level within one step.

use crate::engine::{Bus, Component, SpikeTrain};
use crate::{Error, Result};

/// Electrical constants of one neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    /// Membrane capacitance (farads).
    pub c_u: f64,
    /// Input transconductance (amperes per volt above `v_onset`).
    pub i_gain: f64,
    /// Input activation threshold (volts); drive below it injects nothing.
    pub v_onset: f64,
    /// Constant leak current (amperes).
    pub i_leak: f64,
    /// Firing threshold (volts).
    pub v_sv: f64,
    /// Post-spike membrane voltage (volts).
    pub v_reset: f64,
    /// Output pulse width (seconds).
    pub spike_width: f64,
    /// Refractory time after the pulse (seconds).
    pub t_refr: f64,
    /// Supply rail (volts); also the output pulse level.
    pub v_dd: f64,
}

impl LifParams {
    /// Front-end neuron defaults: rate-codes a constant pixel voltage into
    /// roughly two pulses per 10 µs at full drive, silent below 0.5 V.
    pub fn input() -> Self {
        LifParams {
            c_u: 1e-13,
            i_gain: 4.4e-8,
            v_onset: 0.5,
            i_leak: 5.72e-10, // 1% of full-scale drive
            v_sv: 1.2,
            v_reset: 0.2,
            spike_width: 2e-7,
            t_refr: 1e-7,
            v_dd: 1.8,
        }
    }

    /// Decision-layer neuron defaults: no activation threshold and no leak,
    /// so charge integrated from brief input bursts is held between them,
    /// and a transconductance sized to fire within a few bursts.
    pub fn output() -> Self {
        LifParams { i_gain: 7e-7, v_onset: 0.0, i_leak: 0.0, ..LifParams::input() }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c_u", self.c_u),
            ("i_gain", self.i_gain),
            ("v_onset", self.v_onset),
            ("i_leak", self.i_leak),
            ("v_sv", self.v_sv),
            ("v_reset", self.v_reset),
            ("spike_width", self.spike_width),
            ("t_refr", self.t_refr),
            ("v_dd", self.v_dd),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::config(format!("neuron {name} must be finite, got {v}")));
            }
        }
        if self.c_u <= 0.0 || self.i_gain <= 0.0 || self.spike_width <= 0.0 {
            return Err(Error::config(
                "neuron c_u, i_gain and spike_width must all be positive",
            ));
        }
        if !(0.0 < self.v_reset && self.v_reset < self.v_sv && self.v_sv < self.v_dd) {
            return Err(Error::config(format!(
                "neuron levels must satisfy 0 < v_reset < v_sv < v_dd, got {} / {} / {}",
                self.v_reset, self.v_sv, self.v_dd
            )));
        }
        if self.v_onset < 0.0 || self.i_leak < 0.0 || self.t_refr < 0.0 {
            return Err(Error::config("neuron v_onset, i_leak and t_refr must be non-negative"));
        }
        Ok(())
    }
}

impl Default for LifParams {
    fn default() -> Self {
        LifParams::input()
    }
}

/// Mutable state of one neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifState {
    /// Membrane voltage (volts).
    pub v_u: f64,
    /// Time of the last spike onset, if any (seconds).
    pub t_last_spike: Option<f64>,
    /// Remaining output pulse time (seconds); the output is high while this
    /// exceeds half a step.
    pub emitting: f64,
}

impl LifState {
    pub fn new(p: &LifParams) -> Self {
        LifState { v_u: p.v_reset, t_last_spike: None, emitting: 0.0 }
    }

    /// Whether the output pulse is high during the step that produced this
    /// state. The half-step threshold absorbs float residue when the pulse
    /// width is not an exact multiple of dt.
    pub fn output_high(&self, dt: f64) -> bool {
        self.emitting > 0.5 * dt
    }
}

/// Advances one neuron by a single step ending at `t_end`.
///
/// Order of precedence: inhibit (membrane and pulse reset, no onset), then
/// the refractory hold spanning the pulse plus `t_refr` after an onset, then
/// leaky integration with the onset check. The membrane never falls below
/// `v_reset`: the leak pulls toward the reset level, not below it.
pub fn lif_step(
    p: &LifParams,
    s: &LifState,
    v_ff: f64,
    inhibit: bool,
    t_end: f64,
    dt: f64,
) -> (LifState, bool) {
    let mut next = *s;
    next.emitting = (next.emitting - dt).max(0.0);

    if inhibit {
        next.v_u = p.v_reset;
        next.emitting = 0.0;
        return (next, false);
    }

    let refractory = s
        .t_last_spike
        .is_some_and(|t0| t_end - t0 <= p.spike_width + p.t_refr + 0.5 * dt);
    if refractory {
        next.v_u = p.v_reset;
        return (next, false);
    }

    let drive = p.i_gain * (v_ff.clamp(0.0, p.v_dd) - p.v_onset).max(0.0);
    let v_new = (s.v_u + dt * (drive - p.i_leak) / p.c_u).clamp(p.v_reset, p.v_dd);
    if s.v_u < p.v_sv && p.v_sv <= v_new {
        next.v_u = p.v_reset;
        next.t_last_spike = Some(t_end);
        next.emitting = p.spike_width;
        (next, true)
    } else {
        next.v_u = v_new;
        (next, false)
    }
}

/// Strength ratios of the regenerative threshold stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchmittDesign {
    /// Pull ratio of the inverting pair.
    pub r: f64,
    /// Strength ratio of the feedback device to the inverting pair.
    pub r_n: f64,
    /// Supply rail (volts).
    pub v_dd: f64,
    /// Device threshold voltage (volts).
    pub v_th: f64,
}

impl SchmittDesign {
    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0 && self.r_n.is_finite() && self.r_n > 0.0) {
            return Err(Error::config(format!(
                "threshold-stage ratios must be positive, got r={} r_n={}",
                self.r, self.r_n
            )));
        }
        if !(self.v_th >= 0.0 && self.v_th < self.v_dd) {
            return Err(Error::config(format!(
                "device threshold must lie in [0, v_dd), got {} with v_dd={}",
                self.v_th, self.v_dd
            )));
        }
        Ok(())
    }
}

impl Default for SchmittDesign {
    fn default() -> Self {
        SchmittDesign { r: 1.0, r_n: 1.0, v_dd: 1.8, v_th: 0.0 }
    }
}

/// Switching voltage of the regenerative stage:
///
/// ```text
/// v_sv = v_dd·(r_n+1)/(r_n·(r+1)+1) + v_th·(r_n·(2r−1)−1)/(r_n·(r−1)+1)
/// ```
///
/// Errors when a denominator vanishes (the second one can, for r < 1).
pub fn schmitt_threshold(d: &SchmittDesign) -> Result<f64> {
    d.validate()?;
    let den1 = d.r_n * (d.r + 1.0) + 1.0;
    let den2 = d.r_n * (d.r - 1.0) + 1.0;
    if den1.abs() < 1e-12 {
        return Err(Error::config(format!(
            "threshold stage is singular: r_n(r+1)+1 = 0 at r={} r_n={}",
            d.r, d.r_n
        )));
    }
    if den2.abs() < 1e-12 {
        return Err(Error::config(format!(
            "threshold stage is singular: r_n(r-1)+1 = 0 at r={} r_n={}",
            d.r, d.r_n
        )));
    }
    Ok(d.v_dd * (d.r_n + 1.0) / den1 + d.v_th * (d.r_n * (2.0 * d.r - 1.0) - 1.0) / den2)
}

/// Maps a binary pixel to its drive voltage.
pub fn encode_pixel(black: bool, v_black: f64, v_white: f64) -> f64 {
    if black {
        v_black
    } else {
        v_white
    }
}

/// Simulates one neuron under a constant drive and returns its spike train.
pub fn constant_drive_train(
    p: &LifParams,
    v_ff: f64,
    duration: f64,
    dt: f64,
) -> Result<SpikeTrain> {
    p.validate()?;
    if !(dt > 0.0 && duration >= 0.0) {
        return Err(Error::config("constant_drive_train needs dt > 0 and duration >= 0"));
    }
    let steps = (duration / dt).round() as u64;
    let mut s = LifState::new(p);
    let mut times = Vec::new();
    for k in 1..=steps {
        let t_end = k as f64 * dt;
        let (next, onset) = lif_step(p, &s, v_ff, false, t_end, dt);
        if onset {
            times.push(t_end);
        }
        s = next;
    }
    SpikeTrain::new(times, p.spike_width)
}

/// A neuron driven by a named bus signal, for use under the engine runner.
pub struct LifComponent {
    id: String,
    input: String,
    params: LifParams,
    state: LifState,
    onset: bool,
}

impl LifComponent {
    pub fn new(id: impl Into<String>, input: impl Into<String>, params: LifParams) -> Result<Self> {
        params.validate()?;
        let state = LifState::new(&params);
        Ok(LifComponent { id: id.into(), input: input.into(), params, state, onset: false })
    }

    pub fn state(&self) -> &LifState {
        &self.state
    }
}

impl Component for LifComponent {
    fn id(&self) -> &str {
        &self.id
    }

    fn step(&mut self, t_end: f64, dt: f64, bus: &Bus) -> Result<f64> {
        let v_ff = bus.read(&self.input)?;
        let (next, onset) = lif_step(&self.params, &self.state, v_ff, false, t_end, dt);
        self.state = next;
        self.onset = onset;
        Ok(if self.state.output_high(dt) { self.params.v_dd } else { 0.0 })
    }

    fn spike_onset(&self) -> bool {
        self.onset
    }

    fn pulse_width(&self) -> Option<f64> {
        Some(self.params.spike_width)
    }
}

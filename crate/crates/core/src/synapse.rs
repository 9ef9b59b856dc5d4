//! Memristive synapse with pair-based spike-timing plasticity.
//!
//! Each synapse keeps a gate-voltage weight state on a hold capacitor and two
//! exponentially decaying traces. A post spike samples the pre trace and
//! potentiates; a pre spike samples the post trace and depresses. Pairing is
//! nearest-neighbour: every arrival resets its own trace, discarding older
//! history. Weight maps linearly onto conductance between the high- and
//! low-resistance endpoints. A rate-based mode measures the net drift of the
//! same state machine under stochastic trains, which reproduces a
//! threshold-frequency (BCM-style) learning curve.

use rand::Rng;

use crate::{Error, Result};

/// Plasticity constants of one synapse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpParams {
    /// Potentiation trace amplitude (volts).
    pub a_plus: f64,
    /// Depression trace amplitude (volts, magnitude).
    pub a_minus: f64,
    /// Pre-trace decay time constant (seconds).
    pub tau_plus: f64,
    /// Post-trace decay time constant (seconds).
    pub tau_minus: f64,
    /// Sampling transconductance (amperes per volt).
    pub g_m: f64,
    /// Weight-hold capacitor (farads).
    pub c_1: f64,
    /// Sampling-switch closure time (seconds).
    pub t_pulse: f64,
    /// Common-mode reference (volts).
    pub v_cm: f64,
    /// Pairing window for potentiation (seconds); wider gaps contribute nothing.
    pub t_max_pot: f64,
    /// Pairing window for depression (seconds).
    pub t_max_dep: f64,
}

impl StdpParams {
    /// Scale factor from a sampled trace voltage to a weight change.
    pub fn update_gain(&self) -> f64 {
        self.g_m * self.t_pulse / self.c_1
    }

    /// A unit-gain instance for rate-curve work: amplitudes are dimensionless
    /// curve parameters and the weight change per pairing equals the sampled
    /// trace directly.
    pub fn rate_curve(a_plus: f64, a_minus_mag: f64, tau_plus: f64, tau_minus: f64) -> Self {
        StdpParams {
            a_plus,
            a_minus: a_minus_mag,
            tau_plus,
            tau_minus,
            g_m: 1.0,
            c_1: 1.0,
            t_pulse: 1.0,
            v_cm: 0.9,
            t_max_pot: 5.0 * tau_plus,
            t_max_dep: 5.0 * tau_minus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("a_plus", self.a_plus),
            ("a_minus", self.a_minus),
            ("tau_plus", self.tau_plus),
            ("tau_minus", self.tau_minus),
            ("g_m", self.g_m),
            ("c_1", self.c_1),
            ("t_pulse", self.t_pulse),
            ("t_max_pot", self.t_max_pot),
            ("t_max_dep", self.t_max_dep),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("synapse {name} must be positive, got {v}")));
            }
        }
        if !self.v_cm.is_finite() || self.v_cm < 0.0 {
            return Err(Error::config(format!("synapse v_cm must be non-negative, got {}", self.v_cm)));
        }
        Ok(())
    }
}

impl Default for StdpParams {
    fn default() -> Self {
        StdpParams {
            a_plus: 1.8,
            a_minus: 1.8,
            tau_plus: 1e-6,
            tau_minus: 1e-6,
            g_m: 1.8e-5,
            c_1: 1e-12,
            t_pulse: 1.8e-8,
            v_cm: 0.9,
            t_max_pot: 5e-6,
            t_max_dep: 5e-6,
        }
    }
}

/// Linear gate-voltage-to-conductance map anchored at the resistance-state
/// endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightMap {
    /// Gate voltage of the high-resistance state (volts).
    pub v_lo: f64,
    /// Gate voltage of the low-resistance state (volts).
    pub v_hi: f64,
    /// Conductance at `v_lo` (siemens).
    pub g_hrs: f64,
    /// Conductance at `v_hi` (siemens).
    pub g_lrs: f64,
    /// Slope fitted from the endpoints (siemens per volt).
    pub k_gain: f64,
}

impl WeightMap {
    pub fn new(v_lo: f64, v_hi: f64, g_hrs: f64, g_lrs: f64) -> Result<Self> {
        if !(v_lo.is_finite() && v_hi.is_finite() && v_lo < v_hi) {
            return Err(Error::config(format!(
                "weight map needs v_lo < v_hi, got {v_lo} / {v_hi}"
            )));
        }
        if !(g_hrs.is_finite() && g_lrs.is_finite() && 0.0 < g_hrs && g_hrs < g_lrs) {
            return Err(Error::config(format!(
                "weight map needs 0 < g_hrs < g_lrs, got {g_hrs} / {g_lrs}"
            )));
        }
        let k_gain = (g_lrs - g_hrs) / (v_hi - v_lo);
        Ok(WeightMap { v_lo, v_hi, g_hrs, g_lrs, k_gain })
    }

    /// A practically unbounded map for isolated-pair and rate-curve
    /// measurements where the clamp must not engage.
    pub fn unclamped() -> Self {
        WeightMap::new(-1e12, 1e12, 1e-9, 1.0).expect("static endpoints are valid")
    }
}

impl Default for WeightMap {
    fn default() -> Self {
        WeightMap::new(1.0, 1.8, 6.25e-7, 1.0 / 114e3).expect("static endpoints are valid")
    }
}

/// Mutable state of one synapse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseState {
    /// Gate-voltage weight state (volts).
    pub v_g: f64,
    /// Current potentiation trace value (volts).
    pub trace_pre: f64,
    /// Current depression trace value (volts).
    pub trace_post: f64,
    /// Last pre-spike onset (seconds).
    pub t_last_pre: Option<f64>,
    /// Last post-spike onset (seconds).
    pub t_last_post: Option<f64>,
}

impl SynapseState {
    /// Fresh synapse in the high-resistance state.
    pub fn new(map: &WeightMap) -> Self {
        SynapseState {
            v_g: map.v_lo,
            trace_pre: 0.0,
            trace_post: 0.0,
            t_last_pre: None,
            t_last_post: None,
        }
    }

    pub fn with_weight(v_g: f64, map: &WeightMap) -> Result<Self> {
        if !(v_g >= map.v_lo && v_g <= map.v_hi) {
            return Err(Error::invariant(format!(
                "weight {v_g} outside [{}, {}]",
                map.v_lo, map.v_hi
            )));
        }
        Ok(SynapseState { v_g, ..SynapseState::new(map) })
    }
}

/// Decays both traces by `dt` seconds. The weight and spike bookkeeping are
/// untouched.
pub fn decay_traces(s: &SynapseState, p: &StdpParams, dt: f64) -> SynapseState {
    debug_assert!(dt >= 0.0, "trace decay over negative time");
    SynapseState {
        trace_pre: s.trace_pre * (-dt / p.tau_plus).exp(),
        trace_post: s.trace_post * (-dt / p.tau_minus).exp(),
        ..*s
    }
}

/// Registers a pre spike at time `t`: samples the post trace into a
/// depression step, then resets the pre trace to its amplitude.
///
/// The caller must have decayed the traces to `t` (see [`decay_traces`]);
/// pairings wider than `t_max_dep` and exact coincidences contribute nothing.
pub fn on_pre(s: &SynapseState, p: &StdpParams, map: &WeightMap, t: f64) -> SynapseState {
    let mut next = *s;
    if let Some(tp) = s.t_last_post {
        let gap = t - tp;
        if gap > 0.0 && gap <= p.t_max_dep {
            next.v_g = (next.v_g - p.update_gain() * s.trace_post).clamp(map.v_lo, map.v_hi);
        }
    }
    next.trace_pre = p.a_plus;
    next.t_last_pre = Some(t);
    next
}

/// Registers a post spike at time `t`: samples the pre trace into a
/// potentiation step, then resets the post trace to its amplitude.
pub fn on_post(s: &SynapseState, p: &StdpParams, map: &WeightMap, t: f64) -> SynapseState {
    let mut next = *s;
    if let Some(tp) = s.t_last_pre {
        let gap = t - tp;
        if gap > 0.0 && gap <= p.t_max_pot {
            next.v_g = (next.v_g + p.update_gain() * s.trace_pre).clamp(map.v_lo, map.v_hi);
        }
    }
    next.trace_post = p.a_minus;
    next.t_last_post = Some(t);
    next
}

/// Closed-form weight change of one isolated pre/post pair separated by
/// `delta_t` = post − pre (seconds). Positive gaps potentiate, negative gaps
/// depress, coincidence and gaps beyond the pairing windows return zero.
pub fn delta_w_curve(p: &StdpParams, delta_t: f64) -> f64 {
    let k = p.update_gain();
    if delta_t > 0.0 && delta_t <= p.t_max_pot {
        k * p.a_plus * (-delta_t / p.tau_plus).exp()
    } else if delta_t < 0.0 && -delta_t <= p.t_max_dep {
        -k * p.a_minus * (delta_t / p.tau_minus).exp()
    } else {
        0.0
    }
}

/// Conductance of the device at gate voltage `v_g`, linear between the
/// endpoint states. Both endpoints map exactly; the slope form of the upper
/// one would otherwise be a few ulp off, which matters downstream where equal
/// weights must produce bit-identical column sums.
pub fn conductance(map: &WeightMap, v_g: f64) -> Result<f64> {
    if !(v_g >= map.v_lo && v_g <= map.v_hi) {
        return Err(Error::invariant(format!(
            "gate voltage {v_g} outside weight range [{}, {}]",
            map.v_lo, map.v_hi
        )));
    }
    if v_g == map.v_hi {
        return Ok(map.g_lrs);
    }
    Ok(map.g_hrs + map.k_gain * (v_g - map.v_lo))
}

/// Threshold frequency of the rate-based learning mode.
///
/// `a_minus_signed` carries the depression sign explicitly and must be
/// negative; the result is invariant under common scaling of the amplitudes.
pub fn bcm_theta(
    a_plus: f64,
    a_minus_signed: f64,
    tau_plus: f64,
    tau_minus: f64,
) -> Result<f64> {
    if !(a_plus.is_finite() && a_plus > 0.0) {
        return Err(Error::config(format!("a_plus must be positive, got {a_plus}")));
    }
    if !(a_minus_signed.is_finite() && a_minus_signed < 0.0) {
        return Err(Error::config(format!(
            "a_minus carries the depression sign and must be negative, got {a_minus_signed}"
        )));
    }
    if !(tau_plus > 0.0 && tau_minus > 0.0) {
        return Err(Error::config("time constants must be positive"));
    }
    let den = a_plus + a_minus_signed;
    if den == 0.0 {
        return Err(Error::config("amplitudes sum to zero: threshold frequency undefined"));
    }
    Ok(-(a_plus / tau_minus + a_minus_signed / tau_plus) / den)
}

/// How pre and post trains are generated for a drift measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairingProtocol {
    /// Independent Poisson pre and post trains at the same rate.
    Poisson,
    /// Periodic pre train with the post copy shifted by a fixed offset;
    /// fully deterministic.
    PeriodicOffset { offset: f64 },
}

/// Net weight drift per second when pre and post fire at rate `f` for
/// `window` seconds, measured through the full pairing state machine.
///
/// Errors when the window holds fewer than 20 events in total.
pub fn bcm_drift<R: Rng>(
    p: &StdpParams,
    map: &WeightMap,
    f: f64,
    protocol: PairingProtocol,
    window: f64,
    rng: &mut R,
) -> Result<f64> {
    p.validate()?;
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::config(format!("rate must be positive, got {f}")));
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::config(format!("window must be positive, got {window}")));
    }

    let mut pre = Vec::new();
    let mut post = Vec::new();
    match protocol {
        PairingProtocol::Poisson => {
            for out in [&mut pre, &mut post] {
                let mut t = 0.0;
                loop {
                    let u: f64 = rng.gen();
                    t -= (1.0 - u).ln() / f;
                    if t > window {
                        break;
                    }
                    out.push(t);
                }
            }
        }
        PairingProtocol::PeriodicOffset { offset } => {
            let period = 1.0 / f;
            let mut t = 0.5 * period;
            while t <= window {
                pre.push(t);
                if t + offset <= window {
                    post.push(t + offset);
                }
                t += period;
            }
        }
    }
    if pre.len() + post.len() < 20 {
        return Err(Error::input(format!(
            "window of {window} s holds only {} events at {f} Hz; need at least 20",
            pre.len() + post.len()
        )));
    }

    let v0 = if map.v_lo <= 0.0 && map.v_hi >= 0.0 {
        0.0
    } else {
        0.5 * (map.v_lo + map.v_hi)
    };
    let mut s = SynapseState::with_weight(v0, map)?;
    let (mut i, mut j) = (0, 0);
    let mut t_prev = 0.0;
    while i < pre.len() || j < post.len() {
        // Merge the two trains in time order; coincidences apply the pre
        // side first (its update samples nothing at zero gap either way).
        let take_pre = j >= post.len() || (i < pre.len() && pre[i] <= post[j]);
        let t = if take_pre { pre[i] } else { post[j] };
        s = decay_traces(&s, p, t - t_prev);
        s = if take_pre {
            i += 1;
            on_pre(&s, p, map, t)
        } else {
            j += 1;
            on_post(&s, p, map, t)
        };
        t_prev = t;
    }
    Ok((s.v_g - v0) / window)
}

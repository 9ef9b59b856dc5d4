//! Layered configuration: frozen defaults, optional TOML overrides, cross
//! checks, canonical serialization, and the random perturbation used by the
//! robustness sweep.
//!
//! Every file key is optional; anything not given resolves to the default.
//! The input/output neuron switching voltage is special: unless set
//! explicitly it is derived from the regenerative threshold stage's ratios
//! and that neuron's supply rail.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::network::SummingStage;
use crate::neuron::{schmitt_threshold, LifParams, SchmittDesign};
use crate::synapse::{StdpParams, WeightMap};
use crate::tasks::ecg::{BcmParams, HrClassifierConfig, HrMode};
use crate::{Error, Result};

/// Fully resolved, validated model parameters. This is what every simulation
/// entry point takes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Simulation time step (seconds).
    pub dt: f64,
    /// Base RNG seed; every stochastic task derives its own stream from it.
    pub seed: u64,
    /// Threshold-stage ratios the switching voltage is derived from.
    pub schmitt: SchmittDesign,
    pub input: LifParams,
    pub output: LifParams,
    pub stdp: StdpParams,
    pub wmap: WeightMap,
    pub summing: SummingStage,
    /// Pre-to-post offset of the training delay unit (seconds).
    pub delay: f64,
    /// Training window per column (seconds).
    pub train_duration: f64,
    /// Inference window per pattern (seconds).
    pub infer_duration: f64,
    /// Drive voltage of a black pixel.
    pub v_black: f64,
    /// Drive voltage of a white pixel.
    pub v_white: f64,
    pub hr: HrClassifierConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dt: 1e-8,
            seed: 42,
            schmitt: SchmittDesign::default(),
            input: LifParams::input(),
            output: LifParams::output(),
            stdp: StdpParams::default(),
            wmap: WeightMap::default(),
            summing: SummingStage::default(),
            delay: 1e-6,
            train_duration: 2e-5,
            infer_duration: 1e-5,
            v_black: 1.2,
            v_white: 0.0,
            hr: HrClassifierConfig::default(),
        }
    }
}

impl ModelConfig {
    /// Parses TOML overrides on top of the defaults and validates the result.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: FileConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("bad config: {e}")))?;
        Self::resolve(&file)
    }

    /// Applies a parsed override file onto the defaults.
    pub fn resolve(file: &FileConfig) -> Result<Self> {
        let mut cfg = ModelConfig::default();

        if let Some(e) = &file.engine {
            apply(&mut cfg.dt, e.dt);
            if let Some(s) = e.seed {
                cfg.seed = s;
            }
        }

        let neuron = file.neuron.as_ref();
        if let Some(s) = neuron.and_then(|n| n.schmitt.as_ref()) {
            apply(&mut cfg.schmitt.r, s.r);
            apply(&mut cfg.schmitt.r_n, s.r_n);
            apply(&mut cfg.schmitt.v_th, s.v_th);
        }
        cfg.input = resolve_lif(cfg.input, neuron.and_then(|n| n.input.as_ref()), &cfg.schmitt)?;
        cfg.output = resolve_lif(cfg.output, neuron.and_then(|n| n.output.as_ref()), &cfg.schmitt)?;

        if let Some(s) = &file.synapse {
            apply(&mut cfg.stdp.a_plus, s.a_plus);
            apply(&mut cfg.stdp.a_minus, s.a_minus);
            apply(&mut cfg.stdp.tau_plus, s.tau_plus);
            apply(&mut cfg.stdp.tau_minus, s.tau_minus);
            apply(&mut cfg.stdp.g_m, s.g_m);
            apply(&mut cfg.stdp.c_1, s.c_1);
            apply(&mut cfg.stdp.t_pulse, s.t_pulse);
            apply(&mut cfg.stdp.v_cm, s.v_cm);
            apply(&mut cfg.stdp.t_max_pot, s.t_max_pot);
            apply(&mut cfg.stdp.t_max_dep, s.t_max_dep);
            if let Some(w) = &s.weight_map {
                cfg.wmap = WeightMap::new(
                    w.v_lo.unwrap_or(cfg.wmap.v_lo),
                    w.v_hi.unwrap_or(cfg.wmap.v_hi),
                    w.g_hrs.unwrap_or(cfg.wmap.g_hrs),
                    w.g_lrs.unwrap_or(cfg.wmap.g_lrs),
                )?;
            }
        }

        if let Some(n) = &file.network {
            apply(&mut cfg.summing.gain, n.summing_gain);
            apply(&mut cfg.summing.v_cm, n.summing_v_cm);
            apply(&mut cfg.delay, n.delay);
            apply(&mut cfg.train_duration, n.train_duration);
            apply(&mut cfg.infer_duration, n.infer_duration);
            apply(&mut cfg.v_black, n.v_black);
            apply(&mut cfg.v_white, n.v_white);
        }

        if let Some(h) = file.tasks.as_ref().and_then(|t| t.hr.as_ref()) {
            if let Some(m) = h.mode {
                cfg.hr.mode = m;
            }
            apply_bcm(&mut cfg.hr.theta_low, h.theta_low.as_ref());
            apply_bcm(&mut cfg.hr.theta_high, h.theta_high.as_ref());
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(format!("time step must be positive, got {}", self.dt)));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::config("seed must fit a signed 64-bit integer"));
        }
        self.schmitt.validate()?;
        self.input.validate()?;
        self.output.validate()?;
        self.stdp.validate()?;
        WeightMap::new(self.wmap.v_lo, self.wmap.v_hi, self.wmap.g_hrs, self.wmap.g_lrs)?;
        self.summing.validate()?;
        if !(self.delay.is_finite() && self.delay > 0.0) {
            return Err(Error::config(format!("training delay must be positive, got {}", self.delay)));
        }
        for (name, d) in [
            ("train_duration", self.train_duration),
            ("infer_duration", self.infer_duration),
        ] {
            if !(d.is_finite() && d >= self.dt) {
                return Err(Error::config(format!(
                    "{name} must cover at least one time step, got {d}"
                )));
            }
        }
        if !(self.v_white.is_finite() && self.v_black.is_finite() && self.v_white >= 0.0) {
            return Err(Error::config("pixel drive voltages must be finite and non-negative"));
        }
        if self.v_black > self.input.v_dd {
            return Err(Error::config(format!(
                "black-pixel drive {} exceeds the input supply rail {}",
                self.v_black, self.input.v_dd
            )));
        }
        if !(self.v_white < self.input.v_onset && self.input.v_onset < self.v_black) {
            return Err(Error::config(format!(
                "pixel drives must straddle the input spiking onset: \
                 v_white = {} < onset = {} < v_black = {}",
                self.v_white, self.input.v_onset, self.v_black
            )));
        }
        self.hr.validate()?;
        Ok(())
    }

    /// Canonical fully-populated TOML rendering. Two configs that resolve to
    /// the same parameters render identically, so this is the hashing and
    /// provenance format.
    pub fn canonical_toml(&self) -> String {
        let lif = |p: &LifParams| LifSection {
            c_u: Some(p.c_u),
            i_gain: Some(p.i_gain),
            v_onset: Some(p.v_onset),
            i_leak: Some(p.i_leak),
            v_sv: Some(p.v_sv),
            v_reset: Some(p.v_reset),
            spike_width: Some(p.spike_width),
            t_refr: Some(p.t_refr),
            v_dd: Some(p.v_dd),
        };
        let bcm = |b: &BcmParams| BcmSection {
            a_plus: Some(b.a_plus),
            a_minus: Some(b.a_minus),
            tau_plus: Some(b.tau_plus),
            tau_minus: Some(b.tau_minus),
        };
        let file = FileConfig {
            engine: Some(EngineSection { dt: Some(self.dt), seed: Some(self.seed) }),
            neuron: Some(NeuronSection {
                schmitt: Some(SchmittSection {
                    r: Some(self.schmitt.r),
                    r_n: Some(self.schmitt.r_n),
                    v_th: Some(self.schmitt.v_th),
                }),
                input: Some(lif(&self.input)),
                output: Some(lif(&self.output)),
            }),
            synapse: Some(SynapseSection {
                a_plus: Some(self.stdp.a_plus),
                a_minus: Some(self.stdp.a_minus),
                tau_plus: Some(self.stdp.tau_plus),
                tau_minus: Some(self.stdp.tau_minus),
                g_m: Some(self.stdp.g_m),
                c_1: Some(self.stdp.c_1),
                t_pulse: Some(self.stdp.t_pulse),
                v_cm: Some(self.stdp.v_cm),
                t_max_pot: Some(self.stdp.t_max_pot),
                t_max_dep: Some(self.stdp.t_max_dep),
                weight_map: Some(WeightMapSection {
                    v_lo: Some(self.wmap.v_lo),
                    v_hi: Some(self.wmap.v_hi),
                    g_hrs: Some(self.wmap.g_hrs),
                    g_lrs: Some(self.wmap.g_lrs),
                }),
            }),
            network: Some(NetworkSection {
                summing_gain: Some(self.summing.gain),
                summing_v_cm: Some(self.summing.v_cm),
                delay: Some(self.delay),
                train_duration: Some(self.train_duration),
                infer_duration: Some(self.infer_duration),
                v_black: Some(self.v_black),
                v_white: Some(self.v_white),
            }),
            tasks: Some(TasksSection {
                hr: Some(HrSection {
                    mode: Some(self.hr.mode),
                    theta_low: Some(bcm(&self.hr.theta_low)),
                    theta_high: Some(bcm(&self.hr.theta_high)),
                }),
            }),
        };
        toml::to_string(&file).expect("fully populated config serializes")
    }

    /// Scales every neuron, synapse, weight-map, summing and delay parameter
    /// by its own uniform factor in `[1-pct, 1+pct]`. The two neurons share
    /// one factor per field name (a process corner moves like devices
    /// together). Pixel drives, the time step, durations and the classifier
    /// thresholds are operating points, not devices, and stay fixed.
    pub fn perturbed<R: Rng>(&self, pct: f64, rng: &mut R) -> Result<ModelConfig> {
        if !(0.0..=0.3).contains(&pct) {
            return Err(Error::config(format!(
                "perturbation fraction must lie in [0, 0.3], got {pct}"
            )));
        }
        let mut factor = || 1.0 - pct + 2.0 * pct * rng.gen::<f64>();
        let mut cfg = self.clone();

        let lif: Vec<f64> = (0..9).map(|_| factor()).collect();
        for p in [&mut cfg.input, &mut cfg.output] {
            p.c_u *= lif[0];
            p.i_gain *= lif[1];
            p.v_onset *= lif[2];
            p.i_leak *= lif[3];
            p.v_sv *= lif[4];
            p.v_reset *= lif[5];
            p.spike_width *= lif[6];
            p.t_refr *= lif[7];
            p.v_dd *= lif[8];
        }

        let s: Vec<f64> = (0..10).map(|_| factor()).collect();
        cfg.stdp.a_plus *= s[0];
        cfg.stdp.a_minus *= s[1];
        cfg.stdp.tau_plus *= s[2];
        cfg.stdp.tau_minus *= s[3];
        cfg.stdp.g_m *= s[4];
        cfg.stdp.c_1 *= s[5];
        cfg.stdp.t_pulse *= s[6];
        cfg.stdp.v_cm *= s[7];
        cfg.stdp.t_max_pot *= s[8];
        cfg.stdp.t_max_dep *= s[9];

        let w: Vec<f64> = (0..4).map(|_| factor()).collect();
        cfg.wmap = WeightMap::new(
            self.wmap.v_lo * w[0],
            self.wmap.v_hi * w[1],
            self.wmap.g_hrs * w[2],
            self.wmap.g_lrs * w[3],
        )?;

        cfg.summing.gain *= factor();
        cfg.summing.v_cm *= factor();
        cfg.delay *= factor();

        cfg.validate()?;
        Ok(cfg)
    }
}

fn apply(dst: &mut f64, src: Option<f64>) {
    if let Some(v) = src {
        *dst = v;
    }
}

fn apply_bcm(dst: &mut BcmParams, src: Option<&BcmSection>) {
    if let Some(s) = src {
        apply(&mut dst.a_plus, s.a_plus);
        apply(&mut dst.a_minus, s.a_minus);
        apply(&mut dst.tau_plus, s.tau_plus);
        apply(&mut dst.tau_minus, s.tau_minus);
    }
}

fn resolve_lif(
    base: LifParams,
    sec: Option<&LifSection>,
    schmitt: &SchmittDesign,
) -> Result<LifParams> {
    let mut p = base;
    if let Some(s) = sec {
        apply(&mut p.c_u, s.c_u);
        apply(&mut p.i_gain, s.i_gain);
        apply(&mut p.v_onset, s.v_onset);
        apply(&mut p.i_leak, s.i_leak);
        apply(&mut p.v_reset, s.v_reset);
        apply(&mut p.spike_width, s.spike_width);
        apply(&mut p.t_refr, s.t_refr);
        apply(&mut p.v_dd, s.v_dd);
    }
    p.v_sv = match sec.and_then(|s| s.v_sv) {
        Some(v) => v,
        None => schmitt_threshold(&SchmittDesign { v_dd: p.v_dd, ..*schmitt })?,
    };
    Ok(p)
}

/// TOML override file. Every key is optional; unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neuron: Option<NeuronSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synapse: Option<SynapseSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tasks: Option<TasksSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schmitt: Option<SchmittSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<LifSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<LifSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchmittSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_th: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_onset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i_leak: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_sv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_reset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spike_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_refr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_dd: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynapseSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_minus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_minus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_pulse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max_pot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max_dep: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_map: Option<WeightMapSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightMapSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_hrs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_lrs: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summing_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summing_v_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infer_duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_black: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_white: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TasksSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hr: Option<HrSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HrSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<HrMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_low: Option<BcmSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_high: Option<BcmSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcmSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_minus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_minus: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::seeded_rng;

    #[test]
    fn default_config_is_valid_and_matches_the_empty_file() {
        let cfg = ModelConfig::default();
        cfg.validate().unwrap();
        assert_eq!(ModelConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn derived_switching_voltage_equals_the_shipped_literal() {
        let cfg = ModelConfig::from_toml("").unwrap();
        assert_eq!(cfg.input.v_sv, 1.2);
        assert_eq!(cfg.output.v_sv, 1.2);
    }

    #[test]
    fn canonical_toml_roundtrips_exactly() {
        let cfg = ModelConfig::default();
        let text = cfg.canonical_toml();
        let back = ModelConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.canonical_toml(), text);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in ["[engine]\nfoo = 1\n", "[nope]\nx = 1\n", "[synapse.weight_map]\nslope = 2\n"] {
            let err = ModelConfig::from_toml(text).unwrap_err();
            assert_eq!(err.kind(), "config", "{text}");
        }
    }

    #[test]
    fn overrides_apply() {
        let cfg = ModelConfig::from_toml(
            "[engine]\ndt = 2e-8\nseed = 7\n\
             [synapse]\na_plus = 2.0\n\
             [network]\ndelay = 5e-7\n\
             [tasks.hr]\nmode = \"simulated\"\n",
        )
        .unwrap();
        assert_eq!(cfg.dt, 2e-8);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.stdp.a_plus, 2.0);
        assert_eq!(cfg.delay, 5e-7);
        assert_eq!(cfg.hr.mode, HrMode::Simulated);
        assert_eq!(cfg.stdp.a_minus, ModelConfig::default().stdp.a_minus);
    }

    #[test]
    fn switching_voltage_follows_the_threshold_stage() {
        let cfg = ModelConfig::from_toml("[neuron.schmitt]\nr = 2.0\n").unwrap();
        assert_eq!(cfg.input.v_sv, 0.9);
        assert_eq!(cfg.output.v_sv, 0.9);
        let cfg = ModelConfig::from_toml("[neuron.schmitt]\nr = 2.0\n[neuron.input]\nv_sv = 1.0\n")
            .unwrap();
        assert_eq!(cfg.input.v_sv, 1.0, "explicit value beats derivation");
        assert_eq!(cfg.output.v_sv, 0.9);
    }

    #[test]
    fn cross_checks_reject_inconsistent_mixes() {
        // Black-pixel drive below the input spiking onset.
        assert!(ModelConfig::from_toml("[network]\nv_black = 0.4\n").is_err());
        // Training window shorter than one step.
        assert!(ModelConfig::from_toml("[network]\ntrain_duration = 1e-9\n").is_err());
        // Threshold units in the wrong order.
        assert!(ModelConfig::from_toml(
            "[tasks.hr.theta_high]\na_plus = 0.267\na_minus = -0.175\n"
        )
        .is_err());
        // Inverted weight map.
        assert!(ModelConfig::from_toml("[synapse.weight_map]\nv_hi = 0.5\n").is_err());
    }

    #[test]
    fn perturbed_is_deterministic_and_identity_at_zero() {
        let cfg = ModelConfig::default();
        let p0 = cfg.perturbed(0.0, &mut seeded_rng(42, 1)).unwrap();
        assert_eq!(p0, cfg);
        let a = cfg.perturbed(0.01, &mut seeded_rng(42, 1)).unwrap();
        let b = cfg.perturbed(0.01, &mut seeded_rng(42, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, cfg);
        a.validate().unwrap();
        assert!(cfg.perturbed(0.5, &mut seeded_rng(42, 1)).is_err());
    }

    #[test]
    fn oversized_seed_is_rejected() {
        let cfg = ModelConfig { seed: u64::MAX, ..ModelConfig::default() };
        assert!(cfg.validate().is_err());
    }
}

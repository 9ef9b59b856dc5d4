//! Crossbar system: column-sequential training with a delayed self-pair,
//! summed-conductance inference drive, and OR-gate winner-take-all.
//!
//! Training drives one column at a time: each input neuron rate-codes its
//! pixel, its spike train is the presynaptic input of the column's synapse in
//! that row, and a delayed copy plays the postsynaptic role, so active rows
//! potentiate toward the low-resistance state while silent rows stay put.
//! Inference converts each column's summed conductance (over currently
//! spiking rows) into a feed-forward voltage on an output neuron; the first
//! output spike names the winner and inhibits the rest.
//!
//! Column sums are accumulated in sorted order, so columns with equal weight
//! multisets produce bit-identical drives and genuinely tie instead of being
//! split by float rounding.

use crate::config::ModelConfig;
use crate::engine::SpikeTrain;
use crate::neuron::{constant_drive_train, encode_pixel, lif_step, LifState};
use crate::synapse::{conductance, decay_traces, on_post, on_pre, SynapseState, WeightMap};
use crate::tasks::Pattern;
use crate::{Error, Result};

/// Current-to-voltage conversion stage shared by all columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummingStage {
    /// Conversion gain (volts per ampere).
    pub gain: f64,
    /// Reference the spike rail is measured against (volts).
    pub v_cm: f64,
}

impl SummingStage {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::config(format!("summing gain must be positive, got {}", self.gain)));
        }
        if !(self.v_cm.is_finite() && self.v_cm >= 0.0) {
            return Err(Error::config(format!(
                "summing v_cm must be non-negative, got {}",
                self.v_cm
            )));
        }
        Ok(())
    }
}

impl Default for SummingStage {
    fn default() -> Self {
        SummingStage { gain: 1e4, v_cm: 0.9 }
    }
}

/// Operating mode of the crossbar; training targets exactly one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Train(usize),
    Infer,
}

/// A rows×cols matrix of synapses plus the delay element used to build the
/// postsynaptic copy during training.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossbar {
    pub rows: usize,
    pub cols: usize,
    /// Synapse states indexed `[row][col]`.
    pub synapses: Vec<Vec<SynapseState>>,
    pub mode: Mode,
    /// Pre-to-post offset of the training delay unit (seconds).
    pub delay: f64,
}

impl Crossbar {
    /// A fresh crossbar with every synapse in the high-resistance state.
    pub fn new(rows: usize, cols: usize, map: &WeightMap, delay: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::config(format!("crossbar needs rows and cols > 0, got {rows}x{cols}")));
        }
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(Error::config(format!("crossbar delay must be non-negative, got {delay}")));
        }
        Ok(Crossbar {
            rows,
            cols,
            synapses: vec![vec![SynapseState::new(map); cols]; rows],
            mode: Mode::Infer,
            delay,
        })
    }

    /// Weight matrix export: one line per row, comma-separated gate voltages
    /// at full double precision, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.synapses {
            for (j, s) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{}", s.v_g));
            }
            out.push('\n');
        }
        out
    }

    /// Rebuilds a crossbar from [`Crossbar::to_csv`] output. Dimensions come
    /// from the data; every value must lie inside the weight map's range.
    pub fn from_csv(text: &str, map: &WeightMap, delay: f64) -> Result<Self> {
        let mut synapses: Vec<Vec<SynapseState>> = Vec::new();
        let mut cols = 0;
        for (ln, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for (cn, field) in line.split(',').enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::input(format!("weight file line {}: `{}` is not a number", ln + 1, field))
                })?;
                if !(v >= map.v_lo && v <= map.v_hi) {
                    return Err(Error::input(format!(
                        "weight file line {} column {}: {} outside [{}, {}]",
                        ln + 1,
                        cn + 1,
                        v,
                        map.v_lo,
                        map.v_hi
                    )));
                }
                row.push(SynapseState { v_g: v, ..SynapseState::new(map) });
            }
            if synapses.is_empty() {
                cols = row.len();
            } else if row.len() != cols {
                return Err(Error::input(format!(
                    "weight file line {}: {} columns, expected {}",
                    ln + 1,
                    row.len(),
                    cols
                )));
            }
            synapses.push(row);
        }
        if synapses.is_empty() {
            return Err(Error::input("weight file holds no rows"));
        }
        let rows = synapses.len();
        Ok(Crossbar { rows, cols, synapses, mode: Mode::Infer, delay })
    }
}

/// The training delay unit: every onset shifted by `delta` seconds.
pub fn delay_line(train: &SpikeTrain, delta: f64) -> Result<SpikeTrain> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::config(format!("delay must be non-negative, got {delta}")));
    }
    Ok(train.shifted(delta))
}

/// OR-gate inhibition fan-out: `inhibit[j]` is true when any other neuron is
/// currently spiking.
pub fn wta_fanout(spiking: &[bool]) -> Vec<bool> {
    let total = spiking.iter().filter(|&&s| s).count();
    spiking.iter().map(|&s| total > usize::from(s)).collect()
}

/// Trains column `j` on one pattern for `duration` seconds.
///
/// Each active row's neuron runs for the whole cycle; its train is pre, the
/// delayed copy is post, and both feed only this column's synapse in that
/// row. Post pulses that would land beyond the cycle end are dropped.
pub fn train_pattern(
    xb: &mut Crossbar,
    cfg: &ModelConfig,
    pattern: &Pattern,
    j: usize,
    duration: f64,
) -> Result<()> {
    if j >= xb.cols {
        return Err(Error::config(format!("column {j} out of range for {} columns", xb.cols)));
    }
    if pattern.len() != xb.rows {
        return Err(Error::input(format!(
            "pattern has {} pixels for {} crossbar rows",
            pattern.len(),
            xb.rows
        )));
    }
    if !(duration.is_finite() && duration >= cfg.dt) {
        return Err(Error::config(format!("training duration must cover at least one step, got {duration}")));
    }
    xb.mode = Mode::Train(j);

    // All rows at the same drive level share one simulated train.
    let mut cache: Vec<(f64, SpikeTrain, SpikeTrain)> = Vec::new();
    for i in 0..xb.rows {
        let v = encode_pixel(pattern.bit(i), cfg.v_black, cfg.v_white);
        if !cache.iter().any(|(cv, _, _)| *cv == v) {
            let pre = constant_drive_train(&cfg.input, v, duration, cfg.dt)?;
            let post = delay_line(&pre, xb.delay)?;
            cache.push((v, pre, post));
        }
        let (_, pre, post) = cache.iter().find(|(cv, _, _)| *cv == v).expect("cached");

        let pres = pre.times();
        let posts: Vec<f64> = post.times().iter().copied().filter(|&t| t <= duration).collect();
        let mut s = xb.synapses[i][j];
        let (mut a, mut b) = (0, 0);
        let mut t_prev = 0.0;
        while a < pres.len() || b < posts.len() {
            let take_pre = b >= posts.len() || (a < pres.len() && pres[a] <= posts[b]);
            let t = if take_pre { pres[a] } else { posts[b] };
            s = decay_traces(&s, &cfg.stdp, (t - t_prev).max(0.0));
            s = if take_pre {
                a += 1;
                on_pre(&s, &cfg.stdp, &cfg.wmap, t)
            } else {
                b += 1;
                on_post(&s, &cfg.stdp, &cfg.wmap, t)
            };
            t_prev = t;
        }
        xb.synapses[i][j] = s;
    }

    xb.mode = Mode::Infer;
    Ok(())
}

/// Sequentially trains column `j` on pattern `j` for every corpus entry.
///
/// Requires a fresh crossbar: every synapse still at the high-resistance
/// state.
pub fn train_all(xb: &mut Crossbar, cfg: &ModelConfig, corpus: &crate::tasks::DigitCorpus) -> Result<()> {
    if corpus.len() != xb.cols {
        return Err(Error::config(format!(
            "corpus has {} patterns for {} columns",
            corpus.len(),
            xb.cols
        )));
    }
    for row in &xb.synapses {
        for s in row {
            if s.v_g != cfg.wmap.v_lo {
                return Err(Error::invariant(
                    "train_all requires a fresh crossbar with all weights at the high-resistance state",
                ));
            }
        }
    }
    for (j, p) in corpus.patterns().iter().enumerate() {
        train_pattern(xb, cfg, p, j, cfg.train_duration)?;
    }
    Ok(())
}

/// Builds a crossbar sized for the corpus and trains every column.
pub fn trained(cfg: &ModelConfig, corpus: &crate::tasks::DigitCorpus) -> Result<Crossbar> {
    let rows = corpus
        .patterns()
        .first()
        .map(Pattern::len)
        .ok_or_else(|| Error::config("cannot train on an empty corpus"))?;
    let mut xb = Crossbar::new(rows, corpus.len(), &cfg.wmap, cfg.delay)?;
    train_all(&mut xb, cfg, corpus)?;
    Ok(xb)
}

/// Everything one inference run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct InferOutcome {
    /// First column to spike; on a coincident onset, the lowest index.
    pub winner: Option<usize>,
    /// Whether the first onset was shared by several columns.
    pub tie: bool,
    /// All columns that shared the first onset (single entry when not a tie).
    pub tied: Vec<usize>,
    /// Time of the first output spike (seconds).
    pub latency: Option<f64>,
    /// Output spikes per column over the whole window.
    pub spike_counts: Vec<usize>,
}

impl InferOutcome {
    /// The winner when it was decided by timing alone; ties yield `None` so
    /// callers can line the result up against tie-reporting references.
    pub fn unique_winner(&self) -> Option<usize> {
        if self.tie {
            None
        } else {
            self.winner
        }
    }
}

fn conductance_matrix(xb: &Crossbar, map: &WeightMap) -> Result<Vec<Vec<f64>>> {
    xb.synapses
        .iter()
        .map(|row| row.iter().map(|s| conductance(map, s.v_g)).collect())
        .collect()
}

/// Column sums over the active rows, accumulated in sorted order so equal
/// weight multisets give bit-identical results.
fn column_drives_for(
    g: &[Vec<f64>],
    active: &[bool],
    cols: usize,
    cfg: &ModelConfig,
) -> Vec<f64> {
    let factor = cfg.summing.gain * (cfg.input.v_dd - cfg.summing.v_cm);
    let mut scratch = Vec::with_capacity(active.len());
    (0..cols)
        .map(|j| {
            scratch.clear();
            scratch.extend(
                active.iter().enumerate().filter(|&(_, &a)| a).map(|(i, _)| g[i][j]),
            );
            scratch.sort_by(f64::total_cmp);
            let sum: f64 = scratch.iter().sum();
            (factor * sum).clamp(0.0, cfg.output.v_dd)
        })
        .collect()
}

/// The feed-forward voltage each column would see with every black pixel of
/// `pattern` spiking at once — the steady drive during an input burst.
pub fn column_drives(xb: &Crossbar, cfg: &ModelConfig, pattern: &Pattern) -> Result<Vec<f64>> {
    if pattern.len() != xb.rows {
        return Err(Error::input(format!(
            "pattern has {} pixels for {} crossbar rows",
            pattern.len(),
            xb.rows
        )));
    }
    let g = conductance_matrix(xb, &cfg.wmap)?;
    let active: Vec<bool> = (0..xb.rows).map(|i| pattern.bit(i)).collect();
    Ok(column_drives_for(&g, &active, xb.cols, cfg))
}

/// Runs winner-take-all inference of one pattern for `duration` seconds.
///
/// Inhibition is combinational over the previous step's output pulses, so a
/// spike takes effect one step after its onset; onsets landing in the same
/// step are recorded as a tie and resolved toward the lowest column index.
/// Weights are never modified.
pub fn infer(
    xb: &Crossbar,
    cfg: &ModelConfig,
    pattern: &Pattern,
    duration: f64,
) -> Result<InferOutcome> {
    if xb.mode != Mode::Infer {
        return Err(Error::invariant("inference requires the crossbar in infer mode"));
    }
    if pattern.len() != xb.rows {
        return Err(Error::input(format!(
            "pattern has {} pixels for {} crossbar rows",
            pattern.len(),
            xb.rows
        )));
    }
    if !(duration.is_finite() && duration >= cfg.dt) {
        return Err(Error::config(format!(
            "inference duration must cover at least one step, got {duration}"
        )));
    }

    let g = conductance_matrix(xb, &cfg.wmap)?;
    let v_in: Vec<f64> = (0..xb.rows)
        .map(|i| encode_pixel(pattern.bit(i), cfg.v_black, cfg.v_white))
        .collect();
    let mut inputs: Vec<LifState> = (0..xb.rows).map(|_| LifState::new(&cfg.input)).collect();
    let mut outputs: Vec<LifState> = (0..xb.cols).map(|_| LifState::new(&cfg.output)).collect();

    let mut active = vec![false; xb.rows];
    let mut drives = column_drives_for(&g, &active, xb.cols, cfg);
    let mut out = InferOutcome {
        winner: None,
        tie: false,
        tied: Vec::new(),
        latency: None,
        spike_counts: vec![0; xb.cols],
    };

    let steps = (duration / cfg.dt).round() as u64;
    for k in 1..=steps {
        let t_end = k as f64 * cfg.dt;

        let mut changed = false;
        for i in 0..xb.rows {
            let (next, _) = lif_step(&cfg.input, &inputs[i], v_in[i], false, t_end, cfg.dt);
            inputs[i] = next;
            let high = next.output_high(cfg.dt);
            if high != active[i] {
                active[i] = high;
                changed = true;
            }
        }
        if changed {
            drives = column_drives_for(&g, &active, xb.cols, cfg);
        }

        let spiking: Vec<bool> = outputs.iter().map(|s| s.output_high(cfg.dt)).collect();
        let inhibits = wta_fanout(&spiking);
        let mut onsets = Vec::new();
        for j in 0..xb.cols {
            let (next, onset) = lif_step(&cfg.output, &outputs[j], drives[j], inhibits[j], t_end, cfg.dt);
            outputs[j] = next;
            if onset {
                onsets.push(j);
                out.spike_counts[j] += 1;
            }
        }
        if out.winner.is_none() && !onsets.is_empty() {
            out.winner = Some(onsets[0]);
            out.tie = onsets.len() > 1;
            out.tied = onsets;
            out.latency = Some(t_end);
        }
    }
    Ok(out)
}

//! Exhaustive sweeps: noisy-pattern recognition against one or both judges,
//! and the random parameter-perturbation robustness measure.
//!
//! Sweep cases are data-parallel; every case owns its own simulator state and
//! results are kept in enumeration order, so thread count never changes the
//! output.

use itertools::Itertools;
use rayon::prelude::*;

use crate::config::ModelConfig;
use crate::engine::seeded_rng;
use crate::network::{infer, trained, InferOutcome};
use crate::tasks::{oracle_classify, DigitCorpus, Verdict};
use crate::{Error, Result};

/// Which classifier(s) a recognition sweep consults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Judge {
    Oracle,
    Circuit,
    Both,
}

impl Judge {
    fn wants_oracle(self) -> bool {
        matches!(self, Judge::Oracle | Judge::Both)
    }

    fn wants_circuit(self) -> bool {
        matches!(self, Judge::Circuit | Judge::Both)
    }
}

/// One enumerated noisy case and the verdicts reached on it.
#[derive(Debug, Clone)]
pub struct CaseRow {
    /// Source digit the variant was derived from.
    pub digit: usize,
    /// Indices of the inverted pixels, ascending.
    pub flips: Vec<usize>,
    pub oracle: Option<Verdict>,
    pub circuit: Option<InferOutcome>,
}

impl CaseRow {
    pub fn oracle_correct(&self) -> Option<bool> {
        self.oracle.as_ref().map(|v| v.digit() == Some(self.digit))
    }

    pub fn circuit_correct(&self) -> Option<bool> {
        self.circuit.as_ref().map(|o| o.unique_winner() == Some(self.digit))
    }
}

fn circuit_label(o: &InferOutcome) -> String {
    if o.tie {
        "tie".into()
    } else {
        match o.winner {
            Some(j) => j.to_string(),
            None => "none".into(),
        }
    }
}

/// Totals for one judge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JudgeSummary {
    pub correct: usize,
    pub rate_pct: f64,
}

/// Full result of a recognition sweep.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub k: usize,
    pub total: usize,
    pub oracle: Option<JudgeSummary>,
    pub circuit: Option<JudgeSummary>,
    pub rows: Vec<CaseRow>,
}

impl SweepReport {
    /// Per-case table: digit, flipped pixel set (`+`-joined), then one
    /// verdict and correctness column per active judge.
    pub fn cases_csv(&self) -> String {
        let mut out = String::from("digit,flips");
        let has_oracle = self.oracle.is_some();
        let has_circuit = self.circuit.is_some();
        if has_oracle {
            out.push_str(",oracle,oracle_correct");
        }
        if has_circuit {
            out.push_str(",circuit,circuit_correct");
        }
        out.push('\n');
        for row in &self.rows {
            let flips = row.flips.iter().map(usize::to_string).join("+");
            out.push_str(&format!("{},{}", row.digit, flips));
            if has_oracle {
                let v = row.oracle.as_ref().expect("oracle verdict on every row");
                out.push_str(&format!(",{},{}", v.label(), row.oracle_correct().unwrap()));
            }
            if has_circuit {
                let o = row.circuit.as_ref().expect("circuit outcome on every row");
                out.push_str(&format!(",{},{}", circuit_label(o), row.circuit_correct().unwrap()));
            }
            out.push('\n');
        }
        out
    }
}

/// Classifies every `k`-flip variant of every corpus digit.
///
/// A case counts as correct only when the judged digit equals the source
/// digit; ties and silent runs are incorrect. The circuit judge trains one
/// crossbar and reuses it read-only across all cases.
pub fn recognition_sweep(
    cfg: &ModelConfig,
    corpus: &DigitCorpus,
    k: usize,
    judge: Judge,
) -> Result<SweepReport> {
    let xb = if judge.wants_circuit() { Some(trained(cfg, corpus)?) } else { None };

    let cases: Vec<(usize, Vec<usize>)> = (0..corpus.len())
        .flat_map(|d| {
            (0..corpus.digit(d).len()).combinations(k).map(move |flips| (d, flips))
        })
        .collect();
    if cases.is_empty() {
        return Err(Error::config(format!("no cases to sweep at k={k}")));
    }

    let rows: Result<Vec<CaseRow>> = cases
        .into_par_iter()
        .map(|(digit, flips)| {
            let q = corpus.digit(digit).flipped(&flips);
            let oracle = if judge.wants_oracle() {
                Some(oracle_classify(corpus, &q)?)
            } else {
                None
            };
            let circuit = match &xb {
                Some(xb) => Some(infer(xb, cfg, &q, cfg.infer_duration)?),
                None => None,
            };
            Ok(CaseRow { digit, flips, oracle, circuit })
        })
        .collect();
    let rows = rows?;

    let total = rows.len();
    let summarize = |count: usize| JudgeSummary {
        correct: count,
        rate_pct: 100.0 * count as f64 / total as f64,
    };
    let oracle = judge
        .wants_oracle()
        .then(|| summarize(rows.iter().filter(|r| r.oracle_correct() == Some(true)).count()));
    let circuit = judge
        .wants_circuit()
        .then(|| summarize(rows.iter().filter(|r| r.circuit_correct() == Some(true)).count()));

    Ok(SweepReport { k, total, oracle, circuit, rows })
}

/// Result of a robustness sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbReport {
    pub pct: f64,
    pub seeds: usize,
    /// Seeds whose perturbed system still recognises all clean digits.
    pub survivors: usize,
    /// `survivors / seeds`.
    pub survival: f64,
}

fn clean_sweep_ok(cfg: &ModelConfig, corpus: &DigitCorpus) -> bool {
    let Ok(xb) = trained(cfg, corpus) else { return false };
    (0..corpus.len()).all(|d| {
        infer(&xb, cfg, corpus.digit(d), cfg.infer_duration)
            .map(|o| o.unique_winner() == Some(d))
            .unwrap_or(false)
    })
}

/// Scales every neuron, synapse, weight-map, summing and delay parameter by
/// an independent uniform factor in `[1-pct, 1+pct]` (one factor per named
/// parameter, drawn from a per-seed stream), then retrains and re-infers all
/// clean digits. Reports the fraction of seeds that stay fully correct;
/// perturbations that produce an invalid configuration count as failures.
pub fn perturb_sweep(
    cfg: &ModelConfig,
    corpus: &DigitCorpus,
    pct: f64,
    n_seeds: usize,
) -> Result<PerturbReport> {
    if !(0.0..=0.3).contains(&pct) {
        return Err(Error::config(format!("perturbation must lie in [0, 0.3], got {pct}")));
    }
    if n_seeds == 0 {
        return Err(Error::config("perturbation sweep needs at least one seed"));
    }

    let survivors = (0..n_seeds)
        .into_par_iter()
        .filter(|&s| {
            let mut rng = seeded_rng(cfg.seed, 1_000_000 + s as u64);
            match cfg.perturbed(pct, &mut rng) {
                Ok(p) => clean_sweep_ok(&p, corpus),
                Err(_) => false,
            }
        })
        .count();

    Ok(PerturbReport {
        pct,
        seeds: n_seeds,
        survivors,
        survival: survivors as f64 / n_seeds as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_sweep_is_perfect_for_both_judges() {
        let cfg = ModelConfig::default();
        let corpus = DigitCorpus::canonical();
        let r = recognition_sweep(&cfg, &corpus, 0, Judge::Both).unwrap();
        assert_eq!(r.total, 6);
        assert_eq!(r.oracle.unwrap().correct, 6);
        assert_eq!(r.circuit.unwrap().correct, 6);
        assert_eq!(r.oracle.unwrap().rate_pct, 100.0);
        assert_eq!(r.circuit.unwrap().rate_pct, 100.0);
        let csv = r.cases_csv();
        assert!(csv.starts_with("digit,flips,oracle,oracle_correct,circuit,circuit_correct\n"));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn oracle_only_sweep_skips_the_circuit() {
        let cfg = ModelConfig::default();
        let corpus = DigitCorpus::canonical();
        let r = recognition_sweep(&cfg, &corpus, 1, Judge::Oracle).unwrap();
        assert_eq!(r.total, 90);
        assert!(r.circuit.is_none());
        assert!(r.rows.iter().all(|row| row.circuit.is_none()));
        assert!(!r.cases_csv().contains("circuit"));
    }

    #[test]
    fn case_rows_keep_enumeration_order() {
        let cfg = ModelConfig::default();
        let corpus = DigitCorpus::canonical();
        let r = recognition_sweep(&cfg, &corpus, 1, Judge::Oracle).unwrap();
        for (n, row) in r.rows.iter().enumerate() {
            assert_eq!(row.digit, n / 15);
            assert_eq!(row.flips, vec![n % 15]);
        }
    }

    #[test]
    fn unperturbed_sweep_always_survives() {
        let cfg = ModelConfig::default();
        let corpus = DigitCorpus::canonical();
        let r = perturb_sweep(&cfg, &corpus, 0.0, 3).unwrap();
        assert_eq!(r.survivors, 3);
        assert_eq!(r.survival, 1.0);
    }

    #[test]
    fn perturb_rejects_bad_arguments() {
        let cfg = ModelConfig::default();
        let corpus = DigitCorpus::canonical();
        assert!(perturb_sweep(&cfg, &corpus, 0.5, 10).is_err());
        assert!(perturb_sweep(&cfg, &corpus, -0.1, 10).is_err());
        assert!(perturb_sweep(&cfg, &corpus, 0.1, 0).is_err());
    }
}

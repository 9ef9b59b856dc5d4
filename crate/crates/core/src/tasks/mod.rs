//! Experiment harnesses: the digit corpus, exhaustive noise enumeration with
//! an analytical classification reference, ECG beat-rate classification, and
//! the parameter-perturbation robustness sweep.

pub mod ecg;
pub mod sweep;

use itertools::Itertools;

use crate::{Error, Result};

/// A binary image, row-major. The stock corpus uses 5 rows × 3 columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    pixels: Vec<u8>,
}

impl Pattern {
    pub fn new(pixels: Vec<u8>) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::input("pattern has no pixels"));
        }
        if let Some(&bad) = pixels.iter().find(|&&p| p > 1) {
            return Err(Error::input(format!("pattern pixel {bad} is not 0 or 1")));
        }
        Ok(Pattern { pixels })
    }

    /// Parses a string of `0`/`1` characters, row-major.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let pixels: Result<Vec<u8>> = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::input(format!("pattern character `{other}` is not 0 or 1"))),
            })
            .collect();
        Pattern::new(pixels?)
    }

    pub fn to_bits(&self) -> String {
        self.pixels.iter().map(|&p| if p == 1 { '1' } else { '0' }).collect()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.pixels[i] == 1
    }

    /// Number of black pixels.
    pub fn ones(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    /// Count of positions where both patterns are black.
    pub fn overlap(&self, other: &Pattern) -> usize {
        self.pixels.iter().zip(&other.pixels).filter(|(&a, &b)| a == 1 && b == 1).count()
    }

    /// A copy with the listed pixel indices inverted.
    pub fn flipped(&self, flips: &[usize]) -> Pattern {
        let mut pixels = self.pixels.clone();
        for &i in flips {
            pixels[i] ^= 1;
        }
        Pattern { pixels }
    }
}

/// The six 5×3 digit images the classifier is trained on.
///
/// Row-major bitmaps of a standard 5×3 font for digits 0–5; replaceable from
/// a corpus file.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitCorpus {
    patterns: Vec<Pattern>,
}

const CANONICAL: [&str; 6] = [
    "111101101101111",
    "010110010010111",
    "111001111100111",
    "111001111001111",
    "101101111001001",
    "111100111001111",
];

impl DigitCorpus {
    pub fn canonical() -> Self {
        let patterns = CANONICAL
            .iter()
            .map(|b| Pattern::from_bits(b).expect("static bitmaps are valid"))
            .collect();
        DigitCorpus { patterns }
    }

    /// Parses a corpus file: six lines of fifteen `0`/`1` characters,
    /// row-major, pairwise distinct, five or more black pixels each.
    pub fn from_file_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.len() != 6 {
            return Err(Error::input(format!("corpus needs 6 patterns, found {}", lines.len())));
        }
        let mut patterns = Vec::with_capacity(6);
        for (n, line) in lines.iter().enumerate() {
            let line = line.trim();
            if line.len() != 15 {
                return Err(Error::input(format!(
                    "corpus line {}: {} characters, expected 15",
                    n + 1,
                    line.len()
                )));
            }
            let p = Pattern::from_bits(line)
                .map_err(|e| Error::input(format!("corpus line {}: {e}", n + 1)))?;
            if p.ones() < 5 {
                return Err(Error::input(format!(
                    "corpus line {}: only {} black pixels, need at least 5",
                    n + 1,
                    p.ones()
                )));
            }
            patterns.push(p);
        }
        for a in 0..patterns.len() {
            for b in a + 1..patterns.len() {
                if patterns[a] == patterns[b] {
                    return Err(Error::input(format!("corpus lines {} and {} are identical", a + 1, b + 1)));
                }
            }
        }
        Ok(DigitCorpus { patterns })
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn digit(&self, d: usize) -> &Pattern {
        &self.patterns[d]
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

/// All `C(len, k)` variants of `p` with exactly `k` pixels inverted, in
/// lexicographic order of the flipped index sets.
pub fn enumerate_noisy(p: &Pattern, k: usize) -> Result<Vec<Pattern>> {
    if k > p.len() {
        return Err(Error::config(format!("cannot flip {k} of {} pixels", p.len())));
    }
    Ok((0..p.len()).combinations(k).map(|flips| p.flipped(&flips)).collect())
}

/// Outcome of the analytical classifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Digit(usize),
    /// Non-unique maximum; lists every column attaining it.
    Tie(Vec<usize>),
}

impl Verdict {
    pub fn digit(&self) -> Option<usize> {
        match self {
            Verdict::Digit(d) => Some(*d),
            Verdict::Tie(_) => None,
        }
    }

    /// Compact text form for per-case tables.
    pub fn label(&self) -> String {
        match self {
            Verdict::Digit(d) => d.to_string(),
            Verdict::Tie(_) => "tie".into(),
        }
    }
}

/// Analytical classification: the digit whose image shares the most black
/// pixels with the query wins; a shared maximum is a tie.
///
/// This equals an argmax over summed column conductances in the trained-
/// weight model, since the untrained-synapse contribution is the same for
/// every column (see [`oracle_classify_weighted`]).
pub fn oracle_classify(corpus: &DigitCorpus, q: &Pattern) -> Result<Verdict> {
    let scores: Vec<usize> = corpus
        .patterns()
        .iter()
        .map(|d| {
            if d.len() != q.len() {
                return Err(Error::input(format!(
                    "query has {} pixels, corpus patterns have {}",
                    q.len(),
                    d.len()
                )));
            }
            Ok(d.overlap(q))
        })
        .collect::<Result<_>>()?;
    let best = *scores.iter().max().expect("corpus is non-empty");
    let arg: Vec<usize> =
        scores.iter().enumerate().filter(|&(_, &s)| s == best).map(|(j, _)| j).collect();
    if arg.len() == 1 {
        Ok(Verdict::Digit(arg[0]))
    } else {
        Ok(Verdict::Tie(arg))
    }
}

/// The same decision computed through explicit conductance sums: every black
/// query pixel contributes `g_black` where the digit is black and `g_white`
/// elsewhere. Sums are accumulated in sorted order so equal multisets compare
/// exactly equal.
pub fn oracle_classify_weighted(
    corpus: &DigitCorpus,
    q: &Pattern,
    g_white: f64,
    g_black: f64,
) -> Result<Verdict> {
    let mut scores = Vec::with_capacity(corpus.len());
    for d in corpus.patterns() {
        if d.len() != q.len() {
            return Err(Error::input(format!(
                "query has {} pixels, corpus patterns have {}",
                q.len(),
                d.len()
            )));
        }
        let mut gs: Vec<f64> = (0..q.len())
            .filter(|&i| q.bit(i))
            .map(|i| if d.bit(i) { g_black } else { g_white })
            .collect();
        gs.sort_by(f64::total_cmp);
        scores.push(gs.iter().sum::<f64>());
    }
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let arg: Vec<usize> =
        scores.iter().enumerate().filter(|&(_, &s)| s == best).map(|(j, _)| j).collect();
    if arg.len() == 1 {
        Ok(Verdict::Digit(arg[0]))
    } else {
        Ok(Verdict::Tie(arg))
    }
}

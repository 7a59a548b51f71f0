//! Samples, distributions, hypotheses, and the pseudo-entropy quantities
//! that drive diagram growth.
//!
//! Everything here is immutable after construction and every operation is a
//! pure function, so concurrent evaluation over hypotheses or sample shards
//! is safe.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diagram::Diagram;
use crate::{Error, Result};

/// A ±1-valued instance vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct BitVector {
    bits: Vec<i8>,
}

impl BitVector {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = bits.iter().find(|&&b| b != 1 && b != -1) {
            return Err(Error::Invalid {
                what: "bit vector",
                detail: format!("component {bad} is not ±1"),
            });
        }
        Ok(Self { bits })
    }

    /// The `index`-th vector of `{-1,+1}^n` in lexicographic order
    /// (all `-1` first; coordinate 0 is the most significant position).
    pub fn from_index(index: usize, n: usize) -> Self {
        let bits = (0..n)
            .map(|j| if (index >> (n - 1 - j)) & 1 == 1 { 1 } else { -1 })
            .collect();
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> i8 {
        self.bits[i]
    }

    pub fn bits(&self) -> &[i8] {
        &self.bits
    }

    /// Number of coordinates where `self` and `other` differ.
    pub fn hamming_distance(&self, other: &BitVector) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// Copy with the given coordinate sign-flipped.
    pub fn with_flipped(&self, i: usize) -> Self {
        let mut bits = self.bits.clone();
        bits[i] = -bits[i];
        Self { bits }
    }
}

impl TryFrom<Vec<i8>> for BitVector {
    type Error = Error;
    fn try_from(bits: Vec<i8>) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<BitVector> for Vec<i8> {
    fn from(v: BitVector) -> Vec<i8> {
        v.bits
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b == 1 { '+' } else { '-' })?;
        }
        Ok(())
    }
}

/// A base classifier: a coordinate projection, its negation, or a constant.
/// Constants exist for test scaffolding; the splitter never selects one
/// because its edge under any class-balanced distribution is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    /// `x ↦ x_i` (0-based coordinate).
    Projection(usize),
    /// `x ↦ -x_i`.
    NegatedProjection(usize),
    /// `x ↦ c` for `c ∈ {-1,+1}`.
    Constant(i8),
}

impl Hypothesis {
    pub fn eval(&self, x: &BitVector) -> i8 {
        match *self {
            Hypothesis::Projection(i) => x.get(i),
            Hypothesis::NegatedProjection(i) => -x.get(i),
            Hypothesis::Constant(c) => c,
        }
    }

    /// True when every referenced coordinate exists in dimension `n`.
    pub fn valid_for(&self, n: usize) -> bool {
        match *self {
            Hypothesis::Projection(i) | Hypothesis::NegatedProjection(i) => i < n,
            Hypothesis::Constant(c) => c == 1 || c == -1,
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Hypothesis::Projection(i) => write!(f, "x{i}"),
            Hypothesis::NegatedProjection(i) => write!(f, "!x{i}"),
            Hypothesis::Constant(c) => write!(f, "{c:+}"),
        }
    }
}

/// A labeled sample `S = ((x_1,y_1),…,(x_m,y_m))` with all instances of one
/// dimension and duplicate instances carrying identical labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    items: Vec<(BitVector, i8)>,
    n: usize,
}

impl LabeledSample {
    pub fn new(items: Vec<(BitVector, i8)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Invalid {
                what: "sample",
                detail: "must contain at least one example".into(),
            });
        }
        let n = items[0].0.len();
        let mut seen: HashMap<&[i8], i8> = HashMap::with_capacity(items.len());
        for (x, y) in &items {
            if x.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: x.len(),
                });
            }
            if *y != 1 && *y != -1 {
                return Err(Error::Invalid {
                    what: "sample",
                    detail: format!("label {y} is not ±1"),
                });
            }
            if let Some(&prev) = seen.get(x.bits()) {
                if prev != *y {
                    return Err(Error::Invalid {
                        what: "sample",
                        detail: format!("instance {x} appears with labels {prev} and {y}"),
                    });
                }
            } else {
                seen.insert(x.bits(), *y);
            }
        }
        drop(seen);
        Ok(Self { items, n })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn items(&self) -> &[(BitVector, i8)] {
        &self.items
    }

    pub fn instance(&self, i: usize) -> &BitVector {
        &self.items[i].0
    }

    pub fn label(&self, i: usize) -> i8 {
        self.items[i].1
    }

    pub fn positive_count(&self) -> usize {
        self.items.iter().filter(|(_, y)| *y == 1).count()
    }

    /// Parse the line-oriented text format: one `s₁s₂…sₙ L` per line with
    /// `sᵢ ∈ {+,-}` and `L ∈ {+1,-1}`; `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut items = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (pattern, label) = match (parts.next(), parts.next(), parts.next()) {
                (Some(p), Some(l), None) => (p, l),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `<pattern> <label>`",
                        lineno + 1
                    )))
                }
            };
            let bits = pattern
                .chars()
                .map(|c| match c {
                    '+' => Ok(1),
                    '-' => Ok(-1),
                    other => Err(Error::Parse(format!(
                        "line {}: bad instance character {other:?}",
                        lineno + 1
                    ))),
                })
                .collect::<Result<Vec<i8>>>()?;
            let y = match label {
                "+1" => 1,
                "-1" => -1,
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: bad label {other:?} (want +1 or -1)",
                        lineno + 1
                    )))
                }
            };
            items.push((BitVector::new(bits)?, y));
        }
        Self::new(items)
    }

    /// Parse the JSON alternative `{"n":…, "items":[{"x":[…],"y":…},…]}`.
    pub fn parse_json(text: &str) -> Result<Self> {
        let raw: SampleJson = serde_json::from_str(text)?;
        let items = raw
            .items
            .into_iter()
            .map(|it| Ok((BitVector::new(it.x)?, it.y)))
            .collect::<Result<Vec<_>>>()?;
        let sample = Self::new(items)?;
        if sample.dim() != raw.n {
            return Err(Error::DimensionMismatch {
                expected: raw.n,
                actual: sample.dim(),
            });
        }
        Ok(sample)
    }

    /// Auto-detect the two accepted formats: JSON when the first non-blank
    /// character is `{`, the text format otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim_start().chars().next() {
            Some('{') => Self::parse_json(text),
            _ => Self::parse_text(text),
        }
    }

    pub fn to_json(&self) -> String {
        let raw = SampleJson {
            n: self.n,
            items: self
                .items
                .iter()
                .map(|(x, y)| SampleItemJson {
                    x: x.bits().to_vec(),
                    y: *y,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("sample serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct SampleJson {
    n: usize,
    items: Vec<SampleItemJson>,
}

#[derive(Serialize, Deserialize)]
struct SampleItemJson {
    x: Vec<i8>,
    y: i8,
}

/// Nonnegative weights over sample positions summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
}

const MASS_TOLERANCE: f64 = 1e-9;

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid {
                what: "distribution",
                detail: "no weights".into(),
            });
        }
        if let Some(&w) = weights.iter().find(|&&w| !(w >= 0.0)) {
            return Err(Error::Invalid {
                what: "distribution",
                detail: format!("weight {w} is negative or NaN"),
            });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Invalid {
                what: "distribution",
                detail: format!("weights sum to {total}, not 1"),
            });
        }
        Ok(Self { weights })
    }

    pub fn uniform(m: usize) -> Self {
        Self {
            weights: vec![1.0 / m as f64; m],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Class-balanced rescaling of `self`: each weight is divided by twice
    /// its label-class mass, so both classes end up with mass exactly 1/2.
    pub fn class_balanced(&self, sample: &LabeledSample) -> Result<Distribution> {
        check_len(self, sample)?;
        let mut pos_mass = 0.0;
        let mut neg_mass = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            if sample.label(i) == 1 {
                pos_mass += w;
            } else {
                neg_mass += w;
            }
        }
        if pos_mass <= 0.0 || neg_mass <= 0.0 {
            return Err(Error::PureNode {
                positives: if pos_mass > 0.0 { 1 } else { 0 },
                negatives: if neg_mass > 0.0 { 1 } else { 0 },
            });
        }
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let mass = if sample.label(i) == 1 { pos_mass } else { neg_mass };
                w / (2.0 * mass)
            })
            .collect();
        Ok(Distribution { weights })
    }
}

fn check_len(d: &Distribution, sample: &LabeledSample) -> Result<()> {
    if d.len() != sample.len() {
        return Err(Error::DimensionMismatch {
            expected: sample.len(),
            actual: d.len(),
        });
    }
    Ok(())
}

/// Pseudo-entropy `G(q) = 2√(q(1-q))`: concave, symmetric about 1/2,
/// `G(0)=G(1)=0`, `G(1/2)=1`, and `G(q) ≥ min(q, 1-q)` everywhere.
pub fn pseudo_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::OutOfRange {
            what: "probability",
            value: q,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(g(q))
}

/// `pseudo_entropy` without the range check, for internal callers whose `q`
/// is a clamped ratio of counts.
pub(crate) fn g(q: f64) -> f64 {
    2.0 * (q * (1.0 - q)).max(0.0).sqrt()
}

pub(crate) fn clamped_ratio(num: f64, den: f64) -> f64 {
    if den <= 0.0 {
        0.0
    } else {
        (num / den).clamp(0.0, 1.0)
    }
}

/// The weighted correlation `Σ_i d_i·y_i·h(x_i)` of a hypothesis with the
/// sample labels; 1 when `h` matches every label, -1 when it opposes them.
pub fn edge(d: &Distribution, sample: &LabeledSample, h: &Hypothesis) -> Result<f64> {
    check_len(d, sample)?;
    Ok(sample
        .items()
        .iter()
        .zip(d.weights())
        .map(|((x, y), w)| w * f64::from(*y) * f64::from(h.eval(x)))
        .sum())
}

/// The balanced distribution of a node: mass 1/(2·#pos) on each positive
/// member, 1/(2·#neg) on each negative member, zero elsewhere. Fails with
/// [`Error::PureNode`] when the index set carries only one class; callers
/// must route such nodes to a leaf first.
pub fn balanced_distribution(member_ids: &[usize], sample: &LabeledSample) -> Result<Distribution> {
    let mut positives = 0usize;
    let mut negatives = 0usize;
    for &i in member_ids {
        if i >= sample.len() {
            return Err(Error::DimensionMismatch {
                expected: sample.len(),
                actual: i + 1,
            });
        }
        if sample.label(i) == 1 {
            positives += 1;
        } else {
            negatives += 1;
        }
    }
    if positives == 0 || negatives == 0 {
        return Err(Error::PureNode {
            positives,
            negatives,
        });
    }
    let wpos = 1.0 / (2.0 * positives as f64);
    let wneg = 1.0 / (2.0 * negatives as f64);
    let mut weights = vec![0.0; sample.len()];
    for &i in member_ids {
        weights[i] = if sample.label(i) == 1 { wpos } else { wneg };
    }
    Ok(Distribution { weights })
}

/// Label entropy `G(Pr_d{y=1})` of a sample under a distribution.
pub fn entropy(d: &Distribution, sample: &LabeledSample) -> Result<f64> {
    check_len(d, sample)?;
    let total: f64 = d.weights().iter().sum();
    let pos: f64 = d
        .weights()
        .iter()
        .enumerate()
        .filter(|(i, _)| sample.label(*i) == 1)
        .map(|(_, w)| w)
        .sum();
    Ok(g(clamped_ratio(pos, total)))
}

/// Conditional entropy of the labels given a hypothesis:
/// `Pr_d{h=1}·G(q⁺) + Pr_d{h=-1}·G(q⁻)` with `q± = Pr_d{y=1 | h=±1}`.
/// Zero-probability branches contribute nothing.
pub fn conditional_entropy(
    d: &Distribution,
    sample: &LabeledSample,
    h: &Hypothesis,
) -> Result<f64> {
    check_len(d, sample)?;
    let mut mass = [0.0f64; 2]; // h = -1, h = +1
    let mut pos_mass = [0.0f64; 2];
    for (i, (x, y)) in sample.items().iter().enumerate() {
        let side = usize::from(h.eval(x) == 1);
        let w = d.weight(i);
        mass[side] += w;
        if *y == 1 {
            pos_mass[side] += w;
        }
    }
    let mut total = 0.0;
    for side in 0..2 {
        if mass[side] > 0.0 {
            total += mass[side] * g(clamped_ratio(pos_mass[side], mass[side]));
        }
    }
    Ok(total)
}

/// Frontier entropy `Σ_{u ∈ N(T)} p_u·G(q_u)` under the uniform distribution
/// over the sample. Zero when every path already terminates at a leaf.
pub fn frontier_entropy(diagram: &Diagram, sample: &LabeledSample) -> Result<f64> {
    let stats = diagram.stats(sample)?;
    Ok(stats.frontier_entropy())
}

/// Entropy remaining after conditioning the frontier on one more hypothesis:
/// every frontier node is split by `h` and the two halves contribute
/// `p·G(q)` each. Equals the frontier entropy of the post-split diagram.
pub fn frontier_conditional_entropy(
    diagram: &Diagram,
    sample: &LabeledSample,
    h: &Hypothesis,
) -> Result<f64> {
    if !h.valid_for(sample.dim()) {
        return Err(Error::Invalid {
            what: "hypothesis",
            detail: format!("{h} is out of range for dimension {}", sample.dim()),
        });
    }
    let stats = diagram.stats(sample)?;
    let m = sample.len() as f64;
    let mut total = 0.0;
    for node in stats.frontier_nodes() {
        let mut count = [0usize; 2];
        let mut pos = [0usize; 2];
        for &i in &node.sample_ids {
            let side = usize::from(h.eval(sample.instance(i)) == 1);
            count[side] += 1;
            if sample.label(i) == 1 {
                pos[side] += 1;
            }
        }
        for side in 0..2 {
            if count[side] > 0 {
                let q = pos[side] as f64 / count[side] as f64;
                total += (count[side] as f64 / m) * g(q);
            }
        }
    }
    Ok(total)
}

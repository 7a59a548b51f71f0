//! Linear threshold functions, their margin certificate, and the lifted
//! projection hypothesis set.
//!
//! The margin ρ of a threshold function is the best achievable normalized
//! separation over all weight representations. It is certified by a linear
//! program whose dual is the hardest class-balanced distribution: the dual
//! optimum equals the best uniform edge any lifted projection can achieve,
//! so ρ is also the worst-case per-iteration edge available to the
//! boosting loop.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::data::{BitVector, Hypothesis, LabeledSample};
use crate::simplex::{self, LinearProgram, LpConstraint, Relation};
use crate::{Error, Result};

/// Default cap for full-cube sample generation (2^n instances).
pub const DEFAULT_SAMPLE_CAP: usize = 20;
/// Default cap for the margin program (2^n constraint rows).
pub const DEFAULT_MARGIN_CAP: usize = 16;
/// Absolute ceiling for either cap.
pub const HARD_CAP: usize = 24;

/// `f(x) = +1` iff `w·x + b ≥ 0` over ±1 inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LtfJson", into = "LtfJson")]
pub struct ThresholdFunction {
    weights: Vec<f64>,
    bias: f64,
}

impl ThresholdFunction {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid {
                what: "threshold function",
                detail: "no weights".into(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(Error::Invalid {
                what: "threshold function",
                detail: "non-finite weight or bias".into(),
            });
        }
        Ok(Self { weights, bias })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Step activation: `≥ 0` maps to +1.
    pub fn eval(&self, x: &BitVector) -> Result<i8> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let total: f64 = self
            .weights
            .iter()
            .zip(x.bits())
            .map(|(w, &b)| w * f64::from(b))
            .sum();
        Ok(if total + self.bias >= 0.0 { 1 } else { -1 })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ltf serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct LtfJson {
    n: usize,
    weights: Vec<f64>,
    bias: f64,
}

impl TryFrom<LtfJson> for ThresholdFunction {
    type Error = Error;
    fn try_from(raw: LtfJson) -> Result<Self> {
        if raw.weights.len() != raw.n {
            return Err(Error::DimensionMismatch {
                expected: raw.n,
                actual: raw.weights.len(),
            });
        }
        ThresholdFunction::new(raw.weights, raw.bias)
    }
}

impl From<ThresholdFunction> for LtfJson {
    fn from(f: ThresholdFunction) -> LtfJson {
        LtfJson {
            n: f.weights.len(),
            weights: f.weights,
            bias: f.bias,
        }
    }
}

/// All `2^n` labeled instances in lexicographic order.
pub fn full_sample(f: &ThresholdFunction) -> Result<LabeledSample> {
    full_sample_with_cap(f, DEFAULT_SAMPLE_CAP)
}

pub fn full_sample_with_cap(f: &ThresholdFunction, cap: usize) -> Result<LabeledSample> {
    let n = f.dim();
    let cap = cap.min(HARD_CAP);
    if n > cap {
        return Err(Error::DimensionCap { n, cap });
    }
    let items = (0..1usize << n)
        .map(|i| {
            let x = BitVector::from_index(i, n);
            let y = f.eval(&x)?;
            Ok((x, y))
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledSample::new(items)
}

/// The `2n` lifted hypotheses: projections in coordinate order, then their
/// negations. With nonnegative weights over this set, any threshold
/// function is representable.
pub fn lifted_hypotheses(n: usize) -> Vec<Hypothesis> {
    (0..n)
        .map(Hypothesis::Projection)
        .chain((0..n).map(Hypothesis::NegatedProjection))
        .collect()
}

/// Margin certificate: the optimal margin, a realizing lifted-weight
/// representation, and the hardest class-balanced distribution with its
/// achievable edge. `gap` compares the primal value of the recovered
/// representation against the dual objective.
#[derive(Debug, Clone, Serialize)]
pub struct MarginCertificate {
    pub rho: f64,
    /// Nonnegative weights over the lifted hypothesis set, summing to one.
    pub lifted_weights: Vec<f64>,
    pub bias: f64,
    /// Hardest distribution over the cube, in lexicographic instance order.
    pub dual_weights: Vec<f64>,
    /// Dual objective (best edge under the hardest distribution).
    pub dual_objective: f64,
    /// `min_x f(x)·(Σ w_i h_i(x) + b)` for the recovered representation.
    pub primal_min_margin: f64,
    /// `max_i Σ_x d_x f(x) h_i(x)` for the recovered dual distribution.
    pub dual_max_edge: f64,
    /// Dual mass on the positive and negative classes (1/2 each).
    pub class_mass: [f64; 2],
    /// Instances carrying dual mass above 1e-9.
    pub dual_support: usize,
    pub gap: f64,
    pub lp_pivots: usize,
}

impl MarginCertificate {
    /// Evaluate the recovered lifted representation; reproduces the original
    /// function on the whole cube whenever ρ > 0.
    pub fn eval_lifted(&self, x: &BitVector) -> i8 {
        let n = self.lifted_weights.len() / 2;
        let mut total = self.bias;
        for i in 0..n {
            let xi = f64::from(x.get(i));
            total += self.lifted_weights[i] * xi;
            total -= self.lifted_weights[n + i] * xi;
        }
        if total >= 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn report_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("margin report serialization cannot fail")
    }
}

/// Certify the margin of `f` by solving the class-balanced hardest
/// distribution program and reading the weight representation off its row
/// multipliers. Constant functions have no margin and are rejected.
pub fn margin(f: &ThresholdFunction) -> Result<MarginCertificate> {
    margin_with_cap(f, DEFAULT_MARGIN_CAP)
}

pub fn margin_with_cap(f: &ThresholdFunction, cap: usize) -> Result<MarginCertificate> {
    let n = f.dim();
    let cap = cap.min(HARD_CAP);
    if n > cap {
        return Err(Error::DimensionCap { n, cap });
    }
    let sample = full_sample_with_cap(f, cap)?;
    let m = sample.len();
    let positives = sample.positive_count();
    if positives == 0 || positives == m {
        return Err(Error::TrivialFunction {
            value: sample.label(0),
        });
    }

    let hypotheses = lifted_hypotheses(n);
    // Variables: one mass per instance, then the edge bound γ.
    // minimize γ  s.t.  Σ_x d_x·f(x)·h_i(x) ≤ γ  for every lifted h_i,
    //                   Σ_{f(x)=+1} d_x = 1/2,  Σ_{f(x)=-1} d_x = 1/2.
    let mut constraints = Vec::with_capacity(2 * n + 2);
    for h in &hypotheses {
        let mut coeffs = vec![0.0; m + 1];
        for (i, (x, y)) in sample.items().iter().enumerate() {
            coeffs[i] = f64::from(*y) * f64::from(h.eval(x));
        }
        coeffs[m] = -1.0;
        constraints.push(LpConstraint {
            coeffs,
            relation: Relation::LessEq,
            rhs: 0.0,
        });
    }
    for class in [1i8, -1] {
        let mut coeffs = vec![0.0; m + 1];
        for (i, (_, y)) in sample.items().iter().enumerate() {
            if *y == class {
                coeffs[i] = 1.0;
            }
        }
        constraints.push(LpConstraint {
            coeffs,
            relation: Relation::Eq,
            rhs: 0.5,
        });
    }
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let solution = simplex::solve(&LinearProgram {
        objective,
        constraints,
    })?;

    // Row multipliers of the edge rows are the primal lifted weights; the
    // class-mass multipliers combine into bias and margin.
    let mut lifted_weights: Vec<f64> = solution.row_duals[..2 * n]
        .iter()
        .map(|&y| (-y).max(0.0))
        .collect();
    let alpha = solution.row_duals[2 * n];
    let beta = solution.row_duals[2 * n + 1];
    let mut bias = (beta - alpha) / 2.0;
    let mut rho = (alpha + beta) / 2.0;
    let weight_sum: f64 = lifted_weights.iter().sum();
    if weight_sum < 0.5 {
        return Err(Error::Invalid {
            what: "margin certificate",
            detail: format!("degenerate multiplier sum {weight_sum}"),
        });
    }
    for w in &mut lifted_weights {
        *w /= weight_sum;
    }
    bias /= weight_sum;
    rho /= weight_sum;

    let dual_weights: Vec<f64> = solution.variables[..m].to_vec();
    let dual_objective = solution.objective;

    let mut primal_min_margin = f64::INFINITY;
    for (x, y) in sample.items() {
        let mut total = bias;
        for (i, h) in hypotheses.iter().enumerate() {
            total += lifted_weights[i] * f64::from(h.eval(x));
        }
        primal_min_margin = primal_min_margin.min(f64::from(*y) * total);
    }
    let mut dual_max_edge = f64::NEG_INFINITY;
    for h in &hypotheses {
        let edge: f64 = sample
            .items()
            .iter()
            .zip(&dual_weights)
            .map(|((x, y), d)| d * f64::from(*y) * f64::from(h.eval(x)))
            .sum();
        dual_max_edge = dual_max_edge.max(edge);
    }
    let mut class_mass = [0.0; 2];
    for (i, (_, y)) in sample.items().iter().enumerate() {
        class_mass[usize::from(*y == 1)] += dual_weights[i];
    }
    let dual_support = dual_weights.iter().filter(|&&d| d > 1e-9).count();

    Ok(MarginCertificate {
        gap: (primal_min_margin - dual_objective).abs(),
        rho,
        lifted_weights,
        bias,
        dual_weights,
        dual_objective,
        primal_min_margin,
        dual_max_edge,
        class_mass: [class_mass[1], class_mass[0]],
        dual_support,
        lp_pivots: solution.pivots,
    })
}

// ---- integer weight scaling ------------------------------------------------

/// Scale weights and bias to integers: with `α = max(|w_1|,…,|w_n|,|b|)`,
/// every value becomes `⌊10^p·v/α⌋` (floor toward −∞). The quotient is
/// computed exactly over the rational values the floats denote, so floor
/// boundaries are never decided by intermediate rounding. Note that inputs
/// are used exactly as represented: a literal like `0.1` denotes its nearest
/// binary float, not the decimal 1/10 — parse decimal strings with
/// [`integer_scale_decimal`] when that distinction matters.
pub fn integer_scale(weights: &[f64], bias: f64, digits: u32) -> Result<(Vec<i64>, i64)> {
    check_digits(digits)?;
    if weights.iter().all(|w| *w == 0.0) && bias == 0.0 {
        return Err(Error::Invalid {
            what: "integer scaling",
            detail: "all weights and the bias are zero".into(),
        });
    }
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(Error::Invalid {
            what: "integer scaling",
            detail: "non-finite input".into(),
        });
    }
    let alpha = weights
        .iter()
        .map(|w| w.abs())
        .fold(bias.abs(), f64::max);
    let (alpha_num, alpha_exp) = decompose(alpha);
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = |v: f64| -> i64 {
        let (num, exp) = decompose(v);
        // 10^p · num·2^exp / (alpha_num·2^alpha_exp)
        let mut numerator = &num * &scale;
        let mut denominator = alpha_num.clone();
        let shift = exp - alpha_exp;
        if shift >= 0 {
            numerator <<= shift as u64;
        } else {
            denominator <<= (-shift) as u64;
        }
        floor_div(&numerator, &denominator)
    };
    let scaled_weights = weights.iter().map(|&w| scaled(w)).collect();
    Ok((scaled_weights, scaled(bias)))
}

/// [`integer_scale`] over decimal strings, interpreted exactly (so `"0.1"`
/// is the rational 1/10).
pub fn integer_scale_decimal(weights: &[&str], bias: &str, digits: u32) -> Result<(Vec<i64>, i64)> {
    check_digits(digits)?;
    let parsed_weights = weights
        .iter()
        .map(|s| parse_decimal(s))
        .collect::<Result<Vec<_>>>()?;
    let parsed_bias = parse_decimal(bias)?;
    if parsed_weights.iter().all(|(n, _)| n == &BigInt::from(0)) && parsed_bias.0 == BigInt::from(0)
    {
        return Err(Error::Invalid {
            what: "integer scaling",
            detail: "all weights and the bias are zero".into(),
        });
    }
    // α = max |value|; value = num/10^frac.
    let mut alpha = &parsed_bias;
    for candidate in &parsed_weights {
        if decimal_abs_less(alpha, candidate) {
            alpha = candidate;
        }
    }
    let alpha = (abs(&alpha.0), alpha.1);
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = |(num, frac): &(BigInt, u32)| -> i64 {
        // 10^p · (num/10^frac) / (alpha_num/10^alpha_frac)
        let numerator = num * &scale * BigInt::from(10u32).pow(alpha.1);
        let denominator = &alpha.0 * BigInt::from(10u32).pow(*frac);
        floor_div(&numerator, &denominator)
    };
    Ok((
        parsed_weights.iter().map(&scaled).collect(),
        scaled(&parsed_bias),
    ))
}

fn check_digits(digits: u32) -> Result<()> {
    if !(1..=18).contains(&digits) {
        return Err(Error::OutOfRange {
            what: "precision digits",
            value: digits as f64,
            lo: 1.0,
            hi: 18.0,
        });
    }
    Ok(())
}

/// Exact value of a finite f64 as `num · 2^exp`.
fn decompose(v: f64) -> (BigInt, i64) {
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exponent = ((bits >> 52) & 0x7ff) as i64;
    let fraction = bits & 0xf_ffff_ffff_ffff;
    let (mantissa, exp) = if exponent == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1 << 52), exponent - 1075)
    };
    (BigInt::from(sign) * BigInt::from(mantissa), exp)
}

fn abs(v: &BigInt) -> BigInt {
    if v < &BigInt::from(0) {
        -v
    } else {
        v.clone()
    }
}

/// `|a| < |b|` for decimals `(num, frac)` meaning `num/10^frac`.
fn decimal_abs_less(a: &(BigInt, u32), b: &(BigInt, u32)) -> bool {
    abs(&a.0) * BigInt::from(10u32).pow(b.1) < abs(&b.0) * BigInt::from(10u32).pow(a.1)
}

fn floor_div(num: &BigInt, den: &BigInt) -> i64 {
    let zero = BigInt::from(0);
    debug_assert!(den > &zero);
    let q = num / den;
    let r = num - &q * den;
    let q = if r < zero { q - 1 } else { q };
    i64::try_from(q).expect("scaled weight fits i64 for p ≤ 18")
}

fn parse_decimal(s: &str) -> Result<(BigInt, u32)> {
    let err = || Error::Parse(format!("bad decimal literal {s:?}"));
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() {
        BigInt::from(0)
    } else {
        digits.parse().map_err(|_| err())?
    };
    Ok((BigInt::from(sign) * num, frac_part.len() as u32))
}

//! Robustness metrics: the minimum number of input flips that changes a
//! circuit's output, per instance and averaged over a sample or the full
//! cube.
//!
//! Per-instance robustness runs the radius loop: for k = 1..n, ask the SAT
//! engine whether some input within Hamming distance k flips the output;
//! the first satisfiable radius is the answer. Negative instances are
//! handled by complementing the circuit before the loop, which keeps the
//! loop itself identical for both signs. The full-cube average is computed
//! by enumeration instead of SAT — cheaper and an independent code path.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{hamming_circuit, Circuit};
use crate::data::BitVector;
use crate::sat::{solve_with_config, tseitin, SatOutcome, SolveConfig};
use crate::{Error, Result};

pub const DEFAULT_MODEL_CAP: usize = 16;

#[derive(Debug, Clone)]
pub struct SrConfig {
    pub sat_timeout: Option<Duration>,
}

impl Default for SrConfig {
    fn default() -> Self {
        Self {
            sat_timeout: Some(Duration::from_secs(60)),
        }
    }
}

/// Robustness of one instance: the radius, the adversarial witness found at
/// that radius, and how much work the scan took.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceReport {
    pub instance: BitVector,
    pub label: i8,
    pub radius: usize,
    pub witness: Option<BitVector>,
    pub queries: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleReport {
    pub per_instance: Vec<InstanceReport>,
    pub sr: f64,
    pub seconds: f64,
}

impl SampleReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub n: usize,
    pub mr: f64,
    /// Radius per instance in lexicographic cube order.
    pub radii: Vec<usize>,
}

/// Check that the circuit is satisfiable and falsifiable; constant circuits
/// have no robustness.
fn check_nontrivial(f: &Circuit, config: &SolveConfig) -> Result<()> {
    match solve_with_config(&tseitin(f)?.cnf, config) {
        SatOutcome::Unsat => return Err(Error::TrivialFunction { value: -1 }),
        SatOutcome::Timeout => return Err(Error::Indeterminate { k_reached: 0 }),
        SatOutcome::Sat(_) => {}
    }
    match solve_with_config(&tseitin(&f.negate())?.cnf, config) {
        SatOutcome::Unsat => Err(Error::TrivialFunction { value: 1 }),
        SatOutcome::Timeout => Err(Error::Indeterminate { k_reached: 0 }),
        SatOutcome::Sat(_) => Ok(()),
    }
}

/// Smallest k such that flipping at most k coordinates of `x` changes the
/// circuit's output.
pub fn instance_robustness(f: &Circuit, x: &BitVector, cfg: &SrConfig) -> Result<InstanceReport> {
    let config = SolveConfig {
        timeout: cfg.sat_timeout,
    };
    check_nontrivial(f, &config)?;
    let negated = f.negate();
    instance_radius(f, &negated, x, &config)
}

fn instance_radius(
    f: &Circuit,
    f_negated: &Circuit,
    x: &BitVector,
    config: &SolveConfig,
) -> Result<InstanceReport> {
    let n = x.len();
    if n != f.inputs().len() {
        return Err(Error::DimensionMismatch {
            expected: f.inputs().len(),
            actual: n,
        });
    }
    let start = Instant::now();
    let label = if f.evaluate_pm1(x)? { 1 } else { -1 };
    // Look for a counter-witness: an input the opposite circuit accepts.
    let opposite = if label == 1 { f_negated } else { f };
    for k in 1..=n {
        let query = hamming_circuit(x, k)?.conjoin(opposite);
        let encoding = tseitin(&query)?;
        match solve_with_config(&encoding.cnf, config) {
            SatOutcome::Sat(model) => {
                let bits: Vec<i8> = encoding
                    .inputs_from_model(&model)
                    .iter()
                    .map(|&b| if b { 1 } else { -1 })
                    .collect();
                let witness = BitVector::new(bits)?;
                debug_assert!(witness.hamming_distance(x)? <= k);
                debug_assert_ne!(f.evaluate_pm1(&witness)?, f.evaluate_pm1(x)?);
                return Ok(InstanceReport {
                    instance: x.clone(),
                    label,
                    radius: k,
                    witness: Some(witness),
                    queries: k,
                    seconds: start.elapsed().as_secs_f64(),
                });
            }
            SatOutcome::Unsat => continue,
            SatOutcome::Timeout => return Err(Error::Indeterminate { k_reached: k - 1 }),
        }
    }
    // Unreachable for a non-trivial circuit: the radius-n ball is the cube.
    Err(Error::Invalid {
        what: "robustness scan",
        detail: "no flip found within radius n on a non-trivial circuit".into(),
    })
}

/// Satisfiability of the radius-k query for every k = 1..n, without early
/// exit. Diagnostic used to confirm that the SAT frontier is monotone
/// (Hamming balls nest, so once satisfiable always satisfiable).
pub fn robustness_scan(f: &Circuit, x: &BitVector, cfg: &SrConfig) -> Result<Vec<bool>> {
    let config = SolveConfig {
        timeout: cfg.sat_timeout,
    };
    check_nontrivial(f, &config)?;
    let label = if f.evaluate_pm1(x)? { 1 } else { -1 };
    let negated = f.negate();
    let opposite = if label == 1 { &negated } else { f };
    let mut flags = Vec::with_capacity(x.len());
    for k in 1..=x.len() {
        let query = hamming_circuit(x, k)?.conjoin(opposite);
        match solve_with_config(&tseitin(&query)?.cnf, &config) {
            SatOutcome::Sat(_) => flags.push(true),
            SatOutcome::Unsat => flags.push(false),
            SatOutcome::Timeout => return Err(Error::Indeterminate { k_reached: k - 1 }),
        }
    }
    Ok(flags)
}

/// Mean instance robustness over a set of instances. Queries run in
/// parallel; results aggregate in input order.
pub fn sample_robustness(
    f: &Circuit,
    instances: &[BitVector],
    cfg: &SrConfig,
) -> Result<SampleReport> {
    if instances.is_empty() {
        return Err(Error::Invalid {
            what: "sample",
            detail: "no instances to verify".into(),
        });
    }
    let config = SolveConfig {
        timeout: cfg.sat_timeout,
    };
    check_nontrivial(f, &config)?;
    let start = Instant::now();
    let negated = f.negate();
    let outcomes: Vec<Result<InstanceReport>> = instances
        .par_iter()
        .map(|x| instance_radius(f, &negated, x, &config))
        .collect();
    let mut per_instance = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        per_instance.push(outcome?);
    }
    let sr = per_instance.iter().map(|r| r.radius as f64).sum::<f64>() / per_instance.len() as f64;
    Ok(SampleReport {
        per_instance,
        sr,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Mean robustness over the whole cube, by enumeration: label the 2^n
/// inputs, then a breadth-first sweep per class yields every instance's
/// distance to the opposite class. No SAT involved.
pub fn model_robustness(f: &Circuit) -> Result<ModelReport> {
    model_robustness_with_cap(f, DEFAULT_MODEL_CAP)
}

pub fn model_robustness_with_cap(f: &Circuit, cap: usize) -> Result<ModelReport> {
    let n = f.inputs().len();
    let cap = cap.min(crate::ltf::HARD_CAP);
    if n > cap {
        return Err(Error::DimensionCap { n, cap });
    }
    let size = 1usize << n;
    let mut labels = Vec::with_capacity(size);
    for i in 0..size {
        labels.push(f.evaluate_pm1(&BitVector::from_index(i, n))?);
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == size {
        return Err(Error::TrivialFunction {
            value: if positives == size { 1 } else { -1 },
        });
    }
    let dist_to_true = bfs_distances(&labels, true, n);
    let dist_to_false = bfs_distances(&labels, false, n);
    let radii: Vec<usize> = (0..size)
        .map(|i| {
            if labels[i] {
                dist_to_false[i] as usize
            } else {
                dist_to_true[i] as usize
            }
        })
        .collect();
    let mr = radii.iter().map(|&r| r as f64).sum::<f64>() / size as f64;
    Ok(ModelReport { n, mr, radii })
}

/// Multi-source BFS over the hypercube from every vertex of one class.
fn bfs_distances(labels: &[bool], class: bool, n: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; labels.len()];
    let mut queue = std::collections::VecDeque::new();
    for (i, &label) in labels.iter().enumerate() {
        if label == class {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for b in 0..n {
            let j = i ^ (1 << b);
            if dist[j] == u32::MAX {
                dist[j] = dist[i] + 1;
                queue.push_back(j);
            }
        }
    }
    dist
}

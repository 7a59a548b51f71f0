//! The layered boosting loop that grows an aligned decision diagram, plus
//! the per-node baseline it is compared against.
//!
//! Each iteration splits every frontier node with one shared hypothesis
//! (chosen to maximize the edge on an entropy-weighted mixture of per-node
//! balanced distributions), absorbs pure children into the leaves, and
//! merges the remaining children whose positive fractions fall in the same
//! interval of a fresh net. The baseline differs in exactly one way: every
//! frontier node picks its own best hypothesis, so the output is a plain
//! BDD rather than an ABDD.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::data::{balanced_distribution, g, Distribution, Hypothesis, LabeledSample};
use crate::diagram::{Diagram, DiagramStats, NodeId};
use crate::{Error, Result};

/// Interval partition `0 = v₀ < v₁ < … < v_w = 1` such that within any one
/// interval the pseudo-entropy varies by at most a `(1+λ)` factor or stays
/// below the floor `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    breakpoints: Vec<f64>,
    delta: f64,
    lambda: f64,
}

impl Net {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Index of the interval containing `q`. A value exactly on a breakpoint
    /// joins the lower-index interval (breakpoints belong to the interval
    /// they close).
    pub fn interval_of(&self, q: f64) -> usize {
        debug_assert!((0.0..=1.0).contains(&q));
        for (k, window) in self.breakpoints.windows(2).enumerate() {
            if q <= window[1] {
                return k;
            }
        }
        self.len() - 1
    }

    /// Check the defining property by dense sampling: for `samples` points
    /// `q` per interval, `max_{q'∈I} G(q') ≤ max(δ, (1+λ)·G(q))`.
    pub fn check_validity(&self, samples: usize) -> bool {
        for window in self.breakpoints.windows(2) {
            let (a, b) = (window[0], window[1]);
            // G is unimodal with peak at 1/2, so the interval maximum is at
            // an endpoint unless the interval straddles 1/2.
            let max_g = if a < 0.5 && 0.5 < b {
                1.0
            } else {
                g(a).max(g(b))
            };
            for i in 0..samples {
                let q = a + (b - a) * (i as f64 + 0.5) / samples as f64;
                if max_g > self.delta.max((1.0 + self.lambda) * g(q)) + 1e-12 {
                    return false;
                }
            }
        }
        true
    }
}

/// Build a `(δ,λ)`-net from geometrically spaced pseudo-entropy levels
/// `δ·(1+λ)^j`: each level below 1 contributes its two `G`-preimages, and
/// `{0, 1/2, 1}` complete the partition. With `δ ≥ 1` the single interval
/// `[0,1]` already satisfies the contract.
pub fn build_net(delta: f64, lambda: f64) -> Result<Net> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::OutOfRange {
            what: "net delta",
            value: delta,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::OutOfRange {
            what: "net lambda",
            value: lambda,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let mut points = vec![0.0, 0.5, 1.0];
    let mut level = delta;
    while level < 1.0 {
        // G(q) = level at q = (1 ± sqrt(1 - level²))/2. The lower preimage
        // is rewritten to avoid cancellation for small levels.
        let root = ((1.0 - level) * (1.0 + level)).max(0.0).sqrt();
        let low = level * level / (2.0 * (1.0 + root));
        points.push(low);
        points.push(1.0 - low);
        level *= 1.0 + lambda;
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    Ok(Net {
        breakpoints: points,
        delta,
        lambda,
    })
}

/// Inputs of a boosting run.
#[derive(Debug, Clone)]
pub struct BoostConfig {
    /// Target frontier entropy; training error ends below this.
    pub epsilon: f64,
    /// Safety cap on iterations; `None` defaults to 1000 (use
    /// [`BoostConfig::iteration_cap_for_margin`] when the margin is known).
    pub max_iterations: Option<usize>,
    pub hypotheses: Vec<Hypothesis>,
}

impl BoostConfig {
    pub fn new(epsilon: f64, hypotheses: Vec<Hypothesis>) -> Self {
        Self {
            epsilon,
            max_iterations: None,
            hypotheses,
        }
    }

    /// `10·⌈4·ln(1/ε)/ρ²⌉`: ten times the theoretical iteration bound.
    pub fn iteration_cap_for_margin(mut self, rho: f64) -> Self {
        if rho > 0.0 {
            let bound = (4.0 * (1.0 / self.epsilon).ln() / (rho * rho)).ceil();
            self.max_iterations = Some(10 * (bound.max(1.0) as usize));
        }
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: self.epsilon,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if self.hypotheses.is_empty() {
            return Err(Error::Invalid {
                what: "boost config",
                detail: "hypothesis set is empty".into(),
            });
        }
        for h in &self.hypotheses {
            if !h.valid_for(n) {
                return Err(Error::Invalid {
                    what: "boost config",
                    detail: format!("hypothesis {h} out of range for dimension {n}"),
                });
            }
        }
        Ok(())
    }

    fn cap(&self) -> usize {
        self.max_iterations.unwrap_or(1000)
    }
}

/// One iteration of the trace: the split that was chosen, the entropy before
/// the split, after the split, and after the merge, and the merge net's
/// parameters (which fully determine it).
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Display form of the chosen hypothesis (semicolon-joined per-node
    /// choices for the baseline).
    pub hypothesis: String,
    /// Achieved edge on the mixture distribution (aggregated per-node edge
    /// for the baseline).
    pub edge: f64,
    pub lambda_hat: f64,
    pub delta_hat: f64,
    pub entropy_before: f64,
    pub entropy_split: f64,
    pub entropy_merged: f64,
    /// Frontier width after the merge.
    pub width: usize,
    /// Training error of the diagram entering this iteration.
    pub train_error_before: f64,
    /// `Σ_u p'_u·γ_{u,h}²`, the mixture-edge Jensen bound's left side.
    pub jensen_lhs: f64,
    /// Children absorbed into leaves this iteration (pure or unreached).
    pub absorbed: usize,
    /// Whether the net merge ran (skipped when no entropy reduction).
    pub merged: bool,
}

/// Outcome of a boosting run.
#[derive(Debug, Clone)]
pub struct BoostRun {
    pub diagram: Diagram,
    pub trace: Vec<IterationRecord>,
    pub final_entropy: f64,
    pub final_error: f64,
    pub converged: bool,
}

impl BoostRun {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// Trace export with the stable column contract.
    pub fn trace_csv(&self) -> String {
        let mut out =
            String::from("iter,hypothesis,edge,lambda_hat,delta_hat,H_before,H_split,H_merged,width\n");
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.iteration,
                r.hypothesis,
                r.edge,
                r.lambda_hat,
                r.delta_hat,
                r.entropy_before,
                r.entropy_split,
                r.entropy_merged,
                r.width
            );
        }
        out
    }
}

/// Frontier snapshot used by the split step: per-node balanced
/// distributions, entropy shares, and edges for every hypothesis.
struct FrontierView {
    ids: Vec<NodeId>,
    /// `p'_u = p_u·G(q_u) / Σ p·G(q)`.
    entropy_share: Vec<f64>,
    /// `edges[u][h]` = edge of hypothesis `h` under node `u`'s balanced
    /// distribution.
    edges: Vec<Vec<f64>>,
    members: Vec<Vec<usize>>,
}

fn frontier_view(
    stats: &DiagramStats,
    sample: &LabeledSample,
    hypotheses: &[Hypothesis],
) -> Result<FrontierView> {
    let ids: Vec<NodeId> = stats.frontier_ids().to_vec();
    if ids.is_empty() {
        return Err(Error::EmptyFrontier);
    }
    let entropy = stats.frontier_entropy();
    let mut entropy_share = Vec::with_capacity(ids.len());
    let mut edges = Vec::with_capacity(ids.len());
    let mut members = Vec::with_capacity(ids.len());
    for node in stats.frontier_nodes() {
        let positives = node.positives;
        let negatives = node.count - node.positives;
        if positives == 0 || negatives == 0 {
            return Err(Error::PureNode {
                positives,
                negatives,
            });
        }
        let wpos = 1.0 / (2.0 * positives as f64);
        let wneg = 1.0 / (2.0 * negatives as f64);
        let node_edges: Vec<f64> = hypotheses
            .iter()
            .map(|h| {
                node.sample_ids
                    .iter()
                    .map(|&i| {
                        let w = if sample.label(i) == 1 { wpos } else { wneg };
                        w * f64::from(sample.label(i)) * f64::from(h.eval(sample.instance(i)))
                    })
                    .sum()
            })
            .collect();
        entropy_share.push(node.reach * g(node.positive_fraction) / entropy);
        edges.push(node_edges);
        members.push(node.sample_ids.clone());
    }
    Ok(FrontierView {
        ids,
        entropy_share,
        edges,
        members,
    })
}

impl FrontierView {
    /// Edge of hypothesis `h` under the mixture `Σ_u p'_u·d^u`.
    fn mixture_edge(&self, h: usize) -> f64 {
        self.entropy_share
            .iter()
            .zip(&self.edges)
            .map(|(share, node_edges)| share * node_edges[h])
            .sum()
    }

    fn jensen_lhs(&self, per_node_choice: &[usize]) -> f64 {
        self.entropy_share
            .iter()
            .zip(&self.edges)
            .zip(per_node_choice)
            .map(|((share, node_edges), &h)| share * node_edges[h] * node_edges[h])
            .sum()
    }
}

/// The decision of one split step.
#[derive(Debug, Clone)]
pub struct SplitChoice {
    pub hypothesis: Hypothesis,
    /// The mixture distribution the hypothesis was scored on.
    pub mixture: Distribution,
    /// Achieved edge.
    pub edge: f64,
}

/// Choose the hypothesis maximizing the edge on the entropy-weighted mixture
/// of per-node balanced distributions. Ties break to the lowest hypothesis
/// index; a best edge ≤ 0 is a weak-learner failure.
pub fn split_select(
    diagram: &Diagram,
    hypotheses: &[Hypothesis],
    sample: &LabeledSample,
) -> Result<SplitChoice> {
    if hypotheses.is_empty() {
        return Err(Error::Invalid {
            what: "hypothesis set",
            detail: "empty".into(),
        });
    }
    let stats = diagram.stats(sample)?;
    let view = frontier_view(&stats, sample, hypotheses)?;
    let (best, edge) = argmax_lowest_index(hypotheses.len(), |h| view.mixture_edge(h));
    if edge <= 0.0 {
        return Err(Error::WeakLearnerFailure { iteration: 0, edge });
    }
    // Materialize the mixture for callers: Σ_u p'_u·d^u.
    let mut weights = vec![0.0; sample.len()];
    for (u, ids) in view.members.iter().enumerate() {
        let d = balanced_distribution(ids, sample)?;
        for &i in ids {
            weights[i] += view.entropy_share[u] * d.weight(i);
        }
    }
    Ok(SplitChoice {
        hypothesis: hypotheses[best],
        mixture: Distribution::new(weights)?,
        edge,
    })
}

fn argmax_lowest_index(len: usize, mut score: impl FnMut(usize) -> f64) -> (usize, f64) {
    let mut best = 0;
    let mut best_score = score(0);
    for h in 1..len {
        let s = score(h);
        if s > best_score {
            best = h;
            best_score = s;
        }
    }
    (best, best_score)
}

/// Result of one merge pass.
#[derive(Debug, Clone, Copy)]
pub struct MergeReport {
    /// Children absorbed into leaves (pure or unreached).
    pub absorbed: usize,
    /// Frontier width after merging.
    pub width: usize,
}

/// Absorb pure (and unreached) frontier nodes into the leaves, then merge
/// all frontier nodes whose positive fraction falls in the same net interval.
/// The surviving frontier is at most as wide as the net.
pub fn merge_frontier(
    diagram: &mut Diagram,
    sample: &LabeledSample,
    net: &Net,
) -> Result<MergeReport> {
    absorb_and_merge(diagram, sample, Some(net))
}

fn absorb_and_merge(
    diagram: &mut Diagram,
    sample: &LabeledSample,
    net: Option<&Net>,
) -> Result<MergeReport> {
    let stats = diagram.stats(sample)?;
    let mut absorbed = 0usize;
    let mut groups: HashMap<usize, Vec<NodeId>> = HashMap::new();
    for node in stats.frontier_nodes() {
        if node.count == 0 || node.positives == 0 {
            diagram.absorb(node.id, false);
            absorbed += 1;
        } else if node.positives == node.count {
            diagram.absorb(node.id, true);
            absorbed += 1;
        } else if let Some(net) = net {
            groups
                .entry(net.interval_of(node.positive_fraction))
                .or_default()
                .push(node.id);
        }
    }
    let mut intervals: Vec<usize> = groups.keys().copied().collect();
    intervals.sort_unstable();
    for interval in intervals {
        let ids = &groups[&interval];
        if ids.len() > 1 {
            diagram.merge(ids)?;
        }
    }
    let refreshed = diagram.stats(sample)?;
    diagram.apply_majorities(&refreshed);
    let width = refreshed.frontier_ids().len();
    debug_assert!(net.is_none() || width <= net.unwrap().len());
    Ok(MergeReport { absorbed, width })
}

enum SplitStrategy {
    /// One hypothesis for the whole layer (aligned diagrams).
    Shared,
    /// Every frontier node picks its own best hypothesis (the baseline).
    PerNode,
}

/// Grow an aligned diagram until the frontier entropy drops below
/// `cfg.epsilon`. By the entropy bound on the training error, the returned
/// classifier then mislabels less than an `epsilon` fraction of the sample.
pub fn boost(sample: &LabeledSample, cfg: &BoostConfig) -> Result<BoostRun> {
    run_boost(sample, cfg, SplitStrategy::Shared)
}

/// The per-node selection baseline. Identical loop, except each frontier
/// node independently picks the hypothesis with the best edge under its own
/// balanced distribution, so the output is generally a BDD, not an ABDD.
/// Iterations without entropy reduction skip the merge instead of failing:
/// per-node splits can still refine the partition (the iteration cap guards
/// against genuine non-progress).
pub fn boost_mm_baseline(sample: &LabeledSample, cfg: &BoostConfig) -> Result<BoostRun> {
    run_boost(sample, cfg, SplitStrategy::PerNode)
}

fn run_boost(
    sample: &LabeledSample,
    cfg: &BoostConfig,
    strategy: SplitStrategy,
) -> Result<BoostRun> {
    cfg.validate(sample.dim())?;
    let mut diagram = Diagram::root_only(sample.dim());
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut iteration = 0usize;
    loop {
        let stats = diagram.stats(sample)?;
        diagram.apply_majorities(&stats);
        let entropy_before = stats.frontier_entropy();
        let train_error_before = stats.training_error();
        if entropy_before < cfg.epsilon {
            return Ok(BoostRun {
                final_entropy: entropy_before,
                final_error: train_error_before,
                diagram,
                trace,
                converged: true,
            });
        }
        iteration += 1;
        if iteration > cfg.cap() {
            let partial = BoostRun {
                final_entropy: entropy_before,
                final_error: train_error_before,
                diagram,
                trace,
                converged: false,
            };
            return Err(Error::Diverged {
                cap: cfg.cap(),
                partial: Box::new(partial),
            });
        }

        let view = frontier_view(&stats, sample, &cfg.hypotheses)?;
        let (labels, hypothesis_name, edge, jensen_lhs) = match strategy {
            SplitStrategy::Shared => {
                let (best, edge) =
                    argmax_lowest_index(cfg.hypotheses.len(), |h| view.mixture_edge(h));
                if edge <= 0.0 {
                    return Err(Error::WeakLearnerFailure { iteration, edge });
                }
                let labels: HashMap<NodeId, Hypothesis> = view
                    .ids
                    .iter()
                    .map(|&id| (id, cfg.hypotheses[best]))
                    .collect();
                let choice = vec![best; view.ids.len()];
                let jensen = view.jensen_lhs(&choice);
                (labels, cfg.hypotheses[best].to_string(), edge, jensen)
            }
            SplitStrategy::PerNode => {
                let mut labels = HashMap::new();
                let mut names = Vec::new();
                let mut choice = Vec::with_capacity(view.ids.len());
                let mut aggregate = 0.0;
                for (u, &id) in view.ids.iter().enumerate() {
                    let (best, edge) =
                        argmax_lowest_index(cfg.hypotheses.len(), |h| view.edges[u][h]);
                    labels.insert(id, cfg.hypotheses[best]);
                    names.push(cfg.hypotheses[best].to_string());
                    choice.push(best);
                    aggregate += view.entropy_share[u] * edge;
                }
                let jensen = view.jensen_lhs(&choice);
                (labels, names.join(";"), aggregate, jensen)
            }
        };

        diagram.split_frontier(&labels)?;
        let split_stats = diagram.stats(sample)?;
        let entropy_split = split_stats.frontier_entropy();
        let lambda_hat = 1.0 - entropy_split / entropy_before;

        let (delta_hat, merge_report) = if lambda_hat > 0.0 {
            let delta_hat = lambda_hat * entropy_before / 6.0;
            let net = build_net(delta_hat, lambda_hat / 3.0)?;
            let report = merge_frontier(&mut diagram, sample, &net)?;
            (delta_hat, Some(report))
        } else if matches!(strategy, SplitStrategy::Shared) {
            // No entropy reduction from the shared best hypothesis: the
            // contraction guarantee is void, so fail loudly instead of
            // looping forever.
            return Err(Error::WeakLearnerFailure { iteration, edge });
        } else {
            // Baseline: absorb what became pure but skip the net merge —
            // per-node splits can still refine the partition.
            let report = absorb_and_merge(&mut diagram, sample, None)?;
            (0.0, Some(report))
        };
        let report = merge_report.expect("merge always ran on this path");

        let merged_stats = diagram.stats(sample)?;
        diagram.apply_majorities(&merged_stats);
        trace.push(IterationRecord {
            iteration,
            hypothesis: hypothesis_name,
            edge,
            lambda_hat,
            delta_hat,
            entropy_before,
            entropy_split,
            entropy_merged: merged_stats.frontier_entropy(),
            width: report.width,
            train_error_before,
            jensen_lhs,
            absorbed: report.absorbed,
            merged: lambda_hat > 0.0,
        });
    }
}

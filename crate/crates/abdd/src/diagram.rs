//! The decision-diagram graph: a rooted DAG with ±-edges, a 0-leaf and a
//! 1-leaf, hypothesis-labeled internal nodes, and an *open* frontier of
//! maximum-depth nodes whose routing is still undecided.
//!
//! Open nodes route to a leaf by label majority (`q ≥ 1/2` goes to the
//! 1-leaf), which is exactly how the partially built classifier is
//! evaluated between boosting iterations. Merged nodes are tombstoned and
//! parent edges re-pointed at the surviving representative, so node ids
//! stay stable for traces and DOT export.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{BitVector, Hypothesis, LabeledSample};
use crate::{Error, Result};

pub type NodeId = usize;

/// An edge target: one of the two leaves or an internal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Child {
    Leaf(bool),
    Node(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Frontier node: no label yet; routes to the majority leaf.
    Open { majority: i8 },
    /// Decided node: follows `hi` when the label evaluates to +1.
    Split {
        label: Hypothesis,
        lo: Child,
        hi: Child,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub depth: usize,
    pub kind: NodeKind,
}

/// Which structural contract to validate a diagram against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagramClass {
    Bdd,
    /// Ordered: projection indices strictly increase along every path
    /// (under the identity order unless one is supplied separately).
    Obdd,
    /// Aligned: all internal nodes at equal depth share one label.
    Abdd,
}

/// First violation found by [`Diagram::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: String,
    pub nodes: Vec<NodeId>,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (nodes {:?})", self.rule, self.nodes)
    }
}

/// Per-node routing statistics under the uniform distribution over a sample.
#[derive(Debug, Clone)]
pub struct NodeStats {
    pub id: NodeId,
    /// `p_u`: fraction of the sample whose path visits this node.
    pub reach: f64,
    /// `q_u`: positive-label fraction among the reachers (0 for unreached).
    pub positive_fraction: f64,
    pub count: usize,
    pub positives: usize,
    /// Sample indices reaching the node. Only collected for open nodes.
    pub sample_ids: Vec<usize>,
}

/// Routing statistics for a whole diagram.
#[derive(Debug, Clone)]
pub struct DiagramStats {
    nodes: Vec<Option<NodeStats>>,
    frontier: Vec<NodeId>,
    /// Sample mass absorbed at the 0-leaf and 1-leaf.
    pub leaf_mass: [f64; 2],
    /// Errors among leaf-absorbed samples (a +1 label at the 0-leaf etc.).
    pub leaf_errors: usize,
    pub sample_size: usize,
}

impl DiagramStats {
    pub fn node(&self, id: NodeId) -> Option<&NodeStats> {
        self.nodes.get(id).and_then(|n| n.as_ref())
    }

    /// Stats of the open (frontier) nodes, in id order.
    pub fn frontier_nodes(&self) -> impl Iterator<Item = &NodeStats> {
        self.frontier.iter().map(|&id| {
            self.nodes[id]
                .as_ref()
                .expect("frontier ids always carry stats")
        })
    }

    pub fn frontier_ids(&self) -> &[NodeId] {
        &self.frontier
    }

    /// `Σ_{u ∈ N(T)} p_u G(q_u)`.
    pub fn frontier_entropy(&self) -> f64 {
        self.frontier_nodes()
            .map(|n| n.reach * crate::data::g(n.positive_fraction))
            .sum()
    }

    /// Training error of the majority-routed classifier:
    /// `Σ p_u·min(q_u, 1-q_u)` over the frontier plus leaf disagreements.
    pub fn training_error(&self) -> f64 {
        let frontier_err: f64 = self
            .frontier_nodes()
            .map(|n| {
                let q = n.positive_fraction;
                n.reach * q.min(1.0 - q)
            })
            .sum();
        frontier_err + self.leaf_errors as f64 / self.sample_size as f64
    }
}

/// A BDD/OBDD/ABDD over `{-1,+1}^n` with hypothesis-labeled nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    n: usize,
    nodes: Vec<Option<Node>>,
    root: Child,
}

impl Diagram {
    /// The one-open-node diagram every boosting run starts from.
    pub fn root_only(n: usize) -> Self {
        Self {
            n,
            nodes: vec![Some(Node {
                depth: 0,
                kind: NodeKind::Open { majority: 1 },
            })],
            root: Child::Node(0),
        }
    }

    /// A degenerate diagram that routes every input to one leaf.
    pub fn constant(n: usize, value: bool) -> Self {
        Self {
            n,
            nodes: Vec::new(),
            root: Child::Leaf(value),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> Child {
        self.root
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id).and_then(|n| n.as_ref())
    }

    /// Live internal nodes in id order.
    pub fn live_nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(id, n)| n.as_ref().map(|n| (id, n)))
    }

    /// Internal node count (open nodes included).
    pub fn size(&self) -> usize {
        self.nodes.iter().flatten().count()
    }

    /// Maximum number of internal nodes at any one depth.
    pub fn width(&self) -> usize {
        let mut per_depth: HashMap<usize, usize> = HashMap::new();
        for (_, node) in self.live_nodes() {
            *per_depth.entry(node.depth).or_insert(0) += 1;
        }
        per_depth.values().copied().max().unwrap_or(0)
    }

    /// Maximum internal-node depth.
    pub fn depth(&self) -> usize {
        self.live_nodes().map(|(_, n)| n.depth).max().unwrap_or(0)
    }

    /// The open (undecided) nodes — the growth surface. In layered
    /// construction these are exactly the maximum-depth internal nodes;
    /// empty once every path terminates at a leaf.
    pub fn frontier(&self) -> Vec<NodeId> {
        self.live_nodes()
            .filter(|(_, n)| matches!(n.kind, NodeKind::Open { .. }))
            .map(|(id, _)| id)
            .collect()
    }

    /// Follow an instance from the root; returns the visited internal nodes
    /// and the leaf reached. Open nodes terminate at their majority leaf.
    pub fn route(&self, x: &BitVector) -> Result<(Vec<NodeId>, bool)> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let mut path = Vec::new();
        let mut cursor = self.root;
        let budget = self.nodes.len() + 1;
        loop {
            match cursor {
                Child::Leaf(v) => return Ok((path, v)),
                Child::Node(id) => {
                    if path.len() >= budget {
                        return Err(Error::MalformedDiagram(format!(
                            "cycle detected while routing through node {id}"
                        )));
                    }
                    let node = self.node(id).ok_or_else(|| {
                        Error::MalformedDiagram(format!("edge points at dead node {id}"))
                    })?;
                    path.push(id);
                    match &node.kind {
                        NodeKind::Open { majority } => return Ok((path, *majority == 1)),
                        NodeKind::Split { label, lo, hi } => {
                            cursor = if label.eval(x) == 1 { *hi } else { *lo };
                        }
                    }
                }
            }
        }
    }

    /// `h_T(x)`: +1 when the instance reaches the 1-leaf.
    pub fn evaluate(&self, x: &BitVector) -> Result<i8> {
        let (_, leaf) = self.route(x)?;
        Ok(if leaf { 1 } else { -1 })
    }

    /// Route every sample element and accumulate per-node reach statistics.
    /// Frontier mass plus leaf-absorbed mass always totals one.
    pub fn stats(&self, sample: &LabeledSample) -> Result<DiagramStats> {
        let m = sample.len();
        let mut counts = vec![(0usize, 0usize); self.nodes.len()]; // (count, positives)
        let mut member_ids: HashMap<NodeId, Vec<usize>> = HashMap::new();
        let frontier = self.frontier();
        for &id in &frontier {
            member_ids.insert(id, Vec::new());
        }
        let mut leaf_count = [0usize; 2];
        let mut leaf_errors = 0usize;
        for (i, (x, y)) in sample.items().iter().enumerate() {
            let (path, leaf) = self.route(x)?;
            let open_end = path
                .last()
                .map(|&id| matches!(self.nodes[id].as_ref().unwrap().kind, NodeKind::Open { .. }))
                .unwrap_or(false);
            for &id in &path {
                counts[id].0 += 1;
                if *y == 1 {
                    counts[id].1 += 1;
                }
            }
            if open_end {
                member_ids
                    .get_mut(path.last().unwrap())
                    .expect("open path end is a frontier node")
                    .push(i);
            } else {
                leaf_count[usize::from(leaf)] += 1;
                if (leaf && *y == -1) || (!leaf && *y == 1) {
                    leaf_errors += 1;
                }
            }
        }
        let nodes = (0..self.nodes.len())
            .map(|id| {
                self.nodes[id].as_ref().map(|_| {
                    let (count, positives) = counts[id];
                    NodeStats {
                        id,
                        reach: count as f64 / m as f64,
                        positive_fraction: if count == 0 {
                            0.0
                        } else {
                            positives as f64 / count as f64
                        },
                        count,
                        positives,
                        sample_ids: member_ids.remove(&id).unwrap_or_default(),
                    }
                })
            })
            .collect();
        Ok(DiagramStats {
            nodes,
            frontier,
            leaf_mass: [
                leaf_count[0] as f64 / m as f64,
                leaf_count[1] as f64 / m as f64,
            ],
            leaf_errors,
            sample_size: m,
        })
    }

    /// Fraction of the sample the majority-routed classifier mislabels.
    pub fn training_error(&self, sample: &LabeledSample) -> Result<f64> {
        let mut errors = 0usize;
        for (x, y) in sample.items() {
            if self.evaluate(x)? != *y {
                errors += 1;
            }
        }
        Ok(errors as f64 / sample.len() as f64)
    }

    /// Refresh every open node's majority leaf from fresh routing stats.
    pub fn apply_majorities(&mut self, stats: &DiagramStats) {
        for &id in stats.frontier_ids() {
            let q = stats.node(id).unwrap().positive_fraction;
            if let Some(Node {
                kind: NodeKind::Open { majority },
                ..
            }) = self.nodes[id].as_mut()
            {
                *majority = if q >= 0.5 { 1 } else { -1 };
            }
        }
    }

    /// Label every open node and give each two fresh open children on the
    /// next layer. `labels` must cover the whole frontier.
    pub fn split_frontier(&mut self, labels: &HashMap<NodeId, Hypothesis>) -> Result<()> {
        let frontier = self.frontier();
        if frontier.is_empty() {
            return Err(Error::EmptyFrontier);
        }
        for &id in &frontier {
            let &label = labels.get(&id).ok_or_else(|| {
                Error::MalformedDiagram(format!("no split label for frontier node {id}"))
            })?;
            if !label.valid_for(self.n) {
                return Err(Error::Invalid {
                    what: "hypothesis",
                    detail: format!("{label} out of range for dimension {}", self.n),
                });
            }
            let depth = self.nodes[id].as_ref().unwrap().depth;
            let lo = self.push_open(depth + 1);
            let hi = self.push_open(depth + 1);
            self.nodes[id].as_mut().unwrap().kind = NodeKind::Split {
                label,
                lo: Child::Node(lo),
                hi: Child::Node(hi),
            };
        }
        Ok(())
    }

    fn push_open(&mut self, depth: usize) -> NodeId {
        self.nodes.push(Some(Node {
            depth,
            kind: NodeKind::Open { majority: 1 },
        }));
        self.nodes.len() - 1
    }

    /// Redirect every edge into `id` to the given leaf and drop the node.
    pub fn absorb(&mut self, id: NodeId, leaf: bool) {
        self.repoint(id, Child::Leaf(leaf));
        self.nodes[id] = None;
    }

    /// Merge open nodes into the lowest-id member; parent edges re-pointed,
    /// the rest tombstoned. Returns the representative.
    pub fn merge(&mut self, ids: &[NodeId]) -> Result<NodeId> {
        let rep = *ids.iter().min().ok_or(Error::EmptyFrontier)?;
        for &id in ids {
            match self.nodes.get(id).and_then(|n| n.as_ref()) {
                Some(node) if matches!(node.kind, NodeKind::Open { .. }) => {}
                _ => {
                    return Err(Error::MalformedDiagram(format!(
                        "merge target {id} is not a live open node"
                    )))
                }
            }
        }
        for &id in ids {
            if id != rep {
                self.repoint(id, Child::Node(rep));
                self.nodes[id] = None;
            }
        }
        Ok(rep)
    }

    fn repoint(&mut self, from: NodeId, to: Child) {
        for node in self.nodes.iter_mut().flatten() {
            if let NodeKind::Split { lo, hi, .. } = &mut node.kind {
                if *lo == Child::Node(from) {
                    *lo = to;
                }
                if *hi == Child::Node(from) {
                    *hi = to;
                }
            }
        }
        if self.root == Child::Node(from) {
            self.root = to;
        }
    }

    /// Check the structural contract for the requested diagram class; the
    /// report names the first violating node (pair).
    pub fn validate(&self, class: DiagramClass) -> std::result::Result<(), Violation> {
        self.validate_structure()?;
        match class {
            DiagramClass::Bdd => Ok(()),
            DiagramClass::Obdd => {
                let order: Vec<usize> = (0..self.n).collect();
                self.validate_obdd_with_order(&order)
            }
            DiagramClass::Abdd => self.validate_alignment(),
        }
    }

    fn validate_structure(&self) -> std::result::Result<(), Violation> {
        // Every split child must exist, depths must be the longest-path
        // depths, and every live node must be reachable from the root.
        let mut reachable = vec![false; self.nodes.len()];
        let mut stack = Vec::new();
        if let Child::Node(id) = self.root {
            stack.push(id);
        }
        while let Some(id) = stack.pop() {
            if reachable.get(id).copied().unwrap_or(true) {
                continue;
            }
            match self.node(id) {
                None => {
                    return Err(Violation {
                        rule: "edge points at a missing node".into(),
                        nodes: vec![id],
                    })
                }
                Some(node) => {
                    reachable[id] = true;
                    if let NodeKind::Split { lo, hi, .. } = &node.kind {
                        for child in [lo, hi] {
                            if let Child::Node(c) = child {
                                stack.push(*c);
                            }
                        }
                    }
                }
            }
        }
        for (id, _) in self.live_nodes() {
            if !reachable[id] {
                return Err(Violation {
                    rule: "node unreachable from root".into(),
                    nodes: vec![id],
                });
            }
        }
        let depths = self.longest_path_depths().map_err(|cycle| Violation {
            rule: "cycle detected".into(),
            nodes: cycle,
        })?;
        for (id, node) in self.live_nodes() {
            if depths[id] != Some(node.depth) {
                return Err(Violation {
                    rule: format!(
                        "stored depth {} differs from longest-path depth {}",
                        node.depth,
                        depths[id].unwrap_or(0)
                    ),
                    nodes: vec![id],
                });
            }
        }
        Ok(())
    }

    /// Longest path from the root per node; `Err` carries a cycle witness.
    fn longest_path_depths(&self) -> std::result::Result<Vec<Option<usize>>, Vec<NodeId>> {
        let mut depths: Vec<Option<usize>> = vec![None; self.nodes.len()];
        // Relaxation over a DAG: repeat until fixpoint; more than |V| sweeps
        // means a cycle.
        if let Child::Node(root) = self.root {
            if root < depths.len() {
                depths[root] = Some(0);
            }
        }
        let live: Vec<NodeId> = self.live_nodes().map(|(id, _)| id).collect();
        for sweep in 0..=live.len() {
            let mut changed = false;
            for &id in &live {
                let Some(d) = depths[id] else { continue };
                if let Some(Node {
                    kind: NodeKind::Split { lo, hi, .. },
                    ..
                }) = self.node(id)
                {
                    for child in [lo, hi] {
                        if let Child::Node(c) = child {
                            let candidate = d + 1;
                            if depths
                                .get(*c)
                                .copied()
                                .flatten()
                                .map(|cur| candidate > cur)
                                .unwrap_or(true)
                            {
                                if *c < depths.len() {
                                    depths[*c] = Some(candidate);
                                    changed = true;
                                }
                            }
                        }
                    }
                }
            }
            if !changed {
                return Ok(depths);
            }
            if sweep == live.len() {
                break;
            }
        }
        Err(live)
    }

    fn validate_alignment(&self) -> std::result::Result<(), Violation> {
        let mut label_at_depth: HashMap<usize, (NodeId, Option<Hypothesis>)> = HashMap::new();
        for (id, node) in self.live_nodes() {
            let label = match &node.kind {
                NodeKind::Open { .. } => None,
                NodeKind::Split { label, .. } => Some(*label),
            };
            match label_at_depth.get(&node.depth) {
                None => {
                    label_at_depth.insert(node.depth, (id, label));
                }
                Some(&(first, expected)) if expected != label => {
                    return Err(Violation {
                        rule: format!("depth {} mixes labels", node.depth),
                        nodes: vec![first, id],
                    });
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Ordered-BDD check: projection indices strictly increase along every
    /// root-leaf path under `order` (a permutation of the variables).
    pub fn validate_obdd_with_order(&self, order: &[usize]) -> std::result::Result<(), Violation> {
        let mut position = vec![usize::MAX; self.n];
        for (pos, &var) in order.iter().enumerate() {
            if var < self.n {
                position[var] = pos;
            }
        }
        let var_of = |label: &Hypothesis| match label {
            Hypothesis::Projection(i) | Hypothesis::NegatedProjection(i) => Some(*i),
            Hypothesis::Constant(_) => None,
        };
        // DFS over paths carrying the previous node's order position.
        let mut stack: Vec<(Child, usize, Option<NodeId>)> = vec![(self.root, usize::MAX, None)];
        let mut steps = 0usize;
        let budget = (self.nodes.len() + 1) * (self.nodes.len() + 1);
        while let Some((cursor, prev_pos, prev_id)) = stack.pop() {
            steps += 1;
            if steps > budget {
                return Err(Violation {
                    rule: "cycle detected".into(),
                    nodes: prev_id.into_iter().collect(),
                });
            }
            let Child::Node(id) = cursor else { continue };
            let Some(node) = self.node(id) else { continue };
            if let NodeKind::Split { label, lo, hi } = &node.kind {
                let Some(var) = var_of(label) else {
                    return Err(Violation {
                        rule: "non-projection label in an ordered diagram".into(),
                        nodes: vec![id],
                    });
                };
                let pos = position[var];
                if prev_pos != usize::MAX && pos <= prev_pos {
                    return Err(Violation {
                        rule: "variable order violated along a path".into(),
                        nodes: vec![prev_id.unwrap(), id],
                    });
                }
                stack.push((*lo, pos, Some(id)));
                stack.push((*hi, pos, Some(id)));
            }
        }
        Ok(())
    }

    // ---- serialization ----------------------------------------------------

    /// JSON export. Leaves serialize as ids 0 and 1, internal nodes from 2.
    pub fn to_json(&self, kind: &str) -> String {
        let json = DiagramJson {
            kind: kind.to_string(),
            n: self.n,
            root: self.child_id(self.root),
            nodes: self
                .live_nodes()
                .map(|(id, node)| {
                    let (label, lo, hi, majority) = match &node.kind {
                        NodeKind::Open { majority } => (None, None, None, Some(*majority)),
                        NodeKind::Split { label, lo, hi } => (
                            Some(LabelJson::from(label)),
                            Some(self.child_id(*lo)),
                            Some(self.child_id(*hi)),
                            None,
                        ),
                    };
                    NodeJson {
                        id: id + 2,
                        depth: node.depth,
                        label,
                        lo,
                        hi,
                        majority,
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&json).expect("diagram serialization cannot fail")
    }

    fn child_id(&self, child: Child) -> usize {
        match child {
            Child::Leaf(false) => 0,
            Child::Leaf(true) => 1,
            Child::Node(id) => id + 2,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: DiagramJson = serde_json::from_str(text)?;
        let max_id = json.nodes.iter().map(|n| n.id).max().unwrap_or(1);
        if max_id < 2 && !json.nodes.is_empty() {
            return Err(Error::MalformedDiagram(
                "internal node ids must start at 2".into(),
            ));
        }
        let mut nodes: Vec<Option<Node>> = vec![None; max_id.saturating_sub(1)];
        let to_child = |id: usize| -> Child {
            match id {
                0 => Child::Leaf(false),
                1 => Child::Leaf(true),
                other => Child::Node(other - 2),
            }
        };
        for raw in &json.nodes {
            if raw.id < 2 {
                return Err(Error::MalformedDiagram(format!(
                    "node id {} collides with a leaf id",
                    raw.id
                )));
            }
            let kind = match (&raw.label, raw.lo, raw.hi, raw.majority) {
                (Some(label), Some(lo), Some(hi), None) => NodeKind::Split {
                    label: label.to_hypothesis()?,
                    lo: to_child(lo),
                    hi: to_child(hi),
                },
                (None, None, None, Some(majority)) if majority == 1 || majority == -1 => {
                    NodeKind::Open { majority }
                }
                _ => {
                    return Err(Error::MalformedDiagram(format!(
                        "node {} must be either labeled with children or open with a majority",
                        raw.id
                    )))
                }
            };
            nodes[raw.id - 2] = Some(Node {
                depth: raw.depth,
                kind,
            });
        }
        let diagram = Self {
            n: json.n,
            nodes,
            root: to_child(json.root),
        };
        diagram
            .validate(DiagramClass::Bdd)
            .map_err(|v| Error::MalformedDiagram(v.to_string()))?;
        Ok(diagram)
    }

    /// Graphviz export: solid edges for +, dashed for −, leaves as boxes.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dd {\n  rankdir=TB;\n");
        out.push_str("  leaf0 [shape=box,label=\"0\"];\n");
        out.push_str("  leaf1 [shape=box,label=\"1\"];\n");
        for (id, node) in self.live_nodes() {
            match &node.kind {
                NodeKind::Open { majority } => {
                    let _ = writeln!(
                        out,
                        "  n{id} [shape=ellipse,style=dotted,label=\"open→{}\"];",
                        if *majority == 1 { 1 } else { 0 }
                    );
                }
                NodeKind::Split { label, .. } => {
                    let _ = writeln!(out, "  n{id} [shape=ellipse,label=\"{label}\"];");
                }
            }
        }
        let name = |c: Child| match c {
            Child::Leaf(false) => "leaf0".to_string(),
            Child::Leaf(true) => "leaf1".to_string(),
            Child::Node(id) => format!("n{id}"),
        };
        for (id, node) in self.live_nodes() {
            if let NodeKind::Split { lo, hi, .. } = &node.kind {
                let _ = writeln!(out, "  n{id} -> {} [style=solid];", name(*hi));
                let _ = writeln!(out, "  n{id} -> {} [style=dashed];", name(*lo));
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Serialize, Deserialize)]
struct DiagramJson {
    kind: String,
    n: usize,
    root: usize,
    nodes: Vec<NodeJson>,
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: usize,
    depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<LabelJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lo: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hi: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    majority: Option<i8>,
}

#[derive(Serialize, Deserialize)]
struct LabelJson {
    proj: usize,
    neg: bool,
}

impl LabelJson {
    fn from(h: &Hypothesis) -> Self {
        match h {
            Hypothesis::Projection(i) => LabelJson {
                proj: *i,
                neg: false,
            },
            Hypothesis::NegatedProjection(i) => LabelJson { proj: *i, neg: true },
            // Constants never appear in finished diagrams; encode defensively
            // as projection 0 is wrong, so reject instead.
            Hypothesis::Constant(_) => {
                unreachable!("constant labels are never attached to split nodes")
            }
        }
    }

    fn to_hypothesis(&self) -> Result<Hypothesis> {
        Ok(if self.neg {
            Hypothesis::NegatedProjection(self.proj)
        } else {
            Hypothesis::Projection(self.proj)
        })
    }
}

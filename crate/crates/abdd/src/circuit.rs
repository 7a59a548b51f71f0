//! (∨,∧,¬)-circuits: diagram lowering, network composition, Hamming-ball
//! constraints, evaluation, and simplification.
//!
//! Gates live in one topologically ordered arena (operands always precede
//! their gate), so evaluation is a single forward pass and serialization is
//! dense and stable. Diagram lowering is the memoized top-down rule
//! `C(v) = (lit ∧ C(hi)) ∨ (¬lit ∧ C(lo))`, which costs exactly four gates
//! and a variable per diagram node and preserves DAG sharing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::{BitVector, Hypothesis};
use crate::diagram::{Child, Diagram, DiagramClass, NodeId, NodeKind};
use crate::{Error, Result};

pub type GateId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    And(Vec<GateId>),
    Or(Vec<GateId>),
    Not(GateId),
    /// Reference to an input by position in the circuit's input list.
    Var(usize),
    Const(bool),
}

/// An immutable combinational circuit with named inputs and one output.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    inputs: Vec<String>,
    gates: Vec<Gate>,
    output: GateId,
}

/// Canonical input names `x0..x{n-1}` used by diagram lowering and the
/// Hamming constraint so that conjunctions line up by name.
pub fn input_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

impl Circuit {
    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> GateId {
        self.output
    }

    /// AND/OR/NOT count; variables and constants are free.
    pub fn gate_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::And(_) | Gate::Or(_) | Gate::Not(_)))
            .count()
    }

    /// Evaluate with `values[i]` bound to `inputs[i]`.
    pub fn evaluate(&self, values: &[bool]) -> Result<bool> {
        if values.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs.len(),
                actual: values.len(),
            });
        }
        let mut wire = vec![false; self.gates.len()];
        for (i, gate) in self.gates.iter().enumerate() {
            wire[i] = match gate {
                Gate::And(ins) => ins.iter().all(|&j| wire[j]),
                Gate::Or(ins) => ins.iter().any(|&j| wire[j]),
                Gate::Not(j) => !wire[*j],
                Gate::Var(v) => values[*v],
                Gate::Const(c) => *c,
            };
        }
        Ok(wire[self.output])
    }

    /// Evaluate a ±1 instance vector (+1 ↦ true) aligned with the inputs.
    pub fn evaluate_pm1(&self, x: &BitVector) -> Result<bool> {
        let values: Vec<bool> = x.bits().iter().map(|&b| b == 1).collect();
        self.evaluate(&values)
    }

    pub fn evaluate_named(&self, assignment: &HashMap<String, bool>) -> Result<bool> {
        let values = self
            .inputs
            .iter()
            .map(|name| {
                assignment.get(name).copied().ok_or_else(|| Error::Invalid {
                    what: "assignment",
                    detail: format!("input {name} unbound"),
                })
            })
            .collect::<Result<Vec<bool>>>()?;
        self.evaluate(&values)
    }

    /// Same circuit with the output complemented.
    pub fn negate(&self) -> Circuit {
        let mut gates = self.gates.clone();
        gates.push(Gate::Not(self.output));
        Circuit {
            inputs: self.inputs.clone(),
            output: gates.len() - 1,
            gates,
        }
    }

    /// Conjunction of two circuits, merging inputs by name.
    pub fn conjoin(&self, other: &Circuit) -> Circuit {
        let mut builder = CircuitBuilder::new(self.inputs.clone());
        let left = builder.import_by_name(self);
        let right = builder.import_by_name(other);
        let out = builder.and(vec![left, right]);
        builder.build(out)
    }

    /// Rename inputs through the map; unmapped names stay as they are.
    pub fn rename_inputs(&self, map: &HashMap<String, String>) -> Circuit {
        let inputs = self
            .inputs
            .iter()
            .map(|name| map.get(name).cloned().unwrap_or_else(|| name.clone()))
            .collect();
        Circuit {
            inputs,
            gates: self.gates.clone(),
            output: self.output,
        }
    }

    /// Constant propagation, double-negation elimination, and structural
    /// hashing. The input list is preserved verbatim; only gates change.
    pub fn simplify(&self) -> Circuit {
        #[derive(Clone, Copy, PartialEq, Eq, Hash)]
        enum Repr {
            Const(bool),
            Wire(GateId),
        }
        let mut builder = CircuitBuilder::new(self.inputs.clone());
        let mut hash: HashMap<Gate, GateId> = HashMap::new();
        let mut reprs: Vec<Repr> = Vec::with_capacity(self.gates.len());
        let mut intern = |builder: &mut CircuitBuilder, gate: Gate| -> GateId {
            if let Some(&id) = hash.get(&gate) {
                return id;
            }
            let id = builder.push(gate.clone());
            hash.insert(gate, id);
            id
        };
        for gate in &self.gates {
            let repr = match gate {
                Gate::Var(v) => Repr::Wire(intern(&mut builder, Gate::Var(*v))),
                Gate::Const(c) => Repr::Const(*c),
                Gate::Not(j) => match reprs[*j] {
                    Repr::Const(c) => Repr::Const(!c),
                    Repr::Wire(w) => match builder.gate(w) {
                        Gate::Not(inner) => Repr::Wire(*inner),
                        _ => Repr::Wire(intern(&mut builder, Gate::Not(w))),
                    },
                },
                Gate::And(ins) | Gate::Or(ins) => {
                    let is_and = matches!(gate, Gate::And(_));
                    let absorbing = !is_and; // OR with true, AND with false
                    let mut wires: Vec<GateId> = Vec::with_capacity(ins.len());
                    let mut absorbed = false;
                    for &j in ins {
                        match reprs[j] {
                            Repr::Const(c) if c == absorbing => {
                                absorbed = true;
                                break;
                            }
                            Repr::Const(_) => {} // identity element, drop
                            Repr::Wire(w) => wires.push(w),
                        }
                    }
                    if absorbed {
                        Repr::Const(absorbing)
                    } else {
                        wires.sort_unstable();
                        wires.dedup();
                        match wires.len() {
                            0 => Repr::Const(is_and), // empty AND true, empty OR false
                            1 => Repr::Wire(wires[0]),
                            _ => Repr::Wire(intern(
                                &mut builder,
                                if is_and { Gate::And(wires) } else { Gate::Or(wires) },
                            )),
                        }
                    }
                }
            };
            reprs.push(repr);
        }
        let out = match reprs[self.output] {
            Repr::Const(c) => builder.push(Gate::Const(c)),
            Repr::Wire(w) => w,
        };
        builder.build(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gates.is_empty() {
            return Err(Error::MalformedCircuit("no gates".into()));
        }
        if self.output >= self.gates.len() {
            return Err(Error::MalformedCircuit(format!(
                "output {} out of range",
                self.output
            )));
        }
        for (i, gate) in self.gates.iter().enumerate() {
            let operands: &[GateId] = match gate {
                Gate::And(ins) | Gate::Or(ins) => {
                    if ins.len() < 2 {
                        return Err(Error::MalformedCircuit(format!(
                            "gate {i} has arity {} < 2",
                            ins.len()
                        )));
                    }
                    ins
                }
                Gate::Not(j) => std::slice::from_ref(j),
                Gate::Var(v) => {
                    if *v >= self.inputs.len() {
                        return Err(Error::MalformedCircuit(format!(
                            "gate {i} references missing input {v}"
                        )));
                    }
                    &[]
                }
                Gate::Const(_) => &[],
            };
            if let Some(&bad) = operands.iter().find(|&&j| j >= i) {
                return Err(Error::MalformedCircuit(format!(
                    "gate {i} depends on gate {bad}, breaking topological order"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let json = CircuitJson {
            inputs: self.inputs.clone(),
            gates: self
                .gates
                .iter()
                .enumerate()
                .map(|(id, gate)| match gate {
                    Gate::And(ins) => GateJson::op(id, "and", ins.clone()),
                    Gate::Or(ins) => GateJson::op(id, "or", ins.clone()),
                    Gate::Not(j) => GateJson::op(id, "not", vec![*j]),
                    Gate::Var(v) => GateJson {
                        id,
                        op: "var".into(),
                        inputs: None,
                        name: Some(self.inputs[*v].clone()),
                        value: None,
                    },
                    Gate::Const(c) => GateJson {
                        id,
                        op: "const".into(),
                        inputs: None,
                        name: None,
                        value: Some(*c),
                    },
                })
                .collect(),
            output: self.output,
        };
        serde_json::to_string_pretty(&json).expect("circuit serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: CircuitJson = serde_json::from_str(text)?;
        let name_index: HashMap<&str, usize> = json
            .inputs
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut gates = Vec::with_capacity(json.gates.len());
        for (i, raw) in json.gates.iter().enumerate() {
            if raw.id != i {
                return Err(Error::MalformedCircuit(format!(
                    "gate ids must be dense and ordered; found {} at position {i}",
                    raw.id
                )));
            }
            let gate = match raw.op.as_str() {
                "and" | "or" | "not" => {
                    let ins = raw.inputs.clone().ok_or_else(|| {
                        Error::MalformedCircuit(format!("gate {i} missing operands"))
                    })?;
                    match raw.op.as_str() {
                        "and" => Gate::And(ins),
                        "or" => Gate::Or(ins),
                        _ => {
                            if ins.len() != 1 {
                                return Err(Error::MalformedCircuit(format!(
                                    "not gate {i} must have exactly one operand"
                                )));
                            }
                            Gate::Not(ins[0])
                        }
                    }
                }
                "var" => {
                    let name = raw.name.as_deref().ok_or_else(|| {
                        Error::MalformedCircuit(format!("var gate {i} missing name"))
                    })?;
                    let idx = name_index.get(name).ok_or_else(|| {
                        Error::MalformedCircuit(format!("var gate {i} names unknown input {name}"))
                    })?;
                    Gate::Var(*idx)
                }
                "const" => Gate::Const(raw.value.ok_or_else(|| {
                    Error::MalformedCircuit(format!("const gate {i} missing value"))
                })?),
                other => {
                    return Err(Error::MalformedCircuit(format!(
                        "unknown gate op {other:?}"
                    )))
                }
            };
            gates.push(gate);
        }
        let circuit = Circuit {
            inputs: json.inputs,
            gates,
            output: json.output,
        };
        circuit.validate()?;
        Ok(circuit)
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    inputs: Vec<String>,
    gates: Vec<GateJson>,
    output: usize,
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    id: usize,
    op: String,
    #[serde(rename = "in", skip_serializing_if = "Option::is_none")]
    inputs: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<bool>,
}

impl GateJson {
    fn op(id: usize, op: &str, inputs: Vec<GateId>) -> Self {
        GateJson {
            id,
            op: op.into(),
            inputs: Some(inputs),
            name: None,
            value: None,
        }
    }
}

/// Append-only gate arena used by the lowering and composition passes.
pub struct CircuitBuilder {
    inputs: Vec<String>,
    index: HashMap<String, usize>,
    gates: Vec<Gate>,
    var_gates: HashMap<usize, GateId>,
}

impl CircuitBuilder {
    pub fn new(inputs: Vec<String>) -> Self {
        let index = inputs
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self {
            inputs,
            index,
            gates: Vec::new(),
            var_gates: HashMap::new(),
        }
    }

    fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id]
    }

    fn push(&mut self, gate: Gate) -> GateId {
        self.gates.push(gate);
        self.gates.len() - 1
    }

    /// One shared var gate per input.
    pub fn var(&mut self, input: usize) -> GateId {
        if let Some(&id) = self.var_gates.get(&input) {
            return id;
        }
        let id = self.push(Gate::Var(input));
        self.var_gates.insert(input, id);
        id
    }

    pub fn var_named(&mut self, name: &str) -> Result<GateId> {
        let idx = *self.index.get(name).ok_or_else(|| Error::Invalid {
            what: "circuit input",
            detail: format!("unknown input {name}"),
        })?;
        Ok(self.var(idx))
    }

    pub fn constant(&mut self, value: bool) -> GateId {
        self.push(Gate::Const(value))
    }

    pub fn not(&mut self, a: GateId) -> GateId {
        self.push(Gate::Not(a))
    }

    pub fn and(&mut self, mut ins: Vec<GateId>) -> GateId {
        match ins.len() {
            0 => self.constant(true),
            1 => ins.pop().unwrap(),
            _ => self.push(Gate::And(ins)),
        }
    }

    pub fn or(&mut self, mut ins: Vec<GateId>) -> GateId {
        match ins.len() {
            0 => self.constant(false),
            1 => ins.pop().unwrap(),
            _ => self.push(Gate::Or(ins)),
        }
    }

    /// Copy a whole circuit into this builder, binding its variables to this
    /// builder's inputs by name. Returns the copied output gate.
    fn import_by_name(&mut self, other: &Circuit) -> GateId {
        for name in other.inputs() {
            if !self.index.contains_key(name) {
                self.index.insert(name.clone(), self.inputs.len());
                self.inputs.push(name.clone());
            }
        }
        self.import_mapped(other, |this, name| {
            this.var_named(name).expect("name registered above")
        })
    }

    fn import_mapped(
        &mut self,
        other: &Circuit,
        mut bind: impl FnMut(&mut Self, &str) -> GateId,
    ) -> GateId {
        let mut remap = Vec::with_capacity(other.gates.len());
        for gate in &other.gates {
            let id = match gate {
                Gate::Var(v) => bind(self, &other.inputs[*v].clone()),
                Gate::Const(c) => self.push(Gate::Const(*c)),
                Gate::Not(j) => self.push(Gate::Not(remap[*j])),
                Gate::And(ins) => {
                    let ins = ins.iter().map(|&j| remap[j]).collect();
                    self.push(Gate::And(ins))
                }
                Gate::Or(ins) => {
                    let ins = ins.iter().map(|&j| remap[j]).collect();
                    self.push(Gate::Or(ins))
                }
            };
            remap.push(id);
        }
        remap[other.output]
    }

    pub fn build(mut self, output: GateId) -> Circuit {
        if self.gates.is_empty() {
            self.gates.push(Gate::Const(false));
        }
        let circuit = Circuit {
            inputs: self.inputs,
            gates: self.gates,
            output,
        };
        debug_assert!(circuit.validate().is_ok());
        circuit
    }
}

/// Lower a diagram to a circuit over inputs `x0..x{n-1}`: memoized
/// `C(v) = (lit ∧ C(hi)) ∨ (¬lit ∧ C(lo))` with constant leaves. Open
/// frontier nodes lower to their majority constant. The result is the raw
/// four-gates-per-node form; run [`Circuit::simplify`] for the compact one.
pub fn dd_to_circuit(diagram: &Diagram) -> Result<Circuit> {
    diagram
        .validate(DiagramClass::Bdd)
        .map_err(|v| Error::MalformedDiagram(v.to_string()))?;
    let mut builder = CircuitBuilder::new(input_names(diagram.dim()));
    let mut memo: HashMap<NodeId, GateId> = HashMap::new();
    let output = compile_child(diagram, diagram.root(), &mut builder, &mut memo)?;
    Ok(builder.build(output))
}

fn compile_child(
    diagram: &Diagram,
    child: Child,
    builder: &mut CircuitBuilder,
    memo: &mut HashMap<NodeId, GateId>,
) -> Result<GateId> {
    match child {
        Child::Leaf(v) => Ok(builder.constant(v)),
        Child::Node(id) => {
            if let Some(&gate) = memo.get(&id) {
                return Ok(gate);
            }
            let node = diagram
                .node(id)
                .ok_or_else(|| Error::MalformedDiagram(format!("dead node {id}")))?;
            let gate = match &node.kind {
                NodeKind::Open { majority } => builder.constant(*majority == 1),
                NodeKind::Split { label, lo, hi } => {
                    let hi_gate = compile_child(diagram, *hi, builder, memo)?;
                    let lo_gate = compile_child(diagram, *lo, builder, memo)?;
                    let (lit, negated_lit) = match label {
                        Hypothesis::Projection(i) => {
                            let v = builder.var(*i);
                            (v, builder.not(v))
                        }
                        Hypothesis::NegatedProjection(i) => {
                            let v = builder.var(*i);
                            (builder.not(v), v)
                        }
                        Hypothesis::Constant(_) => {
                            return Err(Error::MalformedDiagram(format!(
                                "node {id} carries a constant label; circuits need literals"
                            )))
                        }
                    };
                    let take_hi = builder.and(vec![lit, hi_gate]);
                    let take_lo = builder.and(vec![negated_lit, lo_gate]);
                    builder.or(vec![take_hi, take_lo])
                }
            };
            memo.insert(id, gate);
            Ok(gate)
        }
    }
}

/// One layer of circuits plus the wire names their outputs get.
#[derive(Debug, Clone)]
pub struct NamedLayer {
    pub circuits: Vec<Circuit>,
    pub output_names: Vec<String>,
}

/// Wire layered circuits into one: layer 0 reads the network inputs, every
/// later layer reads the previous layer's outputs by name, and the final
/// layer must produce exactly one output.
pub fn compose_network(input_names: &[String], layers: &[NamedLayer]) -> Result<Circuit> {
    if layers.is_empty() {
        return Err(Error::Invalid {
            what: "network",
            detail: "no layers".into(),
        });
    }
    let mut builder = CircuitBuilder::new(input_names.to_vec());
    let mut available: HashMap<String, GateId> = HashMap::new();
    for name in input_names {
        let gate = builder.var_named(name)?;
        available.insert(name.clone(), gate);
    }
    for (layer_idx, layer) in layers.iter().enumerate() {
        if layer.circuits.len() != layer.output_names.len() {
            return Err(Error::Invalid {
                what: "network layer",
                detail: format!(
                    "layer {layer_idx}: {} circuits but {} output names",
                    layer.circuits.len(),
                    layer.output_names.len()
                ),
            });
        }
        let mut next: HashMap<String, GateId> = HashMap::new();
        for (circuit, out_name) in layer.circuits.iter().zip(&layer.output_names) {
            for name in circuit.inputs() {
                if !available.contains_key(name) {
                    return Err(Error::Invalid {
                        what: "network wiring",
                        detail: format!(
                            "layer {layer_idx} reads {name}, which the previous layer does not produce"
                        ),
                    });
                }
            }
            let out = builder.import_mapped(circuit, |_, name| available[name]);
            if next.insert(out_name.clone(), out).is_some() {
                return Err(Error::Invalid {
                    what: "network wiring",
                    detail: format!("duplicate output name {out_name} in layer {layer_idx}"),
                });
            }
        }
        available = next;
    }
    if available.len() != 1 {
        return Err(Error::Invalid {
            what: "network",
            detail: format!("final layer produces {} outputs, expected 1", available.len()),
        });
    }
    let output = *available.values().next().unwrap();
    let circuit = builder.build(output);
    circuit.validate()?;
    Ok(circuit)
}

/// Circuit over `x0..x{n-1}` that is true exactly on the radius-`k` Hamming
/// ball around `center`: per-coordinate difference literals feed a
/// sequential counter, and the output forbids a count of `k+1`.
pub fn hamming_circuit(center: &BitVector, k: usize) -> Result<Circuit> {
    let n = center.len();
    if k > n {
        return Err(Error::OutOfRange {
            what: "hamming radius",
            value: k as f64,
            lo: 0.0,
            hi: n as f64,
        });
    }
    let mut builder = CircuitBuilder::new(input_names(n));
    if k == n {
        let out = builder.constant(true);
        return Ok(builder.build(out));
    }
    // diff_i is true when x'_i differs from the center.
    let diffs: Vec<GateId> = (0..n)
        .map(|i| {
            let v = builder.var(i);
            if center.get(i) == 1 {
                builder.not(v)
            } else {
                v
            }
        })
        .collect();
    // counts[j] = "at least j+1 of the literals seen so far are true".
    let mut counts: Vec<Option<GateId>> = vec![None; k + 1];
    for &diff in &diffs {
        let mut next = counts.clone();
        for j in (0..=k).rev() {
            let carry = if j == 0 {
                Some(diff)
            } else {
                counts[j - 1].map(|prev| builder.and(vec![prev, diff]))
            };
            next[j] = match (counts[j], carry) {
                (Some(a), Some(b)) => Some(builder.or(vec![a, b])),
                (Some(a), None) => Some(a),
                (None, c) => c,
            };
        }
        counts = next;
    }
    let out = match counts[k] {
        Some(overflow) => builder.not(overflow),
        None => builder.constant(true),
    };
    Ok(builder.build(out))
}

//! Binary neural networks: weight ingestion, the reference step-activation
//! forward pass, and the per-neuron compile pipeline (full-cube sample →
//! boosted diagram → circuit → composed network).
//!
//! Convolution filters and dense rows are both just threshold functions
//! over their fan-in; spatial positions of one filter share the compiled
//! diagram and differ only in wiring. Inputs are named `x{k}` row-major;
//! layer ℓ outputs are named `l{ℓ}_{k}` in channel-major order, and dense
//! weights read their input in that same flattened order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::{boost, boost_mm_baseline, BoostConfig};
use crate::circuit::{compose_network, dd_to_circuit, input_names, Circuit, NamedLayer};
use crate::data::BitVector;
use crate::diagram::Diagram;
use crate::ltf::{
    full_sample_with_cap, integer_scale, lifted_hypotheses, margin_with_cap, ThresholdFunction,
    DEFAULT_MARGIN_CAP,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LayerSpec {
    /// Square kernel, no padding; each filter's weights are flattened
    /// `[in_channel][kernel_row][kernel_col]`.
    Conv {
        kernel: usize,
        stride: usize,
        filters: Vec<Vec<f64>>,
        bias: Vec<f64>,
    },
    /// Each row is one neuron over the flattened previous layer.
    Dense {
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// `[height, width]` of the single-channel ±1 input image.
    pub input_shape: [usize; 2],
    pub layers: Vec<LayerSpec>,
}

/// `(channels, height, width)` as it propagates through the layers.
type Shape = (usize, usize, usize);

fn conv_output(side: usize, kernel: usize, stride: usize) -> usize {
    (side - kernel) / stride + 1
}

impl NetworkSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: NetworkSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serialization cannot fail")
    }

    pub fn input_dim(&self) -> usize {
        self.input_shape[0] * self.input_shape[1]
    }

    /// Shape of every layer boundary, input first.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let [h, w] = self.input_shape;
        if h == 0 || w == 0 {
            return Err(Error::Invalid {
                what: "network",
                detail: "empty input shape".into(),
            });
        }
        let mut shapes = vec![(1usize, h, w)];
        for (idx, layer) in self.layers.iter().enumerate() {
            let (c, h, w) = *shapes.last().unwrap();
            let bad = |detail: String| Error::Invalid {
                what: "network layer",
                detail: format!("layer {idx}: {detail}"),
            };
            let next = match layer {
                LayerSpec::Conv {
                    kernel,
                    stride,
                    filters,
                    bias,
                } => {
                    if *kernel == 0 || *stride == 0 {
                        return Err(bad("kernel and stride must be positive".into()));
                    }
                    if *kernel > h || *kernel > w {
                        return Err(bad(format!(
                            "kernel {kernel} does not fit a {h}x{w} input"
                        )));
                    }
                    if filters.is_empty() {
                        return Err(bad("no filters".into()));
                    }
                    if bias.len() != filters.len() {
                        return Err(bad(format!(
                            "{} filters but {} biases",
                            filters.len(),
                            bias.len()
                        )));
                    }
                    let want = c * kernel * kernel;
                    for (f, filter) in filters.iter().enumerate() {
                        if filter.len() != want {
                            return Err(bad(format!(
                                "filter {f} has {} weights, expected {want}",
                                filter.len()
                            )));
                        }
                        if filter.iter().any(|v| !v.is_finite()) {
                            return Err(bad(format!("filter {f} has a non-finite weight")));
                        }
                    }
                    if bias.iter().any(|v| !v.is_finite()) {
                        return Err(bad("non-finite bias".into()));
                    }
                    (
                        filters.len(),
                        conv_output(h, *kernel, *stride),
                        conv_output(w, *kernel, *stride),
                    )
                }
                LayerSpec::Dense { weights, bias } => {
                    if weights.is_empty() {
                        return Err(bad("no rows".into()));
                    }
                    if bias.len() != weights.len() {
                        return Err(bad(format!(
                            "{} rows but {} biases",
                            weights.len(),
                            bias.len()
                        )));
                    }
                    let want = c * h * w;
                    for (r, row) in weights.iter().enumerate() {
                        if row.len() != want {
                            return Err(bad(format!(
                                "row {r} has {} weights, expected {want}",
                                row.len()
                            )));
                        }
                        if row.iter().any(|v| !v.is_finite()) {
                            return Err(bad(format!("row {r} has a non-finite weight")));
                        }
                    }
                    if bias.iter().any(|v| !v.is_finite()) {
                        return Err(bad("non-finite bias".into()));
                    }
                    (weights.len(), 1, 1)
                }
            };
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<()> {
        let shapes = self.shapes()?;
        let (c, h, w) = *shapes.last().unwrap();
        if c * h * w != 1 {
            return Err(Error::Invalid {
                what: "network",
                detail: format!("final layer produces {} outputs, expected 1", c * h * w),
            });
        }
        Ok(())
    }

    /// Reference semantics: layer-wise step activations.
    pub fn forward(&self, x: &BitVector) -> Result<i8> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let shapes = self.shapes()?;
        let mut activations: Vec<i8> = x.bits().to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            let (c, h, w) = shapes[idx];
            activations = match layer {
                LayerSpec::Conv {
                    kernel,
                    stride,
                    filters,
                    bias,
                } => {
                    let oh = conv_output(h, *kernel, *stride);
                    let ow = conv_output(w, *kernel, *stride);
                    let mut next = Vec::with_capacity(filters.len() * oh * ow);
                    for (f, filter) in filters.iter().enumerate() {
                        for or in 0..oh {
                            for oc in 0..ow {
                                let mut total = bias[f];
                                let mut wi = 0;
                                for ch in 0..c {
                                    for kr in 0..*kernel {
                                        for kc in 0..*kernel {
                                            let r = or * stride + kr;
                                            let col = oc * stride + kc;
                                            let a = activations[ch * h * w + r * w + col];
                                            total += filter[wi] * f64::from(a);
                                            wi += 1;
                                        }
                                    }
                                }
                                next.push(if total >= 0.0 { 1 } else { -1 });
                            }
                        }
                    }
                    next
                }
                LayerSpec::Dense { weights, bias } => weights
                    .iter()
                    .zip(bias)
                    .map(|(row, b)| {
                        let total: f64 = row
                            .iter()
                            .zip(&activations)
                            .map(|(w, &a)| w * f64::from(a))
                            .sum();
                        if total + b >= 0.0 {
                            1
                        } else {
                            -1
                        }
                    })
                    .collect(),
            };
        }
        Ok(activations[0])
    }

    /// Per-layer neuron plans: the threshold function of each filter/row and
    /// the named wires of every instantiation.
    pub fn plan(&self) -> Result<Vec<Vec<NeuronPlan>>> {
        let shapes = self.shapes()?;
        let [h0, w0] = self.input_shape;
        let mut wire_names: Vec<String> = input_names(h0 * w0);
        let mut layers = Vec::with_capacity(self.layers.len());
        for (idx, layer) in self.layers.iter().enumerate() {
            let (c, h, w) = shapes[idx];
            let mut plans = Vec::new();
            let mut next_names = Vec::new();
            match layer {
                LayerSpec::Conv {
                    kernel,
                    stride,
                    filters,
                    bias,
                } => {
                    let oh = conv_output(h, *kernel, *stride);
                    let ow = conv_output(w, *kernel, *stride);
                    for (f, filter) in filters.iter().enumerate() {
                        let ltf = ThresholdFunction::new(filter.clone(), bias[f])?;
                        let mut positions = Vec::with_capacity(oh * ow);
                        for or in 0..oh {
                            for oc in 0..ow {
                                let mut wires = Vec::with_capacity(filter.len());
                                for ch in 0..c {
                                    for kr in 0..*kernel {
                                        for kc in 0..*kernel {
                                            let r = or * stride + kr;
                                            let col = oc * stride + kc;
                                            wires.push(
                                                wire_names[ch * h * w + r * w + col].clone(),
                                            );
                                        }
                                    }
                                }
                                let out = format!("l{idx}_{}", f * oh * ow + or * ow + oc);
                                next_names.push(out.clone());
                                positions.push(NeuronPosition {
                                    input_wires: wires,
                                    output_wire: out,
                                });
                            }
                        }
                        plans.push(NeuronPlan {
                            layer: idx,
                            index: f,
                            ltf,
                            positions,
                        });
                    }
                    // next_names were pushed filter-major position-minor, but
                    // flat order is channel-major too, so they already agree.
                }
                LayerSpec::Dense { weights, bias } => {
                    for (r, row) in weights.iter().enumerate() {
                        let ltf = ThresholdFunction::new(row.clone(), bias[r])?;
                        let out = format!("l{idx}_{r}");
                        next_names.push(out.clone());
                        plans.push(NeuronPlan {
                            layer: idx,
                            index: r,
                            ltf,
                            positions: vec![NeuronPosition {
                                input_wires: wire_names.clone(),
                                output_wire: out,
                            }],
                        });
                    }
                }
            }
            wire_names = next_names;
            layers.push(plans);
        }
        Ok(layers)
    }

    /// Copy with every neuron's weights and bias rescaled to integers at
    /// `digits` decimal digits of precision.
    pub fn integer_scaled(&self, digits: u32) -> Result<NetworkSpec> {
        let scale_row = |w: &[f64], b: f64| -> Result<(Vec<f64>, f64)> {
            let (sw, sb) = integer_scale(w, b, digits)?;
            Ok((sw.into_iter().map(|v| v as f64).collect(), sb as f64))
        };
        let layers = self
            .layers
            .iter()
            .map(|layer| match layer {
                LayerSpec::Conv {
                    kernel,
                    stride,
                    filters,
                    bias,
                } => {
                    let mut new_filters = Vec::with_capacity(filters.len());
                    let mut new_bias = Vec::with_capacity(bias.len());
                    for (f, b) in filters.iter().zip(bias) {
                        let (w, nb) = scale_row(f, *b)?;
                        new_filters.push(w);
                        new_bias.push(nb);
                    }
                    Ok(LayerSpec::Conv {
                        kernel: *kernel,
                        stride: *stride,
                        filters: new_filters,
                        bias: new_bias,
                    })
                }
                LayerSpec::Dense { weights, bias } => {
                    let mut new_weights = Vec::with_capacity(weights.len());
                    let mut new_bias = Vec::with_capacity(bias.len());
                    for (row, b) in weights.iter().zip(bias) {
                        let (w, nb) = scale_row(row, *b)?;
                        new_weights.push(w);
                        new_bias.push(nb);
                    }
                    Ok(LayerSpec::Dense {
                        weights: new_weights,
                        bias: new_bias,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NetworkSpec {
            input_shape: self.input_shape,
            layers,
        })
    }
}

pub fn load_network(path: &Path) -> Result<NetworkSpec> {
    NetworkSpec::from_json(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone)]
pub struct NeuronPlan {
    pub layer: usize,
    pub index: usize,
    pub ltf: ThresholdFunction,
    pub positions: Vec<NeuronPosition>,
}

#[derive(Debug, Clone)]
pub struct NeuronPosition {
    pub input_wires: Vec<String>,
    pub output_wire: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Abdd,
    MmBaseline,
}

#[derive(Debug, Clone, Copy)]
pub enum EpsilonPolicy {
    /// `ε = 2^{-fan_in}`: on the full-cube sample this forces exact
    /// equivalence (an error below one sample point is zero errors).
    ExactPerNeuron,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct CompileOptions {
    pub algo: Algo,
    pub epsilon: EpsilonPolicy,
    pub fan_in_cap: usize,
    /// Rescale every neuron to integer weights before compiling.
    pub int_precision: Option<u32>,
    /// Random-input agreement budget when the input dimension is too large
    /// to enumerate.
    pub sample_check_budget: usize,
    pub seed: u64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            algo: Algo::Abdd,
            epsilon: EpsilonPolicy::ExactPerNeuron,
            fan_in_cap: DEFAULT_MARGIN_CAP,
            int_precision: None,
            sample_check_budget: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NeuronArtifact {
    pub layer: usize,
    pub index: usize,
    pub fan_in: usize,
    pub positions: usize,
    pub rho: Option<f64>,
    pub iterations: usize,
    pub diagram: Diagram,
    /// Simplified circuit over local inputs `x0..x{fan_in-1}`.
    pub circuit: Circuit,
    pub gates_raw: usize,
    pub gates: usize,
}

#[derive(Debug, Clone)]
pub struct CompiledNetwork {
    /// The spec the artifacts realize (integer-scaled when requested).
    pub spec: NetworkSpec,
    pub algo: Algo,
    pub neurons: Vec<NeuronArtifact>,
    pub circuit: Circuit,
    /// Inputs the forward-agreement check covered, and whether that was the
    /// whole cube.
    pub checked_inputs: usize,
    pub exhaustive: bool,
}

/// Compile every neuron to a diagram and circuit, wire the circuits along
/// the network topology, and prove agreement with the forward pass
/// (exhaustively up to 16 inputs, sampled above).
pub fn compile_network(spec: &NetworkSpec, options: &CompileOptions) -> Result<CompiledNetwork> {
    spec.validate()?;
    let spec = match options.int_precision {
        Some(p) => spec.integer_scaled(p)?,
        None => spec.clone(),
    };
    let plan = spec.plan()?;
    let flat: Vec<&NeuronPlan> = plan.iter().flatten().collect();
    let outcomes: Vec<Result<NeuronArtifact>> = flat
        .par_iter()
        .map(|neuron| compile_neuron(neuron, options))
        .collect();
    let mut artifacts: HashMap<(usize, usize), NeuronArtifact> = HashMap::new();
    for outcome in outcomes {
        let artifact = outcome?;
        artifacts.insert((artifact.layer, artifact.index), artifact);
    }

    let mut layers = Vec::with_capacity(plan.len());
    for layer_plan in &plan {
        let mut circuits = Vec::new();
        let mut output_names = Vec::new();
        for neuron in layer_plan {
            let artifact = &artifacts[&(neuron.layer, neuron.index)];
            let local_names = input_names(neuron.ltf.dim());
            for position in &neuron.positions {
                let map: HashMap<String, String> = local_names
                    .iter()
                    .cloned()
                    .zip(position.input_wires.iter().cloned())
                    .collect();
                circuits.push(artifact.circuit.rename_inputs(&map));
                output_names.push(position.output_wire.clone());
            }
        }
        layers.push(NamedLayer {
            circuits,
            output_names,
        });
    }
    let circuit = compose_network(&input_names(spec.input_dim()), &layers)?;

    let dim = spec.input_dim();
    let exhaustive = dim <= 16;
    let mut checked = 0usize;
    if exhaustive {
        for i in 0..1usize << dim {
            let x = BitVector::from_index(i, dim);
            check_agreement(&spec, &circuit, &x)?;
            checked += 1;
        }
    } else {
        let mut state = options.seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
        for _ in 0..options.sample_check_budget {
            let x = random_instance(&mut state, dim);
            check_agreement(&spec, &circuit, &x)?;
            checked += 1;
        }
    }

    let mut neurons: Vec<NeuronArtifact> = artifacts.into_values().collect();
    neurons.sort_by_key(|a| (a.layer, a.index));
    Ok(CompiledNetwork {
        spec,
        algo: options.algo,
        neurons,
        circuit,
        checked_inputs: checked,
        exhaustive,
    })
}

fn check_agreement(spec: &NetworkSpec, circuit: &Circuit, x: &BitVector) -> Result<()> {
    let want = spec.forward(x)? == 1;
    let got = circuit.evaluate_pm1(x)?;
    if want != got {
        return Err(Error::Invalid {
            what: "compiled network",
            detail: format!("circuit disagrees with the forward pass at {x}"),
        });
    }
    Ok(())
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn random_instance(state: &mut u64, n: usize) -> BitVector {
    let bits = (0..n)
        .map(|_| if splitmix(state) & 1 == 1 { 1 } else { -1 })
        .collect();
    BitVector::new(bits).expect("±1 by construction")
}

fn compile_neuron(neuron: &NeuronPlan, options: &CompileOptions) -> Result<NeuronArtifact> {
    let fan_in = neuron.ltf.dim();
    if fan_in > options.fan_in_cap {
        return Err(Error::DimensionCap {
            n: fan_in,
            cap: options.fan_in_cap,
        });
    }
    let sample = full_sample_with_cap(&neuron.ltf, options.fan_in_cap)?;
    let rho = match margin_with_cap(&neuron.ltf, options.fan_in_cap) {
        Ok(cert) => Some(cert.rho),
        Err(Error::TrivialFunction { .. }) => None,
        Err(other) => return Err(other),
    };
    let epsilon = match options.epsilon {
        EpsilonPolicy::ExactPerNeuron => 0.5f64.powi(fan_in as i32),
        EpsilonPolicy::Fixed(e) => e,
    };
    let mut cfg = BoostConfig::new(epsilon, lifted_hypotheses(fan_in));
    if let Some(rho) = rho {
        cfg = cfg.iteration_cap_for_margin(rho);
    }
    let run = match options.algo {
        Algo::Abdd => boost(&sample, &cfg)?,
        Algo::MmBaseline => boost_mm_baseline(&sample, &cfg)?,
    };
    let raw = dd_to_circuit(&run.diagram)?;
    let circuit = raw.simplify();
    Ok(NeuronArtifact {
        layer: neuron.layer,
        index: neuron.index,
        fan_in,
        positions: neuron.positions.len(),
        rho,
        iterations: run.iterations(),
        gates_raw: raw.gate_count(),
        gates: circuit.gate_count(),
        diagram: run.diagram,
        circuit,
    })
}

impl CompiledNetwork {
    pub fn stats_csv(&self) -> String {
        let mut out = String::from(
            "layer,index,fan_in,positions,rho,iterations,dd_size,dd_width,dd_depth,gates_raw,gates\n",
        );
        for a in &self.neurons {
            let rho = a.rho.map(|r| r.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                a.layer,
                a.index,
                a.fan_in,
                a.positions,
                rho,
                a.iterations,
                a.diagram.size(),
                a.diagram.width(),
                a.diagram.depth(),
                a.gates_raw,
                a.gates
            );
        }
        out
    }

    /// Write the bundle: per-neuron diagram JSONs, the composed circuit, and
    /// the stats table.
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let kind = match self.algo {
            Algo::Abdd => "abdd",
            Algo::MmBaseline => "bdd",
        };
        for a in &self.neurons {
            let path = dir.join(format!("neuron_l{}_i{}.diagram.json", a.layer, a.index));
            std::fs::write(path, a.diagram.to_json(kind))?;
        }
        std::fs::write(dir.join("circuit.json"), self.circuit.to_json())?;
        std::fs::write(dir.join("stats.csv"), self.stats_csv())?;
        Ok(())
    }
}

/// Load the composed circuit back out of a bundle directory (or accept a
/// direct path to a circuit JSON file).
pub fn load_bundle_circuit(path: &Path) -> Result<Circuit> {
    let file = if path.is_dir() {
        path.join("circuit.json")
    } else {
        path.to_path_buf()
    };
    Circuit::from_json(&std::fs::read_to_string(file)?)
}

//! Cycle-accurate simulation of pipelined threshold networks.
//!
//! Each stage is one register bank. On every clock the first stage samples
//! the new input vector and stage `k` samples what stage `k - 1` held on the
//! previous cycle, so one vector enters per cycle and its response leaves
//! `depth` cycles later. Before that the outputs are not ready.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::netlist::BoolNetwork;
use crate::pipeline::PipelinedNetwork;
use crate::tlg::{ConductanceRealization, DeviceModel, ThresholdGate, TlgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("expected {expected} input bit(s), got {got}")]
    Arity { expected: usize, got: usize },
    #[error("node `{net}`: {source}")]
    Gate { net: String, source: TlgError },
    #[error("interface mismatch: {0}")]
    Interface(String),
    #[error("exhaustive check over {0} primary inputs is limited to 20")]
    TooManyInputs(usize),
    #[error("stimulus line {line}: {message}")]
    Stimulus { line: usize, message: String },
}

/// How each gate decides within a cycle.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalMode {
    /// Integer weighted sum against the bias.
    Behavioral,
    /// Differential-conductance latch on the given device.
    Latch(DeviceModel),
}

struct CompiledNode {
    gate: ThresholdGate,
    inputs: Vec<usize>,
    realization: Option<ConductanceRealization>,
}

/// A pipelined network compiled to index form.
pub struct Simulator {
    stages: Vec<Vec<CompiledNode>>,
    names: Vec<Vec<String>>,
    outputs: Vec<usize>,
    n_inputs: usize,
}

/// Register contents of every stage plus the cycle counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    regs: Vec<Vec<bool>>,
    cycle: u64,
}

impl SimState {
    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Registered values of stage `k` (1-based), in stage declaration order.
    pub fn stage(&self, k: usize) -> &[bool] {
        &self.regs[k - 1]
    }
}

impl Simulator {
    pub fn new(p: &PipelinedNetwork, mode: &EvalMode) -> Result<Self, SimError> {
        let mut slot: HashMap<&str, usize> = p
            .primary_inputs()
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut stages = Vec::with_capacity(p.depth());
        let mut names = Vec::with_capacity(p.depth());
        for stage in p.stages() {
            let mut compiled = Vec::with_capacity(stage.len());
            for node in stage {
                let realization = match mode {
                    EvalMode::Behavioral => None,
                    EvalMode::Latch(dev) => Some(node.gate.to_conductances(dev).map_err(|source| SimError::Gate {
                        net: node.output.clone(),
                        source,
                    })?),
                };
                compiled.push(CompiledNode {
                    gate: node.gate.clone(),
                    inputs: node.inputs.iter().map(|i| slot[i.as_str()]).collect(),
                    realization,
                });
            }
            slot = stage.iter().enumerate().map(|(i, n)| (n.output.as_str(), i)).collect();
            names.push(stage.iter().map(|n| n.output.clone()).collect());
            stages.push(compiled);
        }
        let outputs = p.outputs().iter().map(|o| slot[o.net.as_str()]).collect();
        Ok(Simulator {
            stages,
            names,
            outputs,
            n_inputs: p.primary_inputs().len(),
        })
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn reset(&self) -> SimState {
        SimState {
            regs: self.stages.iter().map(|s| vec![false; s.len()]).collect(),
            cycle: 0,
        }
    }

    /// Advances one clock with `inputs` presented to the first stage.
    /// Returns the output bits for the new cycle once the pipeline has
    /// filled (cycle >= depth), otherwise `None`.
    pub fn step(&self, state: &mut SimState, inputs: &[bool]) -> Result<Option<Vec<bool>>, SimError> {
        if inputs.len() != self.n_inputs {
            return Err(SimError::Arity {
                expected: self.n_inputs,
                got: inputs.len(),
            });
        }
        let mut x = Vec::with_capacity(4);
        for k in (0..self.stages.len()).rev() {
            let (before, rest) = state.regs.split_at_mut(k);
            let source: &[bool] = if k == 0 { inputs } else { &before[k - 1] };
            for (i, node) in self.stages[k].iter().enumerate() {
                rest[0][i] = match &node.realization {
                    None => {
                        let s: i64 = node
                            .gate
                            .weights()
                            .iter()
                            .zip(&node.inputs)
                            .filter(|(_, &j)| source[j])
                            .map(|(&w, _)| 2 * i64::from(w))
                            .sum();
                        s + i64::from(node.gate.bias().doubled()) > 0
                    }
                    Some(r) => {
                        x.clear();
                        x.extend(node.inputs.iter().map(|&j| source[j]));
                        r.latch_evaluate(&x).map_err(|source| SimError::Gate {
                            net: self.names[k][i].clone(),
                            source,
                        })?
                    }
                };
            }
        }
        state.cycle += 1;
        if state.cycle < self.depth() as u64 {
            return Ok(None);
        }
        let last = state.regs.last().map(Vec::as_slice).unwrap_or(inputs);
        Ok(Some(self.outputs.iter().map(|&i| last[i]).collect()))
    }

    /// Feeds `vectors` back to back from reset; one entry per cycle.
    pub fn run<'a>(&self, vectors: impl IntoIterator<Item = &'a [bool]>) -> Result<Vec<Option<Vec<bool>>>, SimError> {
        let mut state = self.reset();
        vectors.into_iter().map(|v| self.step(&mut state, v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CheckMode {
    Exhaustive,
    Random { count: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Pass {
        vectors: u64,
    },
    Counterexample {
        /// Position of the failing vector in the stimulus order.
        index: u64,
        /// One bit per reference primary input, in its declared order.
        vector: Vec<bool>,
        expected: Vec<bool>,
        actual: Vec<bool>,
    },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }
}

const SHARD_VECTORS: u64 = 4096;

/// Streams vectors through the pipeline and compares each response,
/// `depth` cycles later, with the Boolean reference. Vectors are split
/// into fixed shards (random shard `k` uses ChaCha stream `k` of `seed`) and
/// the earliest failing vector is reported.
pub fn equivalence_check(
    reference: &BoolNetwork,
    p: &PipelinedNetwork,
    mode: CheckMode,
    eval: &EvalMode,
) -> Result<Verdict, SimError> {
    let n = reference.primary_inputs().len();
    let pi_perm = permutation(reference.primary_inputs(), p.primary_inputs(), "primary inputs")?;
    let port_names: Vec<String> = p.outputs().iter().map(|o| o.name.clone()).collect();
    let po_perm = permutation(&port_names, reference.primary_outputs(), "primary outputs")?;
    let sim = Simulator::new(p, eval)?;

    let total = match mode {
        CheckMode::Exhaustive => {
            if n > 20 {
                return Err(SimError::TooManyInputs(n));
            }
            1u64 << n
        }
        CheckMode::Random { count, .. } => count,
    };
    let vector_at = |shard: u64| -> Box<dyn FnMut(u64) -> Vec<bool> + Send> {
        match mode {
            CheckMode::Exhaustive => Box::new(move |i: u64| (0..n).map(|b| i >> b & 1 == 1).collect()),
            CheckMode::Random { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(shard);
                Box::new(move |_| (0..n).map(|_| rng.random::<bool>()).collect())
            }
        }
    };

    let shards = total.div_ceil(SHARD_VECTORS);
    let failure = (0..shards)
        .into_par_iter()
        .map(|shard| -> Result<Option<Verdict>, SimError> {
            let lo = shard * SHARD_VECTORS;
            let hi = total.min(lo + SHARD_VECTORS);
            let mut next = vector_at(shard);
            let mut state = sim.reset();
            let depth = sim.depth() as u64;
            let mut pending = std::collections::VecDeque::with_capacity(sim.depth() + 1);
            let drain = vec![false; n];
            // depth - 1 filler cycles flush the last responses out.
            for cycle in lo..hi + depth - 1 {
                let ref_vec = if cycle < hi {
                    let v = next(cycle);
                    pending.push_back((cycle, v));
                    pending.back().map(|(_, v)| v.clone()).unwrap()
                } else {
                    drain.clone()
                };
                let sim_in: Vec<bool> = pi_perm.iter().map(|&i| ref_vec[i]).collect();
                if let Some(out) = sim.step(&mut state, &sim_in)? {
                    let (index, vector) = pending.pop_front().expect("one response per vector");
                    let expected = reference.eval_reference(&vector).expect("arity checked");
                    let actual: Vec<bool> = po_perm.iter().map(|&i| out[i]).collect();
                    if actual != expected {
                        return Ok(Some(Verdict::Counterexample {
                            index,
                            vector,
                            expected,
                            actual,
                        }));
                    }
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .next();
    Ok(failure.unwrap_or(Verdict::Pass { vectors: total }))
}

/// For each name in `to`, its index in `from`.
fn permutation(from: &[String], to: &[String], what: &str) -> Result<Vec<usize>, SimError> {
    let index: HashMap<&str, usize> = from.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    if from.len() != to.len() || index.len() != from.len() {
        return Err(SimError::Interface(format!(
            "{what} differ in count ({} vs {})",
            from.len(),
            to.len()
        )));
    }
    to.iter()
        .map(|n| {
            index
                .get(n.as_str())
                .copied()
                .ok_or_else(|| SimError::Interface(format!("{what}: `{n}` missing on one side")))
        })
        .collect()
}

/// Parses a stimulus file: one `0`/`1` string per cycle over the primary
/// inputs in declared order. Blank lines and `#` comments are skipped.
pub fn parse_stimulus(text: &str, width: usize) -> Result<Vec<Vec<bool>>, SimError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| SimError::Stimulus { line: i + 1, message };
        if line.chars().count() != width {
            return Err(err(format!("expected {width} bits, got {}", line.chars().count())));
        }
        out.push(
            line.chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(err(format!("unexpected `{other}`"))),
                })
                .collect::<Result<_, _>>()?,
        );
    }
    Ok(out)
}

/// Renders responses one line per cycle; `X` fills the not-ready window.
pub fn format_responses(responses: &[Option<Vec<bool>>], width: usize) -> String {
    let mut s = String::with_capacity(responses.len() * (width + 1));
    for r in responses {
        match r {
            Some(bits) => s.extend(bits.iter().map(|&b| if b { '1' } else { '0' })),
            None => s.extend(std::iter::repeat_n('X', width)),
        }
        s.push('\n');
    }
    s
}

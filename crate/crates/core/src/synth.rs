//! Boolean network to threshold-logic network mapping.
//!
//! Synthesis is library based: after fan-in decomposition every Boolean
//! gate maps one-to-one onto a threshold gate, except XOR/XNOR, which are not
//! linearly separable and expand into a small AND/OR/combiner network.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::netlist::{kahn_order, BoolGate, BoolNetwork, GateKind, NetlistError};
use crate::tlg::{QuantizationScheme, ThresholdGate, TlgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error(transparent)]
    Structure(#[from] NetlistError),
    #[error("gate driving `{net}`: {kind} with {arity} inputs exceeds fan-in limit {limit}; decompose first")]
    FanIn {
        net: String,
        kind: GateKind,
        arity: usize,
        limit: usize,
    },
    #[error("node `{net}`: {source}")]
    Gate { net: String, source: TlgError },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TlgNode {
    pub output: String,
    pub gate: ThresholdGate,
    pub inputs: Vec<String>,
}

impl TlgNode {
    pub fn new(output: impl Into<String>, gate: ThresholdGate, inputs: &[&str]) -> Self {
        TlgNode {
            output: output.into(),
            gate,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for TlgNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}({})", self.output, self.gate, self.inputs.join(", "))
    }
}

/// A validated DAG of threshold gates.
#[derive(Debug, Clone)]
pub struct TlgNetwork {
    primary_inputs: Vec<String>,
    primary_outputs: Vec<String>,
    nodes: Vec<TlgNode>,
    order: Vec<usize>,
    node_inputs: Vec<Vec<usize>>,
    output_index: Vec<usize>,
}

impl PartialEq for TlgNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.primary_inputs == other.primary_inputs
            && self.primary_outputs == other.primary_outputs
            && self.nodes == other.nodes
    }
}

impl TlgNetwork {
    pub fn new(
        primary_inputs: Vec<String>,
        primary_outputs: Vec<String>,
        nodes: Vec<TlgNode>,
    ) -> Result<Self, SynthError> {
        let n_pi = primary_inputs.len();
        let mut index: HashMap<&str, usize> = HashMap::with_capacity(n_pi + nodes.len());
        let drivers = primary_inputs.iter().chain(nodes.iter().map(|n| &n.output));
        for (i, net) in drivers.enumerate() {
            if index.insert(net.as_str(), i).is_some() {
                return Err(NetlistError::DuplicateDriver { net: net.clone() }.into());
            }
        }
        let lookup = |net: &String| {
            index
                .get(net.as_str())
                .copied()
                .ok_or_else(|| SynthError::from(NetlistError::UndrivenNet { net: net.clone() }))
        };
        let mut node_inputs = Vec::with_capacity(nodes.len());
        for n in &nodes {
            if n.inputs.len() != n.gate.fanin() {
                return Err(SynthError::Gate {
                    net: n.output.clone(),
                    source: TlgError::Arity {
                        expected: n.gate.fanin(),
                        got: n.inputs.len(),
                    },
                });
            }
            node_inputs.push(n.inputs.iter().map(lookup).collect::<Result<Vec<_>, _>>()?);
        }
        let mut seen = HashSet::new();
        for po in &primary_outputs {
            if !seen.insert(po) {
                return Err(NetlistError::DuplicateOutput { net: po.clone() }.into());
            }
        }
        let output_index = primary_outputs.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
        let order = kahn_order(n_pi, &node_inputs).map_err(|g| NetlistError::Cycle {
            net: nodes[g].output.clone(),
        })?;
        Ok(TlgNetwork {
            primary_inputs,
            primary_outputs,
            nodes,
            order,
            node_inputs,
            output_index,
        })
    }

    pub fn primary_inputs(&self) -> &[String] {
        &self.primary_inputs
    }

    pub fn primary_outputs(&self) -> &[String] {
        &self.primary_outputs
    }

    /// Nodes in declaration order.
    pub fn nodes(&self) -> &[TlgNode] {
        &self.nodes
    }

    pub fn topological_order(&self) -> impl Iterator<Item = &TlgNode> {
        self.order.iter().map(|&i| &self.nodes[i])
    }

    /// Per node, net indices of its inputs (primary inputs first, then nodes
    /// in declaration order).
    pub(crate) fn node_input_indices(&self) -> &[Vec<usize>] {
        &self.node_inputs
    }

    pub(crate) fn output_indices(&self) -> &[usize] {
        &self.output_index
    }

    pub(crate) fn order_indices(&self) -> &[usize] {
        &self.order
    }

    /// Combinational evaluation with the behavioral gate model.
    pub fn eval(&self, assignment: &[bool]) -> Result<Vec<bool>, NetlistError> {
        let n_pi = self.primary_inputs.len();
        if assignment.len() != n_pi {
            return Err(NetlistError::AssignmentArity {
                expected: n_pi,
                got: assignment.len(),
            });
        }
        let mut values = vec![false; n_pi + self.nodes.len()];
        values[..n_pi].copy_from_slice(assignment);
        let mut x = Vec::with_capacity(4);
        for &i in &self.order {
            x.clear();
            x.extend(self.node_inputs[i].iter().map(|&j| values[j]));
            values[n_pi + i] = self.nodes[i].gate.doubled_sum(&x) > 0;
        }
        Ok(self.output_index.iter().map(|&j| values[j]).collect())
    }

    /// Checks every node against `scheme`, resolution included.
    pub fn check_scheme(&self, scheme: &QuantizationScheme) -> Result<(), SynthError> {
        for n in &self.nodes {
            scheme.validate(&n.gate).map_err(|source| SynthError::Gate {
                net: n.output.clone(),
                source,
            })?;
        }
        Ok(())
    }
}

impl fmt::Display for TlgNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pi in &self.primary_inputs {
            writeln!(f, "INPUT({pi})")?;
        }
        for po in &self.primary_outputs {
            writeln!(f, "OUTPUT({po})")?;
        }
        for n in &self.nodes {
            writeln!(f, "{n}")?;
        }
        Ok(())
    }
}

impl FromStr for TlgNetwork {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut nodes = Vec::new();
        for (i, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match parse_text_line(line).map_err(|message| SynthError::Parse { line: i + 1, message })? {
                TextLine::Input(n) => inputs.push(n),
                TextLine::Output(n) => outputs.push(n),
                TextLine::Node(n) => nodes.push(n),
            }
        }
        TlgNetwork::new(inputs, outputs, nodes)
    }
}

pub(crate) enum TextLine {
    Input(String),
    Output(String),
    Node(TlgNode),
}

fn valid_net(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']'))
}

fn declaration<'a>(line: &'a str, keyword: &str) -> Option<&'a str> {
    let head = line.get(..keyword.len())?;
    if !head.eq_ignore_ascii_case(keyword) {
        return None;
    }
    line[keyword.len()..]
        .trim_start()
        .strip_prefix('(')?
        .strip_suffix(')')
        .map(str::trim)
}

/// One line of the threshold-network text format (comments stripped).
pub(crate) fn parse_text_line(line: &str) -> Result<TextLine, String> {
    for (kw, is_input) in [("INPUT", true), ("OUTPUT", false)] {
        if let Some(name) = declaration(line, kw) {
            if !valid_net(name) {
                return Err(format!("bad net identifier `{name}`"));
            }
            return Ok(if is_input {
                TextLine::Input(name.to_string())
            } else {
                TextLine::Output(name.to_string())
            });
        }
    }
    let (out, rest) = line
        .split_once('=')
        .ok_or_else(|| format!("expected `INPUT(..)`, `OUTPUT(..)` or `<net> = TLG(..)(..)`, got `{line}`"))?;
    let out = out.trim();
    if !valid_net(out) {
        return Err(format!("bad net identifier `{out}`"));
    }
    let rest = rest.trim();
    let bracket = rest.find(']').ok_or("missing weight list")?;
    let gate_end = bracket + rest[bracket..].find(')').ok_or("unterminated gate")?;
    let gate: ThresholdGate = rest[..=gate_end].parse().map_err(|e: TlgError| e.to_string())?;
    let args = rest[gate_end + 1..]
        .trim()
        .strip_prefix('(')
        .and_then(|a| a.strip_suffix(')'))
        .ok_or("expected `(<in>, ...)` after the gate")?;
    let inputs: Vec<&str> = args.split(',').map(str::trim).collect();
    if let Some(bad) = inputs.iter().find(|n| !valid_net(n)) {
        return Err(format!("bad net identifier `{bad}`"));
    }
    Ok(TextLine::Node(TlgNode::new(out, gate, &inputs)))
}

/// Hands out `<base>__<tag><k>` names that clash with nothing else.
struct NameSource<'a> {
    taken: &'a dyn Fn(&str) -> bool,
    issued: HashSet<String>,
}

impl NameSource<'_> {
    fn fresh(&mut self, base: &str, tag: &str, k: &mut usize) -> String {
        loop {
            let name = format!("{base}__{tag}{k}");
            *k += 1;
            if !(self.taken)(&name) && self.issued.insert(name.clone()) {
                return name;
            }
        }
    }

    fn exact(&mut self, base: &str, suffix: &str) -> String {
        let name = format!("{base}__{suffix}");
        if !(self.taken)(&name) && self.issued.insert(name.clone()) {
            return name;
        }
        let mut k = 0;
        self.fresh(base, suffix, &mut k)
    }
}

/// Splits every gate wider than `limit` into a minimum-depth tree of the
/// base operator, inverting only at the root. XOR/XNOR always decompose to
/// two-input gates, the only parity width with a threshold expansion.
///
/// Operands are merged first-in first-out, which yields the minimum node
/// count and a depth of `ceil(log_limit(k))`; within a node, operands keep
/// their left-to-right source order. Intermediate nets are `<out>__t<k>`.
pub fn decompose_fanin(net: &BoolNetwork, limit: usize) -> BoolNetwork {
    assert!(limit >= 2, "fan-in limit must be at least 2");
    let taken = |n: &str| net.is_net(n);
    let mut names = NameSource {
        taken: &taken,
        issued: HashSet::new(),
    };
    let mut gates = Vec::with_capacity(net.gates().len());
    for g in net.gates() {
        let width = if matches!(g.kind, GateKind::Xor | GateKind::Xnor) {
            2
        } else {
            limit
        };
        if g.inputs.len() <= width {
            gates.push(g.clone());
            continue;
        }
        let (base, _) = g.kind.base();
        let mut queue: VecDeque<(String, usize)> = g.inputs.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        let mut k = 0;
        while queue.len() > width {
            let mut group: Vec<_> = queue.drain(..width).collect();
            group.sort_by_key(|&(_, pos)| pos);
            let pos = group[0].1;
            let out = names.fresh(&g.output, "t", &mut k);
            gates.push(BoolGate {
                output: out.clone(),
                kind: base,
                inputs: group.into_iter().map(|(n, _)| n).collect(),
            });
            queue.push_back((out, pos));
        }
        let mut root: Vec<_> = queue.into_iter().collect();
        root.sort_by_key(|&(_, pos)| pos);
        gates.push(BoolGate {
            output: g.output.clone(),
            kind: g.kind,
            inputs: root.into_iter().map(|(n, _)| n).collect(),
        });
    }
    BoolNetwork::new(net.primary_inputs().to_vec(), net.primary_outputs().to_vec(), gates)
        .expect("decomposition preserves validity")
}

/// The threshold gate a non-parity Boolean gate of width `n` maps onto.
pub fn library_gate(kind: GateKind, n: usize) -> Option<ThresholdGate> {
    Some(match kind {
        GateKind::And => ThresholdGate::and(n),
        GateKind::Or => ThresholdGate::or(n),
        GateKind::Nand => ThresholdGate::nand(n),
        GateKind::Nor => ThresholdGate::nor(n),
        GateKind::Not => ThresholdGate::not(),
        GateKind::Buf => ThresholdGate::buf(),
        GateKind::Xor | GateKind::Xnor => return None,
    })
}

/// Output stage of the XOR expansion: fires when OR is set and AND is not.
pub fn xor_combiner() -> ThresholdGate {
    ThresholdGate::of(&[-1, 1], -0.5)
}

/// Every distinct threshold gate [`synthesize`] can emit for two-input
/// Boolean gates.
pub fn two_input_library() -> Vec<ThresholdGate> {
    vec![
        ThresholdGate::and(2),
        ThresholdGate::or(2),
        ThresholdGate::nand(2),
        ThresholdGate::nor(2),
        ThresholdGate::not(),
        ThresholdGate::buf(),
        xor_combiner(),
    ]
}

/// Maps a fan-in-decomposed network gate by gate. Fails if a gate is wider
/// than the scheme allows or an emitted gate does not conform to it.
pub fn synthesize(net: &BoolNetwork, scheme: &QuantizationScheme) -> Result<TlgNetwork, SynthError> {
    let taken = |n: &str| net.is_net(n);
    let mut names = NameSource {
        taken: &taken,
        issued: HashSet::new(),
    };
    let mut nodes = Vec::with_capacity(net.gates().len());
    for g in net.gates() {
        let arity = g.inputs.len();
        let parity = matches!(g.kind, GateKind::Xor | GateKind::Xnor);
        if arity > scheme.fanin_limit || (parity && arity > 2) {
            return Err(SynthError::FanIn {
                net: g.output.clone(),
                kind: g.kind,
                arity,
                limit: scheme.fanin_limit,
            });
        }
        let ins: Vec<&str> = g.inputs.iter().map(String::as_str).collect();
        match library_gate(g.kind, arity) {
            Some(gate) => nodes.push(TlgNode::new(&g.output, gate, &ins)),
            None => {
                let and = names.exact(&g.output, "and");
                let or = names.exact(&g.output, "or");
                nodes.push(TlgNode::new(&and, ThresholdGate::and(2), &ins));
                nodes.push(TlgNode::new(&or, ThresholdGate::or(2), &ins));
                if g.kind == GateKind::Xor {
                    nodes.push(TlgNode::new(&g.output, xor_combiner(), &[&and, &or]));
                } else {
                    let x = names.exact(&g.output, "xor");
                    nodes.push(TlgNode::new(&x, xor_combiner(), &[&and, &or]));
                    nodes.push(TlgNode::new(&g.output, ThresholdGate::not(), &[&x]));
                }
            }
        }
    }
    let out = TlgNetwork::new(net.primary_inputs().to_vec(), net.primary_outputs().to_vec(), nodes)?;
    out.check_scheme(scheme)?;
    Ok(out)
}

/// Fan-in decomposition followed by synthesis under `scheme`.
pub fn compile(net: &BoolNetwork, scheme: &QuantizationScheme) -> Result<TlgNetwork, SynthError> {
    synthesize(&decompose_fanin(net, scheme.fanin_limit.max(2)), scheme)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NodeCount {
    pub fanin_limit: usize,
    pub nodes: usize,
}

/// Threshold node count after compiling under the unit-weight scheme of
/// each fan-in limit.
pub fn node_count_study(net: &BoolNetwork, limits: &[usize]) -> Result<Vec<NodeCount>, SynthError> {
    limits
        .iter()
        .map(|&limit| {
            let scheme = QuantizationScheme::for_fanin(limit.max(2));
            let tlg = compile(net, &scheme)?;
            Ok(NodeCount {
                fanin_limit: limit,
                nodes: tlg.nodes().len(),
            })
        })
        .collect()
}

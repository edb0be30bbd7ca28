//! Full pipelining of threshold networks.
//!
//! Every gate is a clocked latch, so each gate is its own pipeline register.
//! [`levelize`] assigns gates to stages as soon as possible and inserts
//! buffer gates wherever an edge would skip a stage, so every edge crosses
//! exactly one stage boundary and all outputs leave from the last stage.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::netlist::NetlistError;
use crate::synth::{parse_text_line, SynthError, TextLine, TlgNetwork, TlgNode};
use crate::tlg::{ThresholdGate, TlgError};

pub const DEFAULT_CLOCK_NS: f64 = 0.5;

/// A primary output port and the final-stage net that carries it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputPort {
    pub name: String,
    pub net: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelinedNetwork {
    primary_inputs: Vec<String>,
    outputs: Vec<OutputPort>,
    stages: Vec<Vec<TlgNode>>,
    clock_period_ns: f64,
}

impl PipelinedNetwork {
    /// `stages[0]` is the first gate stage; it reads the registered primary
    /// inputs. Each later stage reads only the stage before it.
    pub fn new(
        primary_inputs: Vec<String>,
        outputs: Vec<OutputPort>,
        stages: Vec<Vec<TlgNode>>,
        clock_period_ns: f64,
    ) -> Result<Self, SynthError> {
        let invalid = |message: String| SynthError::Parse { line: 0, message };
        if !(clock_period_ns > 0.0 && clock_period_ns.is_finite()) {
            return Err(invalid(format!("clock period must be positive, got {clock_period_ns}")));
        }
        let mut driven: HashSet<&str> = HashSet::new();
        let mut previous: HashSet<&str> = HashSet::new();
        for pi in &primary_inputs {
            if !driven.insert(pi) {
                return Err(NetlistError::DuplicateDriver { net: pi.clone() }.into());
            }
            previous.insert(pi);
        }
        for (s, stage) in stages.iter().enumerate() {
            let mut current = HashSet::new();
            for node in stage {
                if node.inputs.len() != node.gate.fanin() {
                    return Err(SynthError::Gate {
                        net: node.output.clone(),
                        source: TlgError::Arity {
                            expected: node.gate.fanin(),
                            got: node.inputs.len(),
                        },
                    });
                }
                if let Some(bad) = node.inputs.iter().find(|i| !previous.contains(i.as_str())) {
                    return Err(invalid(format!(
                        "stage {} node `{}` reads `{bad}`, which is not produced by stage {}",
                        s + 1,
                        node.output,
                        s
                    )));
                }
                if !driven.insert(&node.output) {
                    return Err(NetlistError::DuplicateDriver {
                        net: node.output.clone(),
                    }
                    .into());
                }
                current.insert(node.output.as_str());
            }
            previous = current;
        }
        let mut ports = HashSet::new();
        for port in &outputs {
            if !ports.insert(&port.name) {
                return Err(NetlistError::DuplicateOutput { net: port.name.clone() }.into());
            }
            if !previous.contains(port.net.as_str()) {
                return Err(invalid(format!(
                    "output `{}` is carried by `{}`, which is not produced by the final stage",
                    port.name, port.net
                )));
            }
        }
        Ok(PipelinedNetwork {
            primary_inputs,
            outputs,
            stages,
            clock_period_ns,
        })
    }

    pub fn primary_inputs(&self) -> &[String] {
        &self.primary_inputs
    }

    pub fn outputs(&self) -> &[OutputPort] {
        &self.outputs
    }

    pub fn output_names(&self) -> Vec<&str> {
        self.outputs.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn stages(&self) -> &[Vec<TlgNode>] {
        &self.stages
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn clock_period_ns(&self) -> f64 {
        self.clock_period_ns
    }

    pub fn with_clock_period(mut self, ns: f64) -> Result<Self, SynthError> {
        if !(ns > 0.0 && ns.is_finite()) {
            return Err(SynthError::Parse {
                line: 0,
                message: format!("clock period must be positive, got {ns}"),
            });
        }
        self.clock_period_ns = ns;
        Ok(self)
    }

    pub fn gate_count(&self) -> usize {
        self.stages.iter().map(Vec::len).sum()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TlgNode> {
        self.stages.iter().flatten()
    }

    pub fn timing_report(&self) -> TimingReport {
        let depth = self.depth();
        TimingReport {
            depth,
            latency_ns: depth as f64 * self.clock_period_ns,
            throughput_period_ns: self.clock_period_ns,
            throughput_ghz: 1.0 / self.clock_period_ns,
        }
    }

    /// Longest primary-input to output path counted in gates, by a direct
    /// walk over the node graph (independent of the stage structure).
    pub fn longest_path(&self) -> usize {
        let mut level: HashMap<&str, usize> = self.primary_inputs.iter().map(|p| (p.as_str(), 0)).collect();
        for node in self.nodes() {
            let l = 1 + node.inputs.iter().map(|i| level[i.as_str()]).max().unwrap_or(0);
            level.insert(&node.output, l);
        }
        self.outputs.iter().map(|p| level[p.net.as_str()]).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingReport {
    pub depth: usize,
    pub latency_ns: f64,
    pub throughput_period_ns: f64,
    pub throughput_ghz: f64,
}

/// ASAP levelization with buffer insertion and a 0.5 ns clock.
pub fn levelize(net: &TlgNetwork) -> PipelinedNetwork {
    levelize_with_clock(net, DEFAULT_CLOCK_NS)
}

pub fn levelize_with_clock(net: &TlgNetwork, clock_period_ns: f64) -> PipelinedNetwork {
    let n_pi = net.primary_inputs().len();
    let nodes = net.nodes();
    let ins = net.node_input_indices();
    let name = |i: usize| -> &str {
        if i < n_pi {
            &net.primary_inputs()[i]
        } else {
            &nodes[i - n_pi].output
        }
    };

    let mut level = vec![0usize; n_pi + nodes.len()];
    for &i in net.order_indices() {
        level[n_pi + i] = 1 + ins[i].iter().map(|&j| level[j]).max().unwrap_or(0);
    }
    let depth = level.iter().copied().max().unwrap_or(0).max(1);

    // Latest stage at which each net's value must still be available.
    let mut need = level.clone();
    for (i, node_ins) in ins.iter().enumerate() {
        for &j in node_ins {
            need[j] = need[j].max(level[n_pi + i] - 1);
        }
    }
    for &j in net.output_indices() {
        need[j] = depth;
    }

    let existing: HashSet<&str> = (0..level.len()).map(name).collect();
    let mut issued = HashSet::new();
    // copies[j][t - level[j] - 1] is the buffered copy of net j at stage t
    let mut copies: Vec<Vec<String>> = vec![Vec::new(); level.len()];
    for j in 0..level.len() {
        for t in level[j] + 1..=need[j] {
            let base = format!("{}__s{t}", name(j));
            let mut candidate = base.clone();
            let mut k = 0;
            while existing.contains(candidate.as_str()) || !issued.insert(candidate.clone()) {
                k += 1;
                candidate = format!("{base}_{k}");
            }
            copies[j].push(candidate);
        }
    }
    let at_stage = |j: usize, t: usize| -> String {
        if t == level[j] {
            name(j).to_string()
        } else {
            copies[j][t - level[j] - 1].clone()
        }
    };

    let mut stages: Vec<Vec<TlgNode>> = vec![Vec::new(); depth];
    for (i, node) in nodes.iter().enumerate() {
        let l = level[n_pi + i];
        stages[l - 1].push(TlgNode {
            output: node.output.clone(),
            gate: node.gate.clone(),
            inputs: ins[i].iter().map(|&j| at_stage(j, l - 1)).collect(),
        });
    }
    let buf = ThresholdGate::buf();
    for j in 0..level.len() {
        for t in level[j] + 1..=need[j] {
            stages[t - 1].push(TlgNode {
                output: at_stage(j, t),
                gate: buf.clone(),
                inputs: vec![at_stage(j, t - 1)],
            });
        }
    }
    let outputs = net
        .primary_outputs()
        .iter()
        .zip(net.output_indices())
        .map(|(po, &j)| OutputPort {
            name: po.clone(),
            net: at_stage(j, depth),
        })
        .collect();

    PipelinedNetwork::new(net.primary_inputs().to_vec(), outputs, stages, clock_period_ns)
        .expect("levelization yields a valid pipeline")
}

impl fmt::Display for PipelinedNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CLOCK_NS {}", self.clock_period_ns)?;
        for pi in &self.primary_inputs {
            writeln!(f, "INPUT({pi})")?;
        }
        for p in &self.outputs {
            if p.name == p.net {
                writeln!(f, "OUTPUT({})", p.name)?;
            } else {
                writeln!(f, "OUTPUT({}) = {}", p.name, p.net)?;
            }
        }
        for (s, stage) in self.stages.iter().enumerate() {
            writeln!(f, "STAGE {}", s + 1)?;
            for node in stage {
                writeln!(f, "{node}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for PipelinedNetwork {
    type Err = SynthError;

    /// Reads the staged text format: the threshold-network format plus a
    /// `CLOCK_NS <period>` line, `STAGE <k>` headers numbered from 1, and
    /// `OUTPUT(<port>) = <net>` for ports carried by a differently named net.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut stages: Vec<Vec<TlgNode>> = Vec::new();
        let mut clock = DEFAULT_CLOCK_NS;
        for (i, raw) in s.lines().enumerate() {
            let err = |message: String| SynthError::Parse { line: i + 1, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or("");
            if head.eq_ignore_ascii_case("CLOCK_NS") {
                clock = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| err("expected `CLOCK_NS <period>`".into()))?;
                continue;
            }
            if head.eq_ignore_ascii_case("STAGE") {
                let k: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| err("expected `STAGE <k>`".into()))?;
                if k != stages.len() + 1 {
                    return Err(err(format!("expected STAGE {}, found STAGE {k}", stages.len() + 1)));
                }
                stages.push(Vec::new());
                continue;
            }
            if line.len() >= 6 && line[..6].eq_ignore_ascii_case("OUTPUT") {
                if let Some((port, net)) = line.split_once('=') {
                    let port = port.trim();
                    let name = port[6..]
                        .trim()
                        .strip_prefix('(')
                        .and_then(|p| p.strip_suffix(')'))
                        .ok_or_else(|| err(format!("bad output declaration `{line}`")))?;
                    outputs.push(OutputPort {
                        name: name.trim().to_string(),
                        net: net.trim().to_string(),
                    });
                    continue;
                }
            }
            match parse_text_line(line).map_err(err)? {
                TextLine::Input(n) => inputs.push(n),
                TextLine::Output(n) => outputs.push(OutputPort {
                    name: n.clone(),
                    net: n,
                }),
                TextLine::Node(node) => stages
                    .last_mut()
                    .ok_or_else(|| err("gate before the first STAGE header".into()))?
                    .push(node),
            }
        }
        PipelinedNetwork::new(inputs, outputs, stages, clock)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;
    use crate::synth::compile;
    use crate::tlg::QuantizationScheme;

    fn tlg(text: &str) -> TlgNetwork {
        compile(&parse_bench(text).unwrap(), &QuantizationScheme::default()).unwrap()
    }

    /// Every edge spans exactly one boundary.
    fn assert_one_stage_per_edge(p: &PipelinedNetwork) {
        let mut stage_of: HashMap<&str, usize> = p.primary_inputs().iter().map(|n| (n.as_str(), 0)).collect();
        for (s, stage) in p.stages().iter().enumerate() {
            for node in stage {
                stage_of.insert(&node.output, s + 1);
            }
        }
        for (s, stage) in p.stages().iter().enumerate() {
            for node in stage {
                for i in &node.inputs {
                    assert_eq!(stage_of[i.as_str()], s, "{} reads {}", node.output, i);
                }
            }
        }
        for port in p.outputs() {
            assert_eq!(stage_of[port.net.as_str()], p.depth());
        }
    }

    #[test]
    fn chain_needs_no_buffers() {
        let p = levelize(&tlg("INPUT(a)\nOUTPUT(c)\na1 = NOT(a)\nb = NOT(a1)\nc = BUF(b)"));
        assert_eq!(p.depth(), 3);
        assert_eq!(p.gate_count(), 3);
        assert_one_stage_per_edge(&p);
    }

    #[test]
    fn skip_edge_gets_one_buffer() {
        // x is at depth 1 and feeds z at depth 3
        let t = tlg("INPUT(a)\nINPUT(b)\nOUTPUT(z)\nx = AND(a, b)\ny = NOT(x)\nz = OR(x, y)");
        let p = levelize(&t);
        assert_eq!(p.depth(), 3);
        let bufs: Vec<_> = p.nodes().filter(|n| n.output.contains("__s")).collect();
        assert_eq!(bufs.len(), 1, "{p}");
        assert_eq!(bufs[0].output, "x__s2");
        assert!(bufs.iter().all(|n| n.gate == ThresholdGate::buf()));
        assert_one_stage_per_edge(&p);
    }

    #[test]
    fn outputs_and_inputs_are_equalized() {
        let t = tlg("INPUT(a)\nINPUT(b)\nOUTPUT(a)\nOUTPUT(y)\nOUTPUT(m)\nm = NOT(b)\nn = NOT(m)\ny = AND(a, n)");
        let p = levelize(&t);
        assert_eq!(p.depth(), 3);
        assert_one_stage_per_edge(&p);
        assert_eq!(
            p.outputs()[0],
            OutputPort {
                name: "a".into(),
                net: "a__s3".into()
            }
        );
        assert_eq!(p.outputs()[2].net, "m__s3");
        assert_eq!(p.longest_path(), 3);
    }

    #[test]
    fn pass_through_only_network_gets_one_stage() {
        let t = TlgNetwork::new(vec!["a".into()], vec!["a".into()], vec![]).unwrap();
        let p = levelize(&t);
        assert_eq!(p.depth(), 1);
        assert_eq!(p.outputs()[0].net, "a__s1");
    }

    #[test]
    fn timing() {
        let p = levelize(&tlg("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)"));
        let t = p.timing_report();
        assert_eq!(t.depth, 1);
        assert_eq!(t.latency_ns, 0.5);
        assert_eq!(t.throughput_period_ns, 0.5);
        assert_eq!(t.throughput_ghz, 2.0);
        let mut chain = String::from("INPUT(a)\nOUTPUT(n9)\nn0 = NOT(a)\n");
        for i in 1..10 {
            chain += &format!("n{i} = NOT(n{})\n", i - 1);
        }
        let t = levelize(&tlg(&chain)).timing_report();
        assert_eq!((t.depth, t.latency_ns, t.throughput_period_ns), (10, 5.0, 0.5));
    }

    #[test]
    fn staged_text_round_trip() {
        let t = tlg(include_str!("../data/full_adder.bench"));
        let p = levelize(&t);
        let text = p.to_string();
        assert!(text.starts_with("CLOCK_NS 0.5\n"));
        let back: PipelinedNetwork = text.parse().unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_string(), text);
    }

    #[test]
    fn staged_text_rejects_broken_pipelines() {
        let skip = "INPUT(a)\nOUTPUT(y)\nSTAGE 1\nx = TLG([1], -0.5)(a)\nSTAGE 2\ny = TLG([1], -0.5)(a)\n";
        assert!(skip.parse::<PipelinedNetwork>().is_err());
        let gap = "INPUT(a)\nOUTPUT(y)\nSTAGE 2\ny = TLG([1], -0.5)(a)\n";
        assert!(gap.parse::<PipelinedNetwork>().is_err());
        let early = "INPUT(a)\nOUTPUT(x)\nSTAGE 1\nx = TLG([1], -0.5)(a)\nSTAGE 2\ny = TLG([1], -0.5)(x)\n";
        assert!(early.parse::<PipelinedNetwork>().is_err());
        let clock = "CLOCK_NS 0\nINPUT(a)\nOUTPUT(x)\nSTAGE 1\nx = TLG([1], -0.5)(a)\n";
        assert!(clock.parse::<PipelinedNetwork>().is_err());
        let ok = "CLOCK_NS 1.25\nINPUT(a)\nOUTPUT(x)\nSTAGE 1\nx = TLG([1], -0.5)(a)\n";
        assert_eq!(ok.parse::<PipelinedNetwork>().unwrap().clock_period_ns(), 1.25);
    }
}

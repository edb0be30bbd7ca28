//! Combinational Boolean netlists in the ISCAS `.bench` format.
//!
//! A [`BoolNetwork`] is validated on construction (single driver per net, no
//! undriven nets, no cycles, arity per gate kind) and is immutable afterwards.
//! It doubles as the golden functional model every downstream transformation
//! is checked against.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetlistError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("net `{net}` has more than one driver")]
    DuplicateDriver { net: String },
    #[error("net `{net}` is read but never driven")]
    UndrivenNet { net: String },
    #[error("combinational cycle through net `{net}`")]
    Cycle { net: String },
    #[error("gate driving `{net}`: {kind} cannot take {got} input(s)")]
    Arity { net: String, kind: GateKind, got: usize },
    #[error("net `{net}` is declared as an output more than once")]
    DuplicateOutput { net: String },
    #[error("expected {expected} input value(s), got {got}")]
    AssignmentArity { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::And,
        GateKind::Nand,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buf,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
        }
    }

    pub fn is_unary(self) -> bool {
        matches!(self, GateKind::Not | GateKind::Buf)
    }

    pub fn accepts_arity(self, n: usize) -> bool {
        if self.is_unary() {
            n == 1
        } else {
            n >= 2
        }
    }

    /// The non-inverting operator this kind is built from, and whether the
    /// result is inverted.
    pub fn base(self) -> (GateKind, bool) {
        match self {
            GateKind::Nand => (GateKind::And, true),
            GateKind::Nor => (GateKind::Or, true),
            GateKind::Xnor => (GateKind::Xor, true),
            GateKind::Not => (GateKind::Buf, true),
            k => (k, false),
        }
    }

    pub fn eval(self, inputs: &[bool]) -> bool {
        let (base, invert) = self.base();
        let v = match base {
            GateKind::And => inputs.iter().all(|&b| b),
            GateKind::Or => inputs.iter().any(|&b| b),
            GateKind::Xor => inputs.iter().fold(false, |acc, &b| acc ^ b),
            GateKind::Buf => inputs[0],
            _ => unreachable!("base() only returns non-inverting kinds"),
        };
        v ^ invert
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for GateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        let kind = match upper.as_str() {
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            "NOT" => GateKind::Not,
            "BUF" | "BUFF" => GateKind::Buf,
            _ => return Err(format!("unknown gate operator `{s}`")),
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoolGate {
    pub output: String,
    pub kind: GateKind,
    pub inputs: Vec<String>,
}

impl BoolGate {
    pub fn new(output: impl Into<String>, kind: GateKind, inputs: &[&str]) -> Self {
        BoolGate {
            output: output.into(),
            kind,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// A validated combinational network. Nets are indexed with primary inputs
/// first, then gate outputs in declaration order.
#[derive(Debug, Clone)]
pub struct BoolNetwork {
    primary_inputs: Vec<String>,
    primary_outputs: Vec<String>,
    gates: Vec<BoolGate>,
    order: Vec<usize>,
    net_index: HashMap<String, usize>,
    gate_inputs: Vec<Vec<usize>>,
    output_index: Vec<usize>,
}

impl PartialEq for BoolNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.primary_inputs == other.primary_inputs
            && self.primary_outputs == other.primary_outputs
            && self.gates == other.gates
    }
}

impl BoolNetwork {
    pub fn new(
        primary_inputs: Vec<String>,
        primary_outputs: Vec<String>,
        gates: Vec<BoolGate>,
    ) -> Result<Self, NetlistError> {
        let mut net_index = HashMap::with_capacity(primary_inputs.len() + gates.len());
        for (i, pi) in primary_inputs.iter().enumerate() {
            if net_index.insert(pi.clone(), i).is_some() {
                return Err(NetlistError::DuplicateDriver { net: pi.clone() });
            }
        }
        for (g, gate) in gates.iter().enumerate() {
            if !gate.kind.accepts_arity(gate.inputs.len()) {
                return Err(NetlistError::Arity {
                    net: gate.output.clone(),
                    kind: gate.kind,
                    got: gate.inputs.len(),
                });
            }
            if net_index
                .insert(gate.output.clone(), primary_inputs.len() + g)
                .is_some()
            {
                return Err(NetlistError::DuplicateDriver {
                    net: gate.output.clone(),
                });
            }
        }

        let lookup = |net: &String| {
            net_index
                .get(net)
                .copied()
                .ok_or_else(|| NetlistError::UndrivenNet { net: net.clone() })
        };
        let gate_inputs = gates
            .iter()
            .map(|g| g.inputs.iter().map(lookup).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;

        let mut seen = HashSet::new();
        for po in &primary_outputs {
            if !seen.insert(po) {
                return Err(NetlistError::DuplicateOutput { net: po.clone() });
            }
        }
        let output_index = primary_outputs.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;

        let order = kahn_order(primary_inputs.len(), &gate_inputs).map_err(|g| NetlistError::Cycle {
            net: gates[g].output.clone(),
        })?;

        Ok(BoolNetwork {
            primary_inputs,
            primary_outputs,
            gates,
            order,
            net_index,
            gate_inputs,
            output_index,
        })
    }

    pub fn primary_inputs(&self) -> &[String] {
        &self.primary_inputs
    }

    pub fn primary_outputs(&self) -> &[String] {
        &self.primary_outputs
    }

    /// Gates in declaration order.
    pub fn gates(&self) -> &[BoolGate] {
        &self.gates
    }

    pub fn net_count(&self) -> usize {
        self.primary_inputs.len() + self.gates.len()
    }

    pub fn is_net(&self, name: &str) -> bool {
        self.net_index.contains_key(name)
    }

    /// Gates such that every gate follows all gates driving its inputs. Ties
    /// are broken by declaration order.
    pub fn topological_order(&self) -> Vec<&BoolGate> {
        self.order.iter().map(|&g| &self.gates[g]).collect()
    }

    /// Evaluates the network under standard Boolean semantics. `assignment`
    /// holds one bit per primary input, in declaration order.
    pub fn eval_reference(&self, assignment: &[bool]) -> Result<Vec<bool>, NetlistError> {
        let n_pi = self.primary_inputs.len();
        if assignment.len() != n_pi {
            return Err(NetlistError::AssignmentArity {
                expected: n_pi,
                got: assignment.len(),
            });
        }
        let mut values = vec![false; self.net_count()];
        values[..n_pi].copy_from_slice(assignment);
        let mut scratch = Vec::with_capacity(4);
        for &g in &self.order {
            scratch.clear();
            scratch.extend(self.gate_inputs[g].iter().map(|&i| values[i]));
            values[n_pi + g] = self.gates[g].kind.eval(&scratch);
        }
        Ok(self.output_index.iter().map(|&i| values[i]).collect())
    }

    pub fn stats(&self) -> NetworkStats {
        let n_pi = self.primary_inputs.len();
        let mut gates_by_kind = BTreeMap::new();
        let mut fanout = vec![0usize; self.net_count()];
        let mut max_fanin = 0;
        for (gate, ins) in self.gates.iter().zip(&self.gate_inputs) {
            *gates_by_kind.entry(gate.kind.keyword().to_string()).or_insert(0) += 1;
            max_fanin = max_fanin.max(ins.len());
            for &i in ins {
                fanout[i] += 1;
            }
        }
        let mut level = vec![0usize; self.net_count()];
        for &g in &self.order {
            level[n_pi + g] = 1 + self.gate_inputs[g].iter().map(|&i| level[i]).max().unwrap_or(0);
        }
        let depth = self.output_index.iter().map(|&i| level[i]).max().unwrap_or(0);
        NetworkStats {
            primary_inputs: n_pi,
            primary_outputs: self.primary_outputs.len(),
            gate_count: self.gates.len(),
            net_count: self.net_count(),
            gates_by_kind,
            max_fanin,
            max_fanout: fanout.into_iter().max().unwrap_or(0),
            depth,
        }
    }

    /// Serializes back to `.bench` text. Parsing the result yields an equal
    /// network.
    pub fn to_bench(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BoolNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pi in &self.primary_inputs {
            writeln!(f, "INPUT({pi})")?;
        }
        for po in &self.primary_outputs {
            writeln!(f, "OUTPUT({po})")?;
        }
        for g in &self.gates {
            writeln!(f, "{} = {}({})", g.output, g.kind, g.inputs.join(", "))?;
        }
        Ok(())
    }
}

impl FromStr for BoolNetwork {
    type Err = NetlistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_bench(s)
    }
}

/// Kahn's algorithm over gate indices with declaration-order tie breaking.
/// On a cycle, returns the index of some gate that could not be ordered.
pub(crate) fn kahn_order(n_pi: usize, gate_inputs: &[Vec<usize>]) -> Result<Vec<usize>, usize> {
    let n = gate_inputs.len();
    let mut pending = vec![0usize; n];
    let mut readers: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (g, ins) in gate_inputs.iter().enumerate() {
        for &i in ins {
            if i >= n_pi {
                pending[g] += 1;
                readers[i - n_pi].push(g);
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&g| pending[g] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(g)) = ready.pop() {
        order.push(g);
        for &r in &readers[g] {
            pending[r] -= 1;
            if pending[r] == 0 {
                ready.push(Reverse(r));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&g| pending[g] > 0).unwrap_or(0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkStats {
    pub primary_inputs: usize,
    pub primary_outputs: usize,
    pub gate_count: usize,
    pub net_count: usize,
    pub gates_by_kind: BTreeMap<String, usize>,
    pub max_fanin: usize,
    pub max_fanout: usize,
    /// Longest primary-input to primary-output path, in gates.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token<'a> {
    Ident(&'a str),
    LParen,
    RParen,
    Comma,
    Equals,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']')
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<(usize, Token<'_>)>, NetlistError> {
    let mut tokens = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        let column = line[..start].chars().count() + 1;
        let tok = match c {
            c if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '(' => Token::LParen,
            ')' => Token::RParen,
            ',' => Token::Comma,
            '=' => Token::Equals,
            c if is_ident_char(c) => {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if !is_ident_char(c) {
                        break;
                    }
                    end = i + c.len_utf8();
                    chars.next();
                }
                tokens.push((column, Token::Ident(&line[start..end])));
                continue;
            }
            other => {
                return Err(NetlistError::Syntax {
                    line: line_no,
                    column,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        chars.next();
        tokens.push((column, tok));
    }
    Ok(tokens)
}

struct LineParser<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    pos: usize,
    line: usize,
    end_column: usize,
}

impl<'a> LineParser<'a> {
    fn error(&self, message: impl Into<String>) -> NetlistError {
        let column = self.tokens.get(self.pos).map(|(c, _)| *c).unwrap_or(self.end_column);
        NetlistError::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Option<&Token<'a>> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t);
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token<'static>, what: &str) -> Result<(), NetlistError> {
        match self.tokens.get(self.pos) {
            Some((_, t)) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<&'a str, NetlistError> {
        match self.tokens.get(self.pos) {
            Some((_, Token::Ident(s))) => {
                let s = *s;
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn finish(&mut self) -> Result<(), NetlistError> {
        if self.pos < self.tokens.len() {
            Err(self.error("unexpected trailing input"))
        } else {
            Ok(())
        }
    }

    /// `( id {, id} )`
    fn arg_list(&mut self) -> Result<Vec<&'a str>, NetlistError> {
        self.expect(Token::LParen, "`(`")?;
        let mut args = vec![self.ident("net identifier")?];
        loop {
            match self.next() {
                Some(Token::Comma) => args.push(self.ident("net identifier")?),
                Some(Token::RParen) => return Ok(args),
                _ => {
                    self.pos -= 1;
                    return Err(self.error("expected `,` or `)`"));
                }
            }
        }
    }
}

/// Parses `.bench` text into a validated network. Operator keywords are
/// case-insensitive; net identifiers are case-sensitive.
pub fn parse_bench(text: &str) -> Result<BoolNetwork, NetlistError> {
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut gates = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(body, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let mut p = LineParser {
            tokens,
            pos: 0,
            line: line_no,
            end_column: body.chars().count() + 1,
        };
        let head = p.ident("`INPUT`, `OUTPUT` or a net identifier")?;
        if p.tokens.get(1).map(|(_, t)| t) == Some(&Token::Equals) {
            p.pos += 1;
            let op_col = p.tokens.get(p.pos).map(|(c, _)| *c).unwrap_or(p.end_column);
            let op = p.ident("gate operator")?;
            let kind = op.parse::<GateKind>().map_err(|message| NetlistError::Syntax {
                line: line_no,
                column: op_col,
                message,
            })?;
            let args = p.arg_list()?;
            p.finish()?;
            gates.push(BoolGate::new(head, kind, &args));
        } else {
            let decl = head.to_ascii_uppercase();
            let target = match decl.as_str() {
                "INPUT" => &mut inputs,
                "OUTPUT" => &mut outputs,
                _ => {
                    p.pos = 0;
                    return Err(p.error(format!("unknown declaration `{head}`")));
                }
            };
            p.expect(Token::LParen, "`(`")?;
            let name = p.ident("net identifier")?;
            p.expect(Token::RParen, "`)`")?;
            p.finish()?;
            target.push(name.to_string());
        }
    }

    BoolNetwork::new(inputs, outputs, gates)
}

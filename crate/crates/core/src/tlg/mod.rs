//! Threshold logic gates.
//!
//! A gate fires when the weighted sum of its binary inputs plus a bias is
//! positive. Weights are integers and the bias is a half-integer, so the sum
//! can never be exactly zero and every gate has a well-defined decision.
//!
//! The bias doubles as the threshold: in hardware it is a branch of the
//! comparator that is always active, i.e. a weight on a constant-1 input.

mod device;
mod variation;

pub use device::{
    parse_conductance, parse_resistance, BranchPair, ConductanceRealization, DeviceModel, INPUT_VT_VOLTS,
    NOMINAL_VT_VOLTS, SUPPLY_VOLTS,
};
pub use variation::{monte_carlo, monte_carlo_failure_rate, MonteCarloResult, Variation};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Exhaustive analyses enumerate `2^fanin` vectors.
pub const MAX_FANIN: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TlgError {
    #[error("gate has {expected} input(s), got {got} value(s)")]
    Arity { expected: usize, got: usize },
    #[error("gate needs between 1 and {MAX_FANIN} inputs, got {0}")]
    FanIn(usize),
    #[error("all weights are zero")]
    Degenerate,
    #[error("`{0}` is not a half-integer bias")]
    NotHalfInteger(String),
    #[error("magnitude {magnitude} exceeds the range of device `{device}` (max {max})")]
    LevelRange { magnitude: f64, device: String, max: f64 },
    #[error("comparator tie: both pull-down paths carry {0} S")]
    Tie(f64),
    #[error("scheme violation: {0}")]
    Scheme(String),
    #[error("invalid device: {0}")]
    Device(String),
    #[error("cannot parse gate `{0}`")]
    Parse(String),
}

/// A half-integer `k + 1/2`, stored doubled so arithmetic stays exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bias(i32);

impl Bias {
    /// `doubled` must be odd.
    pub fn from_doubled(doubled: i32) -> Option<Bias> {
        (doubled.rem_euclid(2) == 1).then_some(Bias(doubled))
    }

    pub fn doubled(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn magnitude_doubled(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn from_f64(v: f64) -> Result<Bias, TlgError> {
        let d = v * 2.0;
        if d.fract() == 0.0 && d.abs() < f64::from(i32::MAX) {
            Bias::from_doubled(d as i32).ok_or_else(|| TlgError::NotHalfInteger(v.to_string()))
        } else {
            Err(TlgError::NotHalfInteger(v.to_string()))
        }
    }
}

impl fmt::Display for Bias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        write!(f, "{sign}{}.5", self.0.unsigned_abs() / 2)
    }
}

impl FromStr for Bias {
    type Err = TlgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().replace('\u{2212}', "-");
        let v: f64 = t.parse().map_err(|_| TlgError::NotHalfInteger(s.to_string()))?;
        Bias::from_f64(v)
    }
}

impl Serialize for Bias {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ThresholdGate {
    weights: Vec<i32>,
    bias: Bias,
}

impl ThresholdGate {
    pub fn new(weights: Vec<i32>, bias: Bias) -> Result<Self, TlgError> {
        if weights.is_empty() || weights.len() > MAX_FANIN {
            return Err(TlgError::FanIn(weights.len()));
        }
        Ok(ThresholdGate { weights, bias })
    }

    /// Convenience for literals such as `ThresholdGate::of(&[1, 1], -1.5)`.
    /// Panics on an invalid gate.
    pub fn of(weights: &[i32], bias: f64) -> Self {
        ThresholdGate::new(weights.to_vec(), Bias::from_f64(bias).unwrap()).unwrap()
    }

    pub fn and(n: usize) -> Self {
        Self::uniform(n, 1, 2 * n as i32 - 1, -1)
    }

    pub fn or(n: usize) -> Self {
        Self::uniform(n, 1, 1, -1)
    }

    pub fn nand(n: usize) -> Self {
        Self::uniform(n, -1, 2 * n as i32 - 1, 1)
    }

    pub fn nor(n: usize) -> Self {
        Self::uniform(n, -1, 1, 1)
    }

    pub fn not() -> Self {
        Self::of(&[-1], 0.5)
    }

    pub fn buf() -> Self {
        Self::of(&[1], -0.5)
    }

    fn uniform(n: usize, w: i32, bias_mag_doubled: i32, bias_sign: i32) -> Self {
        ThresholdGate::new(vec![w; n], Bias(bias_sign * bias_mag_doubled)).unwrap()
    }

    pub fn weights(&self) -> &[i32] {
        &self.weights
    }

    pub fn bias(&self) -> Bias {
        self.bias
    }

    pub fn fanin(&self) -> usize {
        self.weights.len()
    }

    /// Twice the weighted sum `Σ w_i x_i + bias`; always odd.
    pub fn doubled_sum(&self, inputs: &[bool]) -> i64 {
        let s: i64 = self
            .weights
            .iter()
            .zip(inputs)
            .filter(|(_, &x)| x)
            .map(|(&w, _)| i64::from(w))
            .sum();
        2 * s + i64::from(self.bias.0)
    }

    pub fn evaluate(&self, inputs: &[bool]) -> Result<bool, TlgError> {
        if inputs.len() != self.fanin() {
            return Err(TlgError::Arity {
                expected: self.fanin(),
                got: inputs.len(),
            });
        }
        Ok(self.doubled_sum(inputs) > 0)
    }

    /// Negates every weight and the bias, complementing the function.
    pub fn negated(&self) -> Self {
        ThresholdGate {
            weights: self.weights.iter().map(|w| -w).collect(),
            bias: Bias(-self.bias.0),
        }
    }

    /// Truth table indexed by input vector, bit `i` of the index being input `i`.
    pub fn truth_table(&self) -> Vec<bool> {
        input_vectors(self.fanin()).map(|x| self.doubled_sum(&x) > 0).collect()
    }

    pub fn margin_analysis(&self) -> Result<MarginReport, TlgError> {
        if self.weights.iter().all(|&w| w == 0) {
            return Err(TlgError::Degenerate);
        }
        let (mut lo, mut hi, mut min_abs) = (i64::MAX, i64::MIN, i64::MAX);
        for x in input_vectors(self.fanin()) {
            let s = self.doubled_sum(&x);
            lo = lo.min(s);
            hi = hi.max(s);
            min_abs = min_abs.min(s.abs());
        }
        let min_margin = Ratio::new(min_abs, 2);
        let sum_spread = Ratio::new(hi - lo, 2);
        Ok(MarginReport {
            min_margin,
            sum_spread,
            resolution: min_margin / sum_spread,
        })
    }
}

impl fmt::Display for ThresholdGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w: Vec<String> = self.weights.iter().map(i32::to_string).collect();
        write!(f, "TLG([{}], {})", w.join(","), self.bias)
    }
}

impl FromStr for ThresholdGate {
    type Err = TlgError;

    /// Accepts `TLG([w1,...], b)`; the `TLG` prefix is optional.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TlgError::Parse(s.to_string());
        let t = s.trim();
        let t = t
            .strip_prefix("TLG")
            .or_else(|| t.strip_prefix("tlg"))
            .unwrap_or(t)
            .trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(err)?
            .trim();
        let inner = inner.strip_prefix('[').ok_or_else(err)?;
        let (ws, rest) = inner.split_once(']').ok_or_else(err)?;
        let bias_text = rest.trim().strip_prefix(',').ok_or_else(err)?;
        let weights = ws
            .split(',')
            .map(|w| w.trim().replace('\u{2212}', "-").parse::<i32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| err())?;
        ThresholdGate::new(weights, bias_text.parse()?)
    }
}

/// Iterates all `2^n` input vectors; bit `i` of the counter drives input `i`.
pub fn input_vectors(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..1 << n).map(move |v| (0..n).map(|i| v >> i & 1 == 1).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarginReport {
    /// Smallest `|S(x)|` over all input vectors.
    pub min_margin: Ratio<i64>,
    /// `max S(x) - min S(x)`.
    pub sum_spread: Ratio<i64>,
    /// `min_margin / sum_spread`: the relative separation the comparator must
    /// resolve.
    pub resolution: Ratio<i64>,
}

/// Allowed alphabets for gate fan-in, weight magnitudes and bias levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizationScheme {
    pub fanin_limit: usize,
    pub weight_magnitudes: BTreeSet<u32>,
    pub bias_levels: BTreeSet<Bias>,
    pub required_resolution: Ratio<i64>,
}

impl Default for QuantizationScheme {
    /// Two-input gates, weights `±1`, four bias levels `{±0.5, ±1.5}`, 25%
    /// comparator resolution.
    fn default() -> Self {
        QuantizationScheme::for_fanin(2)
    }
}

impl QuantizationScheme {
    /// Unit weights with the `2n` bias levels `±0.5 .. ±(n - 0.5)`, enough for
    /// n-input AND/OR/NAND/NOR. The resolution requirement is that of an
    /// n-input AND, `1 / 2n`.
    pub fn for_fanin(n: usize) -> Self {
        assert!((1..=MAX_FANIN).contains(&n));
        let bias_levels = (0..n as i32)
            .flat_map(|k| [Bias(2 * k + 1), Bias(-(2 * k + 1))])
            .collect();
        QuantizationScheme {
            fanin_limit: n,
            weight_magnitudes: BTreeSet::from([1]),
            bias_levels,
            required_resolution: Ratio::new(1, 2 * n as i64),
        }
    }

    /// Resolves `default`, `fanin2`, `fanin3`, `fanin4` (also `2`, `3`, `4`).
    pub fn named(name: &str) -> Option<Self> {
        let n = match name.to_ascii_lowercase().as_str() {
            "default" | "fanin2" | "2" => 2,
            "fanin3" | "3" => 3,
            "fanin4" | "4" => 4,
            _ => return None,
        };
        Some(QuantizationScheme::for_fanin(n))
    }

    pub fn validate(&self, gate: &ThresholdGate) -> Result<(), TlgError> {
        if gate.fanin() > self.fanin_limit {
            return Err(TlgError::Scheme(format!(
                "{gate}: fan-in {} exceeds limit {}",
                gate.fanin(),
                self.fanin_limit
            )));
        }
        if let Some(w) = gate
            .weights()
            .iter()
            .find(|w| !self.weight_magnitudes.contains(&w.unsigned_abs()))
        {
            return Err(TlgError::Scheme(format!(
                "{gate}: weight {w} not in the allowed magnitudes"
            )));
        }
        if !self.bias_levels.contains(&gate.bias()) {
            return Err(TlgError::Scheme(format!(
                "{gate}: bias {} not an allowed level",
                gate.bias()
            )));
        }
        let m = gate.margin_analysis()?;
        if m.resolution < self.required_resolution {
            return Err(TlgError::Scheme(format!(
                "{gate}: resolution {} below required {}",
                m.resolution, self.required_resolution
            )));
        }
        Ok(())
    }
}

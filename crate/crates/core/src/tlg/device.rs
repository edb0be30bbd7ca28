//! Resistive device models and the differential-conductance realization of
//! a threshold gate.
//!
//! Every input branch and the bias branch drive a pair of programmable
//! conductances, one into each pull-down path of the latch. A branch encodes
//! a signed magnitude `m` as `(g_off + m * (g_unit - g_off), g_off)`, with the
//! strong side on the positive path for positive values. The latch resolves
//! to 1 when the positive path conducts more.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{input_vectors, ThresholdGate, TlgError};

/// Supply of the latch core, volts.
pub const SUPPLY_VOLTS: f64 = 0.5;
/// Threshold voltage of the low-V_t input transistors, volts.
pub const INPUT_VT_VOLTS: f64 = 0.13;
/// Nominal threshold voltage of the 45 nm transistors, volts.
pub const NOMINAL_VT_VOLTS: f64 = 0.35;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceModel {
    pub name: String,
    /// Conductance per unit weight, siemens.
    pub g_unit: f64,
    /// Conductance of an element in its OFF state, siemens.
    pub g_off: f64,
    /// Number of programmable conductance levels, OFF included.
    pub levels: u32,
}

impl DeviceModel {
    pub fn new(name: impl Into<String>, g_unit: f64, g_off: f64, levels: u32) -> Result<Self, TlgError> {
        let name = name.into();
        if !(g_unit.is_finite() && g_off.is_finite() && g_unit > g_off && g_off >= 0.0) {
            return Err(TlgError::Device(format!(
                "{name}: need g_unit > g_off >= 0 (got {g_unit} S, {g_off} S)"
            )));
        }
        if levels < 2 {
            return Err(TlgError::Device(format!("{name}: need at least 2 levels")));
        }
        Ok(DeviceModel {
            name,
            g_unit,
            g_off,
            levels,
        })
    }

    pub fn with_ratio(name: impl Into<String>, g_unit: f64, on_off_ratio: f64, levels: u32) -> Result<Self, TlgError> {
        if on_off_ratio.is_nan() || on_off_ratio <= 1.0 {
            return Err(TlgError::Device(format!(
                "on/off ratio must exceed 1, got {on_off_ratio}"
            )));
        }
        let g_off = if on_off_ratio.is_infinite() {
            0.0
        } else {
            g_unit / on_off_ratio
        };
        DeviceModel::new(name, g_unit, g_off, levels)
    }

    pub fn on_off_ratio(&self) -> f64 {
        if self.g_off > 0.0 {
            self.g_unit / self.g_off
        } else {
            f64::INFINITY
        }
    }

    /// Largest weight magnitude an input branch can hold.
    pub fn max_weight(&self) -> u32 {
        self.levels - 1
    }

    /// Largest bias magnitude, doubled. The bias branch adds one half-unit
    /// step on top of the weight ladder.
    pub fn max_bias_doubled(&self) -> u32 {
        2 * self.max_weight() + 1
    }

    /// Infinite on/off ratio, 10 µS per unit weight.
    pub fn ideal() -> Self {
        DeviceModel::new("ideal", 10e-6, 0.0, 16).unwrap()
    }

    /// Binary spin-torque MTJ with the given resistance ratio (3 to 4 in practice).
    pub fn mtj(ratio: f64) -> Self {
        DeviceModel::with_ratio(format!("mtj{ratio}"), 10e-6, ratio, 2).unwrap()
    }

    /// Three-terminal 4-level domain-wall cell.
    pub fn domain_wall_4level() -> Self {
        DeviceModel::with_ratio("dw4", 10e-6, 4.0, 4).unwrap()
    }

    /// Ag-Si filament memristor switched between 200 Ω and 10 MΩ.
    pub fn ag_si() -> Self {
        DeviceModel::new("agsi", 1.0 / 200.0, 1.0 / 10e6, 2).unwrap()
    }

    pub fn presets() -> Vec<DeviceModel> {
        vec![
            DeviceModel::ideal(),
            DeviceModel::mtj(3.0),
            DeviceModel::mtj(4.0),
            DeviceModel::domain_wall_4level(),
            DeviceModel::ag_si(),
        ]
    }

    pub fn preset(name: &str) -> Option<DeviceModel> {
        DeviceModel::presets().into_iter().find(|d| d.name == name)
    }

    /// Reads device definitions from a TOML file; see [`DeviceModel::parse_config`].
    pub fn load_config(path: impl AsRef<Path>) -> Result<Vec<DeviceModel>, TlgError> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| TlgError::Device(format!("{}: {e}", path.as_ref().display())))?;
        DeviceModel::parse_config(&text)
    }

    /// Parses `[[device]]` tables with keys `name`, `levels`, one of
    /// `g_unit`/`r_on`, and one of `g_off`/`r_off`/`on_off_ratio`. Values may
    /// be bare numbers in SI base units or strings with a unit suffix
    /// (`"10 µS"`, `"5mS"`, `"200 Ω"`, `"10 MOhm"`).
    pub fn parse_config(text: &str) -> Result<Vec<DeviceModel>, TlgError> {
        #[derive(Deserialize)]
        struct File {
            #[serde(default)]
            device: Vec<BTreeMap<String, toml::Value>>,
        }
        let file: File = toml::from_str(text).map_err(|e| TlgError::Device(e.to_string()))?;
        file.device.iter().map(device_from_table).collect()
    }

    /// Differential-pair realization of `gate` on this device.
    pub fn realize(&self, gate: &ThresholdGate) -> Result<ConductanceRealization, TlgError> {
        let inputs = gate
            .weights()
            .iter()
            .map(|&w| {
                if w.unsigned_abs() > self.max_weight() {
                    return Err(self.range_error(f64::from(w.unsigned_abs()), f64::from(self.max_weight())));
                }
                Ok(self.branch(2 * i64::from(w)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let b = gate.bias();
        if b.magnitude_doubled() > self.max_bias_doubled() {
            return Err(self.range_error(b.value().abs(), f64::from(self.max_bias_doubled()) / 2.0));
        }
        Ok(ConductanceRealization {
            inputs,
            bias: self.branch(i64::from(b.doubled())),
        })
    }

    fn range_error(&self, magnitude: f64, max: f64) -> TlgError {
        TlgError::LevelRange {
            magnitude,
            device: self.name.clone(),
            max,
        }
    }

    fn branch(&self, doubled: i64) -> BranchPair {
        let strong = self.g_off + (doubled.unsigned_abs() as f64 / 2.0) * (self.g_unit - self.g_off);
        if doubled >= 0 {
            BranchPair {
                g_plus: strong,
                g_minus: self.g_off,
            }
        } else {
            BranchPair {
                g_plus: self.g_off,
                g_minus: strong,
            }
        }
    }
}

fn device_from_table(t: &BTreeMap<String, toml::Value>) -> Result<DeviceModel, TlgError> {
    let err = |m: String| TlgError::Device(m);
    let name = t
        .get("name")
        .and_then(|v| v.as_str())
        .ok_or_else(|| err("device entry without `name`".into()))?
        .to_string();
    let quantity = |key: &str, parse: fn(&str) -> Result<f64, TlgError>| -> Result<Option<f64>, TlgError> {
        match t.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(*f)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(toml::Value::String(s)) => parse(s).map(Some),
            Some(other) => Err(err(format!("{name}: bad value for `{key}`: {other}"))),
        }
    };
    let levels = match t.get("levels") {
        Some(toml::Value::Integer(l)) if *l >= 2 && *l <= i64::from(u32::MAX) => *l as u32,
        None => 2,
        Some(other) => return Err(err(format!("{name}: bad `levels`: {other}"))),
    };
    let g_unit = match (
        quantity("g_unit", parse_conductance)?,
        quantity("r_on", parse_resistance)?,
    ) {
        (Some(g), None) => g,
        (None, Some(r)) => 1.0 / r,
        _ => return Err(err(format!("{name}: give exactly one of `g_unit`, `r_on`"))),
    };
    let g_off = match (
        quantity("g_off", parse_conductance)?,
        quantity("r_off", parse_resistance)?,
        quantity("on_off_ratio", |s| {
            s.trim().parse::<f64>().map_err(|e| TlgError::Device(e.to_string()))
        })?,
    ) {
        (Some(g), None, None) => g,
        (None, Some(r), None) => 1.0 / r,
        (None, None, Some(ratio)) => return DeviceModel::with_ratio(name, g_unit, ratio, levels),
        _ => {
            return Err(err(format!(
                "{name}: give exactly one of `g_off`, `r_off`, `on_off_ratio`"
            )))
        }
    };
    DeviceModel::new(name, g_unit, g_off, levels)
}

fn split_quantity(s: &str) -> (f64, &str) {
    let t = s.trim();
    let end = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && t[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    (t[..end].parse().unwrap_or(f64::NAN), t[end..].trim())
}

/// Parses a conductance such as `10 µS`, `10uS`, `5 mS`, `1e-5` or `1e-5 S`.
pub fn parse_conductance(s: &str) -> Result<f64, TlgError> {
    let (v, unit) = split_quantity(s);
    let scale = match unit {
        "" | "S" => 1.0,
        "mS" => 1e-3,
        "µS" | "μS" | "uS" => 1e-6,
        "nS" => 1e-9,
        _ => return Err(TlgError::Device(format!("unknown conductance unit in `{s}`"))),
    };
    finite(v * scale, s)
}

/// Parses a resistance such as `200 Ω`, `10MΩ`, `100 kOhm` or `200`.
pub fn parse_resistance(s: &str) -> Result<f64, TlgError> {
    let (v, unit) = split_quantity(s);
    let scale = match unit {
        "" | "Ω" | "Ohm" | "ohm" => 1.0,
        "kΩ" | "kOhm" | "kohm" => 1e3,
        "MΩ" | "MOhm" | "Mohm" => 1e6,
        "GΩ" | "GOhm" => 1e9,
        _ => return Err(TlgError::Device(format!("unknown resistance unit in `{s}`"))),
    };
    finite(v * scale, s)
}

fn finite(v: f64, s: &str) -> Result<f64, TlgError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(TlgError::Device(format!("`{s}` is not a positive quantity")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPair {
    pub g_plus: f64,
    pub g_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConductanceRealization {
    pub inputs: Vec<BranchPair>,
    pub bias: BranchPair,
}

impl ConductanceRealization {
    /// Total conductance of the positive and negative pull-down paths.
    pub fn path_conductances(&self, inputs: &[bool]) -> (f64, f64) {
        let mut p = self.bias.g_plus;
        let mut m = self.bias.g_minus;
        for (b, _) in self.inputs.iter().zip(inputs).filter(|(_, &x)| x) {
            p += b.g_plus;
            m += b.g_minus;
        }
        (p, m)
    }

    /// Latch decision: 1 iff the positive path conducts more.
    pub fn latch_evaluate(&self, inputs: &[bool]) -> Result<bool, TlgError> {
        if inputs.len() != self.inputs.len() {
            return Err(TlgError::Arity {
                expected: self.inputs.len(),
                got: inputs.len(),
            });
        }
        let (p, m) = self.path_conductances(inputs);
        if p == m {
            Err(TlgError::Tie(p))
        } else {
            Ok(p > m)
        }
    }

    /// Largest uniform relative deviation of every branch conductance that
    /// cannot flip any decision: `min_x |P - M| / (P + M)`.
    pub fn max_safe_relative_deviation(&self) -> f64 {
        input_vectors(self.inputs.len())
            .map(|x| {
                let (p, m) = self.path_conductances(&x);
                (p - m).abs() / (p + m)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

impl ThresholdGate {
    pub fn to_conductances(&self, device: &DeviceModel) -> Result<ConductanceRealization, TlgError> {
        device.realize(self)
    }

    pub fn max_safe_relative_deviation(&self, device: &DeviceModel) -> Result<f64, TlgError> {
        Ok(self.to_conductances(device)?.max_safe_relative_deviation())
    }
}

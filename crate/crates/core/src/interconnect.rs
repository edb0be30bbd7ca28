//! Crossbar interconnect between pipeline stages.
//!
//! Each boundary between gate stage `s` and `s + 1` is one crossbar: rows
//! are the nets produced by stage `s`, columns are the input pins of stage
//! `s + 1`, and an ON cell connects a row to a column. Cells are kept packed
//! exactly as they are exported: row-major, MSB-first within each byte,
//! each row zero-padded to a whole byte.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::pipeline::PipelinedNetwork;

/// ON resistance of a crossbar switch, ohms.
pub const R_ON_OHM: f64 = 200.0;
/// OFF resistance of a crossbar switch, ohms.
pub const R_OFF_OHM: f64 = 10e6;
/// Low-swing interconnect signaling level, volts.
pub const SWING_V: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterconnectError {
    #[error("boundary {boundary} out of range: network has {boundaries} stage boundaries")]
    Boundary { boundary: usize, boundaries: usize },
    #[error("pin {pin} reads `{net}`, which is not an output of stage {stage}")]
    ForeignSource { pin: String, net: String, stage: usize },
    #[error("invalid electrical parameters: {0}")]
    Params(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElectricalParams {
    pub r_on_ohm: f64,
    pub r_off_ohm: f64,
    pub swing_v: f64,
}

impl Default for ElectricalParams {
    fn default() -> Self {
        ElectricalParams {
            r_on_ohm: R_ON_OHM,
            r_off_ohm: R_OFF_OHM,
            swing_v: SWING_V,
        }
    }
}

impl ElectricalParams {
    pub fn validate(&self) -> Result<(), InterconnectError> {
        if self.r_on_ohm > 0.0 && self.r_on_ohm < self.r_off_ohm && self.swing_v > 0.0 {
            Ok(())
        } else {
            Err(InterconnectError::Params(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarConfig {
    /// Index of the driving gate stage (0-based).
    pub boundary: usize,
    /// Nets driven by stage `boundary`.
    pub rows: Vec<String>,
    /// Receiver pins `<node>:<pin>` of stage `boundary + 1`.
    pub cols: Vec<String>,
    pub params: ElectricalParams,
    bits: Vec<u8>,
}

impl CrossbarConfig {
    pub fn bytes_per_row(&self) -> usize {
        self.cols.len().div_ceil(8)
    }

    pub fn cell(&self, row: usize, col: usize) -> bool {
        let byte = self.bits[row * self.bytes_per_row() + col / 8];
        byte & (0x80 >> (col % 8)) != 0
    }

    fn set(&mut self, row: usize, col: usize) {
        let bpr = self.bytes_per_row();
        self.bits[row * bpr + col / 8] |= 0x80 >> (col % 8);
    }

    pub fn on_cells(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn off_cells(&self) -> usize {
        self.rows.len() * self.cols.len() - self.on_cells()
    }

    /// Number of ON cells in each column.
    pub fn column_sums(&self) -> Vec<usize> {
        (0..self.cols.len())
            .map(|c| (0..self.rows.len()).filter(|&r| self.cell(r, c)).count())
            .collect()
    }

    /// Number of ON cells in each row, i.e. the crossbar fan-out of each net.
    pub fn row_sums(&self) -> Vec<usize> {
        (0..self.rows.len())
            .map(|r| {
                let bpr = self.bytes_per_row();
                self.bits[r * bpr..(r + 1) * bpr]
                    .iter()
                    .map(|b| b.count_ones() as usize)
                    .sum()
            })
            .collect()
    }

    /// Ohmic leakage through every OFF cell at full swing:
    /// `off_cells * swing^2 / r_off`. A coarse upper bound, in watts.
    pub fn leakage_watts(&self) -> f64 {
        self.off_cells() as f64 * self.params.swing_v * self.params.swing_v / self.params.r_off_ohm
    }

    pub fn bitstream(&self) -> &[u8] {
        &self.bits
    }

    pub fn header(&self) -> CrossbarHeader {
        CrossbarHeader {
            boundary: self.boundary,
            n_rows: self.rows.len(),
            n_cols: self.cols.len(),
            bytes_per_row: self.bytes_per_row(),
            bit_order: "row-major, MSB-first, rows zero-padded to whole bytes",
            r_on_ohm: self.params.r_on_ohm,
            r_off_ohm: self.params.r_off_ohm,
            swing_v: self.params.swing_v,
            rows: self.rows.clone(),
            cols: self.cols.clone(),
        }
    }

    /// Rebuilds a configuration from an exported header and bitstream.
    pub fn from_parts(header: &CrossbarHeader, bits: Vec<u8>) -> Result<Self, InterconnectError> {
        let cfg = CrossbarConfig {
            boundary: header.boundary,
            rows: header.rows.clone(),
            cols: header.cols.clone(),
            params: ElectricalParams {
                r_on_ohm: header.r_on_ohm,
                r_off_ohm: header.r_off_ohm,
                swing_v: header.swing_v,
            },
            bits,
        };
        cfg.params.validate()?;
        if cfg.bits.len() != cfg.rows.len() * cfg.bytes_per_row() {
            return Err(InterconnectError::Params(format!(
                "bitstream has {} bytes, header implies {}",
                cfg.bits.len(),
                cfg.rows.len() * cfg.bytes_per_row()
            )));
        }
        Ok(cfg)
    }
}

/// JSON header accompanying each exported bitstream.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CrossbarHeader {
    pub boundary: usize,
    pub n_rows: usize,
    pub n_cols: usize,
    pub bytes_per_row: usize,
    #[serde(skip_deserializing, default)]
    pub bit_order: &'static str,
    pub r_on_ohm: f64,
    pub r_off_ohm: f64,
    pub swing_v: f64,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
}

/// Number of crossbars in a pipeline: one per pair of adjacent gate stages.
pub fn boundary_count(p: &PipelinedNetwork) -> usize {
    p.depth().saturating_sub(1)
}

pub fn map_boundary(
    p: &PipelinedNetwork,
    boundary: usize,
    params: ElectricalParams,
) -> Result<CrossbarConfig, InterconnectError> {
    params.validate()?;
    let boundaries = boundary_count(p);
    if boundary >= boundaries {
        return Err(InterconnectError::Boundary { boundary, boundaries });
    }
    let drivers = &p.stages()[boundary];
    let receivers = &p.stages()[boundary + 1];
    let rows: Vec<String> = drivers.iter().map(|n| n.output.clone()).collect();
    let row_of: HashMap<&str, usize> = rows.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut cols = Vec::new();
    let mut wiring = Vec::new();
    for node in receivers {
        for (pin, src) in node.inputs.iter().enumerate() {
            let label = format!("{}:{pin}", node.output);
            let row = *row_of
                .get(src.as_str())
                .ok_or_else(|| InterconnectError::ForeignSource {
                    pin: label.clone(),
                    net: src.clone(),
                    stage: boundary + 1,
                })?;
            wiring.push(row);
            cols.push(label);
        }
    }
    let mut cfg = CrossbarConfig {
        boundary,
        bits: vec![0; rows.len() * cols.len().div_ceil(8)],
        rows,
        cols,
        params,
    };
    for (col, row) in wiring.into_iter().enumerate() {
        cfg.set(row, col);
    }
    Ok(cfg)
}

pub fn map_all(p: &PipelinedNetwork, params: ElectricalParams) -> Result<Vec<CrossbarConfig>, InterconnectError> {
    (0..boundary_count(p)).map(|s| map_boundary(p, s, params)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetFanout {
    pub net: String,
    pub stage: usize,
    pub fanout: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FanoutProfile {
    /// Every gate output, in stage order; `stage` is 1-based.
    pub nets: Vec<NetFanout>,
    pub total: usize,
    pub max: usize,
}

/// Crossbar fan-out of every gate output: the number of next-stage pins it
/// drives. Final-stage nets drive the outputs directly and count zero.
pub fn fanout_profile(p: &PipelinedNetwork) -> FanoutProfile {
    let mut nets = Vec::with_capacity(p.gate_count());
    for (s, stage) in p.stages().iter().enumerate() {
        let mut readers: HashMap<&str, usize> = HashMap::new();
        if let Some(next) = p.stages().get(s + 1) {
            for node in next {
                for i in &node.inputs {
                    *readers.entry(i.as_str()).or_insert(0) += 1;
                }
            }
        }
        nets.extend(stage.iter().map(|n| NetFanout {
            net: n.output.clone(),
            stage: s + 1,
            fanout: readers.get(n.output.as_str()).copied().unwrap_or(0),
        }));
    }
    let total = nets.iter().map(|n| n.fanout).sum();
    let max = nets.iter().map(|n| n.fanout).max().unwrap_or(0);
    FanoutProfile { nets, total, max }
}

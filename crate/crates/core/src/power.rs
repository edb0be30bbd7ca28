//! Dynamic energy, delay and energy-delay product of pipelined networks,
//! and the comparison arithmetic against published CMOS LUT baselines.
//!
//! Energy per cycle is `gates * e_gate + fanouts * e_fanout`. Model
//! parameters are held as exact decimals (nine fractional digits) so the
//! energy and EDP identities hold exactly; floating-point values in reports
//! are rounded once from the exact results.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::interconnect::fanout_profile;
use crate::pipeline::PipelinedNetwork;

/// Table of published LUT-FPGA and DRTL results for five ISCAS-85 circuits.
pub const BUNDLED_BASELINE: &str = include_str!("../data/lut_baseline.csv");

pub const MISMATCH_FLAG: &str = "BASELINE_MISMATCH";

/// Average energy per gate the substrate is expected to stay under, fJ.
pub const FJ_PER_GATE_CEILING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("network has no gates")]
    Empty,
    #[error("`{0}` is not a positive decimal with at most 9 fractional digits")]
    Decimal(String),
    #[error("baseline row `{name}`: {message}")]
    Row { name: String, message: String },
    #[error("baseline line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate baseline row `{0}`")]
    Duplicate(String),
    #[error("{0}")]
    Io(String),
}

/// Non-negative decimal with nine fractional digits, stored exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Decimal(i128);

impl Decimal {
    pub const SCALE: i128 = 1_000_000_000;

    pub fn from_units(units: i128) -> Self {
        Decimal(units)
    }

    pub fn units(self) -> i128 {
        self.0
    }

    /// Nearest decimal to `v`.
    pub fn from_f64(v: f64) -> Result<Self, PowerError> {
        let scaled = (v * Self::SCALE as f64).round();
        if v.is_finite() && v >= 0.0 && scaled < 1e30 {
            Ok(Decimal(scaled as i128))
        } else {
            Err(PowerError::Decimal(v.to_string()))
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }

    pub fn ratio(self) -> Ratio<i128> {
        Ratio::new(self.0, Self::SCALE)
    }
}

impl FromStr for Decimal {
    type Err = PowerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PowerError::Decimal(s.to_string());
        let t = s.trim();
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        if int.is_empty() && frac.is_empty()
            || frac.len() > 9
            || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        {
            return Err(err());
        }
        let int: i128 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| err())?
        };
        let frac_units: i128 = format!("{frac:0<9}").parse().map_err(|_| err())?;
        Ok(Decimal(int * Self::SCALE + frac_units))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let int = self.0 / Self::SCALE;
        let frac = self.0 % Self::SCALE;
        if frac == 0 {
            write!(f, "{int}")
        } else {
            let digits = format!("{frac:09}");
            write!(f, "{int}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnergyModel {
    /// Evaluation energy per gate, fJ.
    pub e_gate_fj: Decimal,
    /// Interconnect energy per crossbar fan-out, fJ.
    pub e_fanout_fj: Decimal,
    pub clock_period_ns: Decimal,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            e_gate_fj: Decimal(300_000_000),
            e_fanout_fj: Decimal(200_000_000),
            clock_period_ns: Decimal(500_000_000),
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<(), PowerError> {
        for (v, what) in [
            (self.e_gate_fj, "e_gate"),
            (self.e_fanout_fj, "e_fanout"),
            (self.clock_period_ns, "clock period"),
        ] {
            if v.0 <= 0 {
                return Err(PowerError::Decimal(format!("{what} = {v}")));
            }
        }
        Ok(())
    }

    /// Exact energy per cycle for the given counts, fJ.
    pub fn energy_per_cycle(&self, gates: u64, fanouts: u64) -> Decimal {
        Decimal(i128::from(gates) * self.e_gate_fj.0 + i128::from(fanouts) * self.e_fanout_fj.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub gate_count: u64,
    pub total_fanout: u64,
    pub depth: usize,
    pub energy_per_cycle_fj: f64,
    pub throughput_period_ns: f64,
    pub latency_ns: f64,
    pub edp_fj_ns: f64,
    pub avg_energy_per_gate_fj: f64,
    pub avg_fanout: f64,
    /// Whether the average energy per gate is at most 1 fJ.
    pub within_fj_per_gate_ceiling: bool,
    #[serde(skip)]
    pub model: EnergyModel,
}

impl EnergyReport {
    pub fn from_counts(
        gate_count: u64,
        total_fanout: u64,
        depth: usize,
        model: EnergyModel,
    ) -> Result<Self, PowerError> {
        model.validate()?;
        if gate_count == 0 {
            return Err(PowerError::Empty);
        }
        let energy = model.energy_per_cycle(gate_count, total_fanout);
        let period = model.clock_period_ns;
        let avg = Ratio::new(energy.0, Decimal::SCALE * i128::from(gate_count));
        let edp = energy.ratio() * period.ratio();
        Ok(EnergyReport {
            gate_count,
            total_fanout,
            depth,
            energy_per_cycle_fj: energy.to_f64(),
            throughput_period_ns: period.to_f64(),
            latency_ns: (period.ratio() * Ratio::from_integer(depth as i128)).to_f64(),
            edp_fj_ns: edp.to_f64(),
            avg_energy_per_gate_fj: avg.to_f64(),
            avg_fanout: total_fanout as f64 / gate_count as f64,
            within_fj_per_gate_ceiling: avg <= Ratio::from_integer(1),
            model,
        })
    }

    /// Exact energy per cycle, fJ.
    pub fn energy_exact(&self) -> Ratio<i128> {
        self.model.energy_per_cycle(self.gate_count, self.total_fanout).ratio()
    }

    /// Exact average energy per gate, fJ.
    pub fn avg_energy_per_gate_exact(&self) -> Ratio<i128> {
        self.energy_exact() / Ratio::from_integer(i128::from(self.gate_count))
    }

    /// Exact energy-delay product, fJ·ns.
    pub fn edp_exact(&self) -> Ratio<i128> {
        self.energy_exact() * self.model.clock_period_ns.ratio()
    }
}

trait RatioF64 {
    fn to_f64(&self) -> f64;
}

impl RatioF64 for Ratio<i128> {
    fn to_f64(&self) -> f64 {
        // integer part plus remainder keeps full f64 precision for our ranges
        let whole = self.numer() / self.denom();
        let rem = self.numer() % self.denom();
        whole as f64 + rem as f64 / *self.denom() as f64
    }
}

/// Energy and timing of a pipelined network: every gate (buffers included)
/// fires once per cycle and every crossbar fan-out is driven once.
pub fn estimate(p: &PipelinedNetwork, model: &EnergyModel) -> Result<EnergyReport, PowerError> {
    let fanout = fanout_profile(p);
    EnergyReport::from_counts(p.gate_count() as u64, fanout.total as u64, p.depth(), *model)
}

/// A percentage as printed, with its number of decimal places.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatedPct {
    pub value: f64,
    pub decimals: u32,
}

impl StatedPct {
    fn parse(s: &str) -> Option<StatedPct> {
        let t = s.trim();
        let decimals = t.split_once('.').map(|(_, f)| f.len() as u32).unwrap_or(0);
        let value: f64 = t.parse().ok()?;
        Some(StatedPct { value, decimals })
    }

    /// Whether `computed`, rounded half away from zero to the printed
    /// precision, equals the printed value.
    pub fn agrees_with(&self, computed: f64) -> bool {
        let scale = 10f64.powi(self.decimals as i32);
        (computed * scale).round() == (self.value * scale).round()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRow {
    pub name: String,
    pub n_inputs: u32,
    pub n_outputs: u32,
    pub lut_delay_ns: f64,
    pub rtl_delay_ns: f64,
    pub lut_energy_fj: f64,
    pub rtl_energy_fj: f64,
    pub stated_energy_red_pct: StatedPct,
    pub stated_edp_red_pct: StatedPct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonSource {
    /// Both sides taken from the published table.
    Published,
    /// Our model's energy and period against the published LUT columns.
    ModelVsPublished,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub source: ComparisonSource,
    pub rtl_energy_fj: f64,
    pub rtl_delay_ns: f64,
    pub energy_reduction_pct: f64,
    pub edp_reduction_pct: f64,
    pub stated_energy_reduction_pct: f64,
    pub stated_edp_reduction_pct: f64,
    /// `BASELINE_MISMATCH` when a recomputed published percentage disagrees
    /// with the printed one.
    pub energy_flag: Option<&'static str>,
    pub edp_flag: Option<&'static str>,
}

fn reductions(rtl_energy: f64, rtl_delay: f64, row: &BaselineRow) -> Result<(f64, f64), PowerError> {
    if !(row.lut_energy_fj > 0.0 && row.lut_delay_ns > 0.0) {
        return Err(PowerError::Row {
            name: row.name.clone(),
            message: "baseline energy and delay must be positive".into(),
        });
    }
    let energy = 100.0 * (1.0 - rtl_energy / row.lut_energy_fj);
    let edp = 100.0 * (1.0 - (rtl_energy * rtl_delay) / (row.lut_energy_fj * row.lut_delay_ns));
    Ok((energy, edp))
}

/// Recomputes a published row's reduction columns from its raw columns and
/// flags any disagreement with the printed values.
pub fn compare_published(row: &BaselineRow) -> Result<Comparison, PowerError> {
    let (energy, edp) = reductions(row.rtl_energy_fj, row.rtl_delay_ns, row)?;
    let flag = |ok: bool| (!ok).then_some(MISMATCH_FLAG);
    Ok(Comparison {
        name: row.name.clone(),
        source: ComparisonSource::Published,
        rtl_energy_fj: row.rtl_energy_fj,
        rtl_delay_ns: row.rtl_delay_ns,
        energy_reduction_pct: energy,
        edp_reduction_pct: edp,
        stated_energy_reduction_pct: row.stated_energy_red_pct.value,
        stated_edp_reduction_pct: row.stated_edp_red_pct.value,
        energy_flag: flag(row.stated_energy_red_pct.agrees_with(energy)),
        edp_flag: flag(row.stated_edp_red_pct.agrees_with(edp)),
    })
}

/// Substitutes a computed report for the row's RTL columns.
pub fn compare_report(report: &EnergyReport, row: &BaselineRow) -> Result<Comparison, PowerError> {
    let (energy, edp) = reductions(report.energy_per_cycle_fj, report.throughput_period_ns, row)?;
    Ok(Comparison {
        name: row.name.clone(),
        source: ComparisonSource::ModelVsPublished,
        rtl_energy_fj: report.energy_per_cycle_fj,
        rtl_delay_ns: report.throughput_period_ns,
        energy_reduction_pct: energy,
        edp_reduction_pct: edp,
        stated_energy_reduction_pct: row.stated_energy_red_pct.value,
        stated_edp_reduction_pct: row.stated_edp_red_pct.value,
        energy_flag: None,
        edp_flag: None,
    })
}

const COLUMNS: [&str; 9] = [
    "name",
    "n_inputs",
    "n_outputs",
    "lut_delay_ns",
    "rtl_delay_ns",
    "lut_energy_fj",
    "rtl_energy_fj",
    "stated_energy_red_pct",
    "stated_edp_red_pct",
];

/// Parses baseline CSV text with the header
/// `name,n_inputs,n_outputs,lut_delay_ns,rtl_delay_ns,lut_energy_fj,rtl_energy_fj,stated_energy_red_pct,stated_edp_red_pct`.
pub fn parse_baseline(text: &str) -> Result<Vec<BaselineRow>, PowerError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| PowerError::Malformed {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.iter().collect::<Vec<_>>() != COLUMNS {
        return Err(PowerError::Malformed {
            line: 1,
            message: format!("expected header `{}`", COLUMNS.join(",")),
        });
    }
    let mut rows = Vec::new();
    let mut names = HashSet::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| PowerError::Malformed {
            line,
            message: e.to_string(),
        })?;
        let malformed = |message: String| PowerError::Malformed { line, message };
        let name = rec[0].to_string();
        let int = |k: usize| {
            rec[k]
                .parse::<u32>()
                .map_err(|_| malformed(format!("bad {} `{}`", COLUMNS[k], &rec[k])))
        };
        let num = |k: usize| {
            rec[k]
                .parse::<f64>()
                .map_err(|_| malformed(format!("bad {} `{}`", COLUMNS[k], &rec[k])))
        };
        let pct =
            |k: usize| StatedPct::parse(&rec[k]).ok_or_else(|| malformed(format!("bad {} `{}`", COLUMNS[k], &rec[k])));
        let row = BaselineRow {
            name: name.clone(),
            n_inputs: int(1)?,
            n_outputs: int(2)?,
            lut_delay_ns: num(3)?,
            rtl_delay_ns: num(4)?,
            lut_energy_fj: num(5)?,
            rtl_energy_fj: num(6)?,
            stated_energy_red_pct: pct(7)?,
            stated_edp_red_pct: pct(8)?,
        };
        let positive = [
            row.n_inputs as f64,
            row.n_outputs as f64,
            row.lut_delay_ns,
            row.rtl_delay_ns,
            row.lut_energy_fj,
            row.rtl_energy_fj,
            row.stated_energy_red_pct.value,
            row.stated_edp_red_pct.value,
        ];
        if name.is_empty() || positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(PowerError::Row {
                name,
                message: "every field must be present and positive".into(),
            });
        }
        if !names.insert(name.clone()) {
            return Err(PowerError::Duplicate(name));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn load_baseline(path: impl AsRef<Path>) -> Result<Vec<BaselineRow>, PowerError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| PowerError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_baseline(&text)
}

pub fn bundled_baseline() -> Vec<BaselineRow> {
    parse_baseline(BUNDLED_BASELINE).expect("bundled table is well formed")
}

pub fn comparisons_markdown(rows: &[Comparison]) -> String {
    let mut s = String::from(
        "| benchmark | source | RTL energy (fJ) | RTL delay (ns) | energy red. (%) | stated | EDP red. (%) | stated | flags |\n\
         |---|---|---:|---:|---:|---:|---:|---:|---|\n",
    );
    for c in rows {
        let flags: Vec<&str> = [c.energy_flag.map(|_| "energy"), c.edp_flag.map(|_| "edp")]
            .into_iter()
            .flatten()
            .collect();
        let flags = if flags.is_empty() {
            String::new()
        } else {
            format!("{MISMATCH_FLAG} ({})", flags.join(", "))
        };
        s += &format!(
            "| {} | {} | {} | {} | {:.3} | {} | {:.4} | {} | {} |\n",
            c.name,
            source_label(c.source),
            c.rtl_energy_fj,
            c.rtl_delay_ns,
            c.energy_reduction_pct,
            c.stated_energy_reduction_pct,
            c.edp_reduction_pct,
            c.stated_edp_reduction_pct,
            flags
        );
    }
    s
}

pub fn comparisons_csv(rows: &[Comparison]) -> String {
    let mut s = String::from(
        "name,source,rtl_energy_fj,rtl_delay_ns,energy_red_pct,stated_energy_red_pct,edp_red_pct,stated_edp_red_pct,energy_flag,edp_flag\n",
    );
    for c in rows {
        s += &format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            c.name,
            source_label(c.source),
            c.rtl_energy_fj,
            c.rtl_delay_ns,
            c.energy_reduction_pct,
            c.stated_energy_reduction_pct,
            c.edp_reduction_pct,
            c.stated_edp_reduction_pct,
            c.energy_flag.unwrap_or(""),
            c.edp_flag.unwrap_or("")
        );
    }
    s
}

fn source_label(s: ComparisonSource) -> &'static str {
    match s {
        ComparisonSource::Published => "published",
        ComparisonSource::ModelVsPublished => "model-vs-published",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_examples() {
        let m = EnergyModel::default();
        let r = EnergyReport::from_counts(100, 150, 10, m).unwrap();
        assert_eq!(r.energy_per_cycle_fj, 60.0);
        assert_eq!(r.edp_fj_ns, 30.0);
        assert_eq!(r.latency_ns, 5.0);
        let r = EnergyReport::from_counts(1, 1, 1, m).unwrap();
        assert_eq!(r.energy_per_cycle_fj, 0.5);
        assert_eq!(r.avg_energy_per_gate_fj, 0.5);
        assert_eq!(EnergyReport::from_counts(0, 0, 0, m).unwrap_err(), PowerError::Empty);
    }

    #[test]
    fn average_fanout_ceiling() {
        let m = EnergyModel::default();
        // 0.3 + 3.5 * 0.2 = 1.0 exactly
        let r = EnergyReport::from_counts(2, 7, 1, m).unwrap();
        assert_eq!(r.avg_energy_per_gate_exact(), Ratio::from_integer(1));
        assert!(r.within_fj_per_gate_ceiling);
        let r = EnergyReport::from_counts(2, 8, 1, m).unwrap();
        assert!(!r.within_fj_per_gate_ceiling);
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!("0.3".parse::<Decimal>().unwrap(), Decimal(300_000_000));
        assert_eq!(".5".parse::<Decimal>().unwrap(), Decimal(500_000_000));
        assert_eq!("17362.56".parse::<Decimal>().unwrap().to_string(), "17362.56");
        assert!("1.0000000001".parse::<Decimal>().is_err());
        assert!("-1".parse::<Decimal>().is_err());
        assert!("".parse::<Decimal>().is_err());
        assert_eq!(Decimal::from_f64(0.3).unwrap(), Decimal(300_000_000));
    }

    #[test]
    fn c432_row_recomputed() {
        let rows = bundled_baseline();
        let c = compare_published(&rows[0]).unwrap();
        assert_eq!(c.name, "c432");
        assert!((c.energy_reduction_pct - 97.2354).abs() < 1e-4);
        assert!((c.edp_reduction_pct - 99.8631).abs() < 1e-4);
        assert_eq!(c.energy_flag, None);
        assert_eq!(c.edp_flag, None);
    }

    #[test]
    fn c499_flagged() {
        let rows = bundled_baseline();
        let c = compare_published(&rows[1]).unwrap();
        assert_eq!(c.name, "c499");
        assert!((c.energy_reduction_pct - 97.2186).abs() < 1e-3);
        assert_eq!(c.energy_flag, Some(MISMATCH_FLAG));
        assert_eq!(c.edp_flag, None);
        assert!(comparisons_markdown(std::slice::from_ref(&c)).contains(MISMATCH_FLAG));
        assert!(comparisons_csv(&[c]).contains("BASELINE_MISMATCH,\n"));
    }

    #[test]
    fn report_substitutes_rtl_columns() {
        let rows = bundled_baseline();
        let report = EnergyReport::from_counts(1600, 0, 1, EnergyModel::default()).unwrap();
        let c = compare_report(&report, &rows[0]).unwrap();
        assert_eq!(c.source, ComparisonSource::ModelVsPublished);
        assert_eq!(c.rtl_energy_fj, 480.0);
        assert!((c.energy_reduction_pct - compare_published(&rows[0]).unwrap().energy_reduction_pct).abs() < 1e-12);
    }

    #[test]
    fn baseline_validation() {
        assert_eq!(bundled_baseline().len(), 5);
        assert!(parse_baseline("").unwrap().is_empty());
        let head = COLUMNS.join(",");
        let neg = format!("{head}\nx,1,1,1,0.5,-3,1,1,1\n");
        assert!(matches!(parse_baseline(&neg), Err(PowerError::Row { .. })));
        let zero = format!("{head}\nx,1,1,1,0.5,0,1,1,1\n");
        assert!(matches!(parse_baseline(&zero), Err(PowerError::Row { .. })));
        let dup = format!("{head}\nx,1,1,1,0.5,3,1,1,1\nx,1,1,1,0.5,3,1,1,1\n");
        assert_eq!(parse_baseline(&dup).unwrap_err(), PowerError::Duplicate("x".into()));
        let bad = format!("{head}\nx,1,1,abc,0.5,3,1,1,1\n");
        assert!(matches!(
            parse_baseline(&bad),
            Err(PowerError::Malformed { line: 2, .. })
        ));
        let short = format!("{head}\nx,1,1\n");
        assert!(matches!(parse_baseline(&short), Err(PowerError::Malformed { .. })));
        assert!(matches!(
            parse_baseline("a,b\n1,2\n"),
            Err(PowerError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn stated_rounding_rule() {
        let p = StatedPct {
            value: 97.2,
            decimals: 1,
        };
        assert!(p.agrees_with(97.2354));
        assert!(p.agrees_with(97.15));
        assert!(!p.agrees_with(97.25001));
        let p = StatedPct {
            value: 99.91,
            decimals: 2,
        };
        assert!(p.agrees_with(99.90875));
    }
}

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use drtl_core::interconnect::{fanout_profile, map_all, CrossbarHeader, ElectricalParams, FanoutProfile};
use drtl_core::netlist::NetworkStats;
use drtl_core::power::{
    bundled_baseline, compare_published, compare_report, comparisons_csv, comparisons_markdown, estimate,
    load_baseline, BaselineRow, Comparison, Decimal, EnergyModel, EnergyReport,
};
use drtl_core::sim::{equivalence_check, format_responses, parse_stimulus, CheckMode, EvalMode, Simulator, Verdict};
use drtl_core::synth::{node_count_study, NodeCount};
use drtl_core::{
    compile, levelize_with_clock, monte_carlo, parse_bench, BoolNetwork, DeviceModel, PipelinedNetwork,
    QuantizationScheme, ThresholdGate, TimingReport, TlgNetwork, Variation,
};
use serde::Serialize;

use crate::{CheckOpts, Command, DeviceOpts, ElectricalOpts, EnergyOpts, Format, Mode, SynthOpts};

pub const DEFAULT_SEED: u64 = 1;

pub enum Status {
    Ok,
    VerifyFailed,
}

pub fn run(cmd: Command) -> Result<Status> {
    match cmd {
        Command::Stats { bench, format } => {
            let net = read_bench(&bench)?;
            print!("{}", render_stats(&stem(&bench), &net.stats(), format));
        }
        Command::Synth {
            bench,
            synth,
            format,
            out,
        } => {
            let r = synth_cmd(&bench, &synth, out.as_deref())?;
            print!("{}", render_synth(&r, format));
        }
        Command::Pipeline { tlg, clock_ns, out } => print!("{}", json(&pipeline_cmd(&tlg, clock_ns, out.as_deref())?)),
        Command::Map {
            staged,
            electrical,
            out,
        } => print!("{}", json(&map_cmd(&staged, &electrical, out.as_deref())?)),
        Command::Power {
            staged,
            energy,
            format,
            out,
        } => {
            let r = power_cmd(&staged, &energy)?;
            let text = render_power(&r, format);
            if let Some(dir) = out {
                write(&dir, &format!("{}.power.{}", r.benchmark, extension(format)), &text)?;
            }
            print!("{text}");
        }
        Command::Verify {
            bench,
            staged,
            check,
            out,
        } => {
            let r = verify_cmd(&bench, &staged, &check, out.as_deref())?;
            print!("{}", json(&r));
            if !r.verdict.is_pass() {
                return Ok(Status::VerifyFailed);
            }
        }
        Command::Montecarlo {
            gates,
            staged,
            device,
            sigma,
            trials,
            seed,
            format,
            out,
        } => {
            let rows = montecarlo_cmd(&gates, staged.as_deref(), &device, &sigma, trials, seed)?;
            let text = render_montecarlo(&rows, format);
            if let Some(dir) = out {
                write(&dir, &format!("montecarlo.{}", extension(format)), &text)?;
            }
            print!("{text}");
        }
        Command::Simulate {
            staged,
            stimulus,
            device,
            behavioral,
            out,
        } => {
            let p = read_staged(&staged)?;
            let mode = if behavioral {
                EvalMode::Behavioral
            } else {
                EvalMode::Latch(resolve_device(&device.device, device.device_config.as_deref())?)
            };
            let text = fs::read_to_string(&stimulus).with_context(|| format!("reading {}", stimulus.display()))?;
            let vectors = parse_stimulus(&text, p.primary_inputs().len())?;
            let sim = Simulator::new(&p, &mode)?;
            let responses = sim.run(vectors.iter().map(Vec::as_slice))?;
            let text = format_responses(&responses, p.outputs().len());
            if let Some(dir) = out {
                write(&dir, &format!("{}.responses", stem(&staged)), &text)?;
            }
            print!("{text}");
        }
        Command::RunAll {
            bench,
            synth,
            energy,
            electrical,
            check,
            out,
        } => {
            let name = stem(&bench);
            let s = synth_cmd(&bench, &synth, Some(&out))?;
            let tlg = out.join(format!("{name}.tlg"));
            let clock = match &energy.clock_ns {
                Some(s) => decimal("clock-ns", s)?.to_f64(),
                None => drtl_core::pipeline::DEFAULT_CLOCK_NS,
            };
            let t = pipeline_cmd(&tlg, clock, Some(&out))?;
            let staged = out.join(format!("{name}.staged"));
            let m = map_cmd(&staged, &electrical, Some(&out))?;
            let p = power_cmd(&staged, &energy)?;
            write(&out, &format!("{name}.power.json"), &render_power(&p, Format::Json))?;
            let v = verify_cmd(&bench, &staged, &check, Some(&out))?;
            let pass = v.verdict.is_pass();
            print!(
                "{}",
                json(&serde_json::json!({
                    "benchmark": name,
                    "synth": s,
                    "timing": t,
                    "map": m,
                    "power": p,
                    "verify": v,
                }))
            );
            if !pass {
                return Ok(Status::VerifyFailed);
            }
        }
    }
    Ok(Status::Ok)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn extension(f: Format) -> &'static str {
    match f {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Md => "md",
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "network".into())
}

fn write(dir: &Path, file: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(file);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_bench(path: &Path) -> Result<BoolNetwork> {
    parse_bench(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn read_staged(path: &Path) -> Result<PipelinedNetwork> {
    read(path)?
        .parse()
        .map_err(|e| anyhow!("parsing {}: {e}", path.display()))
}

fn resolve_device(name: &str, config: Option<&Path>) -> Result<DeviceModel> {
    if let Some(path) = config {
        let devices = DeviceModel::load_config(path).with_context(|| format!("loading {}", path.display()))?;
        if let Some(d) = devices.into_iter().find(|d| d.name == name) {
            return Ok(d);
        }
    }
    DeviceModel::preset(name).ok_or_else(|| anyhow!("unknown device `{name}`"))
}

fn render_stats(name: &str, s: &NetworkStats, format: Format) -> String {
    let mut rows: Vec<(String, String)> = vec![
        ("primary_inputs".into(), s.primary_inputs.to_string()),
        ("primary_outputs".into(), s.primary_outputs.to_string()),
        ("gate_count".into(), s.gate_count.to_string()),
        ("net_count".into(), s.net_count.to_string()),
        ("max_fanin".into(), s.max_fanin.to_string()),
        ("max_fanout".into(), s.max_fanout.to_string()),
        ("depth".into(), s.depth.to_string()),
    ];
    rows.extend(
        s.gates_by_kind
            .iter()
            .map(|(k, n)| (format!("gates_{k}"), n.to_string())),
    );
    match format {
        Format::Json => json(&serde_json::json!({ "benchmark": name, "stats": s })),
        Format::Csv => {
            let mut t = String::from("field,value\n");
            for (k, v) in rows {
                t += &format!("{k},{v}\n");
            }
            t
        }
        Format::Md => {
            let mut t = format!("# {name}\n\n| field | value |\n|---|---:|\n");
            for (k, v) in rows {
                t += &format!("| {k} | {v} |\n");
            }
            t
        }
    }
}

#[derive(Serialize)]
struct SynthReport {
    benchmark: String,
    scheme: String,
    nodes: usize,
    /// Node count at each fan-in limit.
    node_counts: Vec<NodeCount>,
}

fn synth_cmd(bench: &Path, opts: &SynthOpts, out: Option<&Path>) -> Result<SynthReport> {
    let net = read_bench(bench)?;
    let scheme = QuantizationScheme::named(&opts.scheme).ok_or_else(|| anyhow!("unknown scheme `{}`", opts.scheme))?;
    let tlg = compile(&net, &scheme)?;
    let report = SynthReport {
        benchmark: stem(bench),
        scheme: opts.scheme.clone(),
        nodes: tlg.nodes().len(),
        node_counts: node_count_study(&net, &[2, 3, 4])?,
    };
    if let Some(dir) = out {
        write(dir, &format!("{}.tlg", report.benchmark), &tlg.to_string())?;
        write(dir, &format!("{}.synth.json", report.benchmark), &json(&report))?;
    }
    Ok(report)
}

fn render_synth(r: &SynthReport, format: Format) -> String {
    match format {
        Format::Json => json(r),
        Format::Csv => {
            let mut t = String::from("fanin_limit,nodes\n");
            for c in &r.node_counts {
                t += &format!("{},{}\n", c.fanin_limit, c.nodes);
            }
            t
        }
        Format::Md => {
            let mut t = format!(
                "{}: {} nodes under `{}`\n\n| fan-in limit | nodes |\n|---:|---:|\n",
                r.benchmark, r.nodes, r.scheme
            );
            for c in &r.node_counts {
                t += &format!("| {} | {} |\n", c.fanin_limit, c.nodes);
            }
            t
        }
    }
}

#[derive(Serialize)]
struct PipelineReport {
    benchmark: String,
    gates: usize,
    buffers: usize,
    #[serde(flatten)]
    timing: TimingReport,
}

fn pipeline_cmd(path: &Path, clock_ns: f64, out: Option<&Path>) -> Result<PipelineReport> {
    let tlg: TlgNetwork = read(path)?
        .parse()
        .map_err(|e| anyhow!("parsing {}: {e}", path.display()))?;
    if !(clock_ns.is_finite() && clock_ns > 0.0) {
        bail!("--clock-ns must be positive, got {clock_ns}");
    }
    let p = levelize_with_clock(&tlg, clock_ns);
    let report = PipelineReport {
        benchmark: stem(path),
        gates: p.gate_count(),
        buffers: p.gate_count() - tlg.nodes().len(),
        timing: p.timing_report(),
    };
    if let Some(dir) = out {
        write(dir, &format!("{}.staged", report.benchmark), &p.to_string())?;
        write(dir, &format!("{}.timing.json", report.benchmark), &json(&report))?;
    }
    Ok(report)
}

#[derive(Serialize)]
struct CrossbarSummary {
    #[serde(flatten)]
    header: CrossbarHeader,
    on_cells: usize,
    off_cells: usize,
    leakage_watts: f64,
}

#[derive(Serialize)]
struct MapReport {
    benchmark: String,
    crossbars: Vec<CrossbarSummary>,
    total_leakage_watts: f64,
    fanout: FanoutProfile,
}

fn map_cmd(path: &Path, opts: &ElectricalOpts, out: Option<&Path>) -> Result<MapReport> {
    let p = read_staged(path)?;
    let params = ElectricalParams {
        r_on_ohm: opts.r_on_ohm,
        r_off_ohm: opts.r_off_ohm,
        swing_v: opts.swing_v,
    };
    let bars = map_all(&p, params)?;
    let name = stem(path);
    if let Some(dir) = out {
        for b in &bars {
            let file = dir.join(format!("{name}.xbar{}.bin", b.boundary));
            fs::create_dir_all(dir)?;
            fs::write(&file, b.bitstream()).with_context(|| format!("writing {}", file.display()))?;
            write(dir, &format!("{name}.xbar{}.json", b.boundary), &json(&b.header()))?;
        }
    }
    let crossbars: Vec<CrossbarSummary> = bars
        .iter()
        .map(|b| CrossbarSummary {
            header: b.header(),
            on_cells: b.on_cells(),
            off_cells: b.off_cells(),
            leakage_watts: b.leakage_watts(),
        })
        .collect();
    let report = MapReport {
        benchmark: name,
        total_leakage_watts: crossbars.iter().map(|c| c.leakage_watts).sum(),
        crossbars,
        fanout: fanout_profile(&p),
    };
    if let Some(dir) = out {
        write(dir, &format!("{}.map.json", report.benchmark), &json(&report))?;
    }
    Ok(report)
}

#[derive(Serialize)]
struct PowerReport {
    benchmark: String,
    model: EnergyModel,
    report: EnergyReport,
    /// This network's energy and period against its published LUT row.
    comparison: Option<Comparison>,
    /// Every published row, recomputed from its raw columns.
    published: Vec<Comparison>,
}

fn decimal(flag: &str, s: &str) -> Result<Decimal> {
    let d: Decimal = s.parse().with_context(|| format!("--{flag}"))?;
    if d.units() == 0 {
        bail!("--{flag} must be positive");
    }
    Ok(d)
}

fn power_cmd(path: &Path, opts: &EnergyOpts) -> Result<PowerReport> {
    let p = read_staged(path)?;
    let model = EnergyModel {
        e_gate_fj: decimal("e-gate-fj", &opts.e_gate_fj)?,
        e_fanout_fj: decimal("e-fanout-fj", &opts.e_fanout_fj)?,
        clock_period_ns: match &opts.clock_ns {
            Some(s) => decimal("clock-ns", s)?,
            None => Decimal::from_f64(p.clock_period_ns())?,
        },
    };
    let report = estimate(&p, &model)?;
    let rows: Vec<BaselineRow> = match opts.baseline.as_str() {
        "bundled" => bundled_baseline(),
        "none" => Vec::new(),
        file => load_baseline(file)?,
    };
    let benchmark = stem(path);
    let comparison = rows
        .iter()
        .find(|r| r.name == benchmark)
        .map(|r| compare_report(&report, r))
        .transpose()?;
    let published = rows.iter().map(compare_published).collect::<Result<Vec<_>, _>>()?;
    Ok(PowerReport {
        benchmark,
        model,
        report,
        comparison,
        published,
    })
}

fn render_power(r: &PowerReport, format: Format) -> String {
    let mut rows: Vec<Comparison> = r.comparison.iter().cloned().collect();
    rows.extend(r.published.iter().cloned());
    let e = &r.report;
    match format {
        Format::Json => json(r),
        Format::Csv => format!(
            "benchmark,gates,total_fanout,energy_per_cycle_fj,edp_fj_ns,avg_energy_per_gate_fj,within_1fj_per_gate\n\
             {},{},{},{},{},{},{}\n\n{}",
            r.benchmark,
            e.gate_count,
            e.total_fanout,
            e.energy_per_cycle_fj,
            e.edp_fj_ns,
            e.avg_energy_per_gate_fj,
            e.within_fj_per_gate_ceiling,
            comparisons_csv(&rows)
        ),
        Format::Md => {
            format!(
            "# {}\n\n{} gates, {} fan-outs: {} fJ per cycle, {} ns period, EDP {} fJ·ns, {:.4} fJ per gate ({})\n\n{}",
            r.benchmark,
            e.gate_count,
            e.total_fanout,
            e.energy_per_cycle_fj,
            e.throughput_period_ns,
            e.edp_fj_ns,
            e.avg_energy_per_gate_fj,
            if e.within_fj_per_gate_ceiling { "at or below 1 fJ" } else { "above 1 fJ" },
            comparisons_markdown(&rows)
        )
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    benchmark: String,
    check: CheckMode,
    device: Option<String>,
    verdict: Verdict,
}

fn verify_cmd(bench: &Path, staged: &Path, opts: &CheckOpts, out: Option<&Path>) -> Result<VerifyReport> {
    let net = read_bench(bench)?;
    let p = read_staged(staged)?;
    let check = match opts.mode {
        Mode::Exhaustive => CheckMode::Exhaustive,
        Mode::Random => {
            if opts.vectors == 0 {
                bail!("--vectors must be at least 1");
            }
            CheckMode::Random {
                count: opts.vectors,
                seed: opts.seed,
            }
        }
    };
    let eval = match &opts.device {
        Some(name) => EvalMode::Latch(resolve_device(name, opts.device_config.as_deref())?),
        None => EvalMode::Behavioral,
    };
    let verdict = equivalence_check(&net, &p, check, &eval)?;
    let report = VerifyReport {
        benchmark: stem(bench),
        check,
        device: opts.device.clone(),
        verdict,
    };
    if let Some(dir) = out {
        write(dir, &format!("{}.verify.json", report.benchmark), &json(&report))?;
    }
    Ok(report)
}

#[derive(Serialize)]
struct McRow {
    gate: String,
    device: String,
    sigma: f64,
    trials: u64,
    failures: u64,
    rate: f64,
    std_err: f64,
    max_safe_relative_deviation: f64,
}

fn montecarlo_cmd(
    specs: &[String],
    staged: Option<&Path>,
    device: &DeviceOpts,
    sigmas: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<McRow>> {
    let dev = resolve_device(&device.device, device.device_config.as_deref())?;
    let gates: Vec<ThresholdGate> = match staged {
        Some(path) => {
            let p = read_staged(path)?;
            let distinct: BTreeSet<ThresholdGate> = p.nodes().map(|n| n.gate.clone()).collect();
            distinct.into_iter().collect()
        }
        None if specs.is_empty() => drtl_core::synth::two_input_library(),
        None => specs
            .iter()
            .map(|s| s.parse().map_err(|e| anyhow!("gate `{s}`: {e}")))
            .collect::<Result<_>>()?,
    };
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    let mut rows = Vec::new();
    for g in &gates {
        let delta = g.max_safe_relative_deviation(&dev)?;
        for &sigma in sigmas {
            if !(sigma.is_finite() && sigma >= 0.0) {
                bail!("--sigma must be non-negative, got {sigma}");
            }
            let r = monte_carlo(g, &dev, Variation::Gaussian { sigma }, trials, seed)?;
            rows.push(McRow {
                gate: g.to_string(),
                device: dev.name.clone(),
                sigma,
                trials,
                failures: r.failures,
                rate: r.rate(),
                std_err: r.std_err(),
                max_safe_relative_deviation: delta,
            });
        }
    }
    Ok(rows)
}

fn render_montecarlo(rows: &[McRow], format: Format) -> String {
    match format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut t = String::from("gate,device,sigma,trials,failures,rate,std_err,max_safe_relative_deviation\n");
            for r in rows {
                t += &format!(
                    "\"{}\",{},{},{},{},{},{},{}\n",
                    r.gate, r.device, r.sigma, r.trials, r.failures, r.rate, r.std_err, r.max_safe_relative_deviation
                );
            }
            t
        }
        Format::Md => {
            let mut t = String::from(
                "| gate | device | sigma | trials | failures | rate | std. err. | safe deviation |\n\
                 |---|---|---:|---:|---:|---:|---:|---:|\n",
            );
            for r in rows {
                t += &format!(
                    "| `{}` | {} | {} | {} | {} | {:.5} | {:.5} | {:.4} |\n",
                    r.gate, r.device, r.sigma, r.trials, r.failures, r.rate, r.std_err, r.max_safe_relative_deviation
                );
            }
            t
        }
    }
}

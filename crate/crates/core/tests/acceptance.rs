//! End-to-end acceptance checks. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and exits non-zero if any fails.

use std::time::{Duration, Instant};

use drtl_core::interconnect::{fanout_profile, map_all, CrossbarConfig, CrossbarHeader, ElectricalParams};
use drtl_core::power::{bundled_baseline, compare_published, estimate, EnergyModel, MISMATCH_FLAG};
use drtl_core::sim::{equivalence_check, CheckMode, EvalMode, Simulator};
use drtl_core::synth::two_input_library;
use drtl_core::tlg::{input_vectors, monte_carlo};
use drtl_core::{
    compile, levelize, parse_bench, random_network, BoolNetwork, DeviceModel, PipelinedNetwork, QuantizationScheme,
    RandomNetworkSpec, ThresholdGate, Variation,
};
use num_rational::Ratio;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CIRCUITS: [&str; 5] = ["c432", "c499", "c880", "c1355", "c1908"];

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if let false = $cond {
            return Err(format!($($fmt)+));
        }
    };
}

struct Bench {
    name: &'static str,
    net: BoolNetwork,
    pipe: PipelinedNetwork,
}

fn benchmarks() -> Vec<Bench> {
    CIRCUITS
        .iter()
        .map(|&name| {
            let path = format!("{}/data/iscas85/{name}.bench", env!("CARGO_MANIFEST_DIR"));
            let net = parse_bench(&std::fs::read_to_string(path).unwrap()).unwrap();
            let pipe = levelize(&compile(&net, &QuantizationScheme::default()).unwrap());
            Bench { name, net, pipe }
        })
        .collect()
}

fn random_networks() -> Vec<BoolNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..24)
        .map(|k| {
            let inputs = if k % 4 == 0 { 16 } else { rng.random_range(3..=16) };
            let gates = if k % 4 == 0 { 200 } else { rng.random_range(8..=200) };
            let max_fanin = rng.random_range(2..=6);
            random_network(
                &mut rng,
                &RandomNetworkSpec {
                    inputs,
                    gates,
                    max_fanin,
                },
            )
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let rows = bundled_baseline();
    let expect = [
        ("c432", 97.2, 99.86),
        ("c880", 96.3, 99.78),
        ("c1355", 97.4, 99.87),
        ("c1908", 97.89, 99.91),
    ];
    for (name, e_pct, edp_pct) in expect {
        let row = rows.iter().find(|r| r.name == name).ok_or(format!("{name} missing"))?;
        let e = 100.0 * (1.0 - row.rtl_energy_fj / row.lut_energy_fj);
        let edp = 100.0 * (1.0 - row.rtl_energy_fj * row.rtl_delay_ns / (row.lut_energy_fj * row.lut_delay_ns));
        let c = compare_published(row).map_err(|e| e.to_string())?;
        ensure!(
            (c.energy_reduction_pct - e).abs() < 1e-9,
            "{name}: energy recomputation differs"
        );
        ensure!(
            (c.edp_reduction_pct - edp).abs() < 1e-9,
            "{name}: EDP recomputation differs"
        );
        ensure!((e - e_pct).abs() <= 0.05, "{name}: energy {e:.4} vs {e_pct}");
        ensure!((edp - edp_pct).abs() <= 0.01, "{name}: EDP {edp:.4} vs {edp_pct}");
        ensure!(c.energy_flag.is_none() && c.edp_flag.is_none(), "{name} flagged");
    }
    let c499 = rows.iter().find(|r| r.name == "c499").ok_or("c499 missing")?;
    let c = compare_published(c499).map_err(|e| e.to_string())?;
    ensure!(c.energy_flag == Some(MISMATCH_FLAG), "c499 energy not flagged");
    ensure!(
        (c.energy_reduction_pct - 97.2).abs() < 0.05,
        "c499 recomputed {}",
        c.energy_reduction_pct
    );
    Ok(format!(
        "4 rows within tolerance; c499 {MISMATCH_FLAG} (stated 94.5, computed {:.2})",
        c.energy_reduction_pct
    ))
}

fn criterion_2(benches: &[Bench]) -> Outcome {
    let quarter = Ratio::new(1, 4);
    let min = two_input_library()
        .iter()
        .map(|g| g.margin_analysis().unwrap().resolution)
        .min()
        .unwrap();
    ensure!(min == quarter, "library minimum resolution {min}");
    let mut gates = 0;
    for b in benches {
        for node in b.pipe.nodes() {
            let r = node.gate.margin_analysis().map_err(|e| e.to_string())?.resolution;
            ensure!(r >= quarter, "{}: {} has resolution {r}", b.name, node.output);
            gates += 1;
        }
    }
    Ok(format!("library minimum = 1/4; {gates} benchmark gates all >= 1/4"))
}

fn criterion_3(randoms: &[BoolNetwork], benches: &[Bench]) -> Outcome {
    let start = Instant::now();
    let mut vectors = 0;
    for (k, net) in randoms.iter().enumerate() {
        let s = net.stats();
        ensure!(s.primary_inputs <= 16 && s.gate_count <= 200, "network {k} too large");
        ensure!(s.gates_by_kind.len() == 8, "network {k} lacks a gate kind");
        let p = levelize(&compile(net, &QuantizationScheme::default()).map_err(|e| e.to_string())?);
        match equivalence_check(net, &p, CheckMode::Exhaustive, &EvalMode::Behavioral).map_err(|e| e.to_string())? {
            drtl_core::Verdict::Pass { vectors: n } => vectors += n,
            v => return Err(format!("random network {k}: {v:?}")),
        }
    }
    for b in benches {
        let v = equivalence_check(
            &b.net,
            &b.pipe,
            CheckMode::Random { count: 10_000, seed: 1 },
            &EvalMode::Behavioral,
        )
        .map_err(|e| e.to_string())?;
        ensure!(v.is_pass(), "{}: {v:?}", b.name);
    }
    let t = start.elapsed();
    ensure!(t < Duration::from_secs(120), "took {t:?}");
    Ok(format!(
        "{} random networks ({vectors} vectors exhaustive) and 5 ISCAS-85 x 10^4 vectors in {:.1}s",
        randoms.len(),
        t.as_secs_f64()
    ))
}

fn first_valid_cycle(p: &PipelinedNetwork) -> Option<u64> {
    let sim = Simulator::new(p, &EvalMode::Behavioral).ok()?;
    let mut st = sim.reset();
    let zeros = vec![false; p.primary_inputs().len()];
    for _ in 0..=p.depth() {
        if sim.step(&mut st, &zeros).ok()?.is_some() {
            return Some(st.cycle());
        }
    }
    None
}

fn criterion_4(randoms: &[BoolNetwork], benches: &[Bench]) -> Outcome {
    let mut pipes: Vec<(String, PipelinedNetwork)> = randoms
        .iter()
        .enumerate()
        .map(|(k, n)| {
            (
                format!("random {k}"),
                levelize(&compile(n, &QuantizationScheme::default()).unwrap()),
            )
        })
        .collect();
    pipes.extend(benches.iter().map(|b| (b.name.to_string(), b.pipe.clone())));
    for (name, p) in &pipes {
        let t = p.timing_report();
        ensure!(
            t.throughput_period_ns == 0.5,
            "{name}: period {}",
            t.throughput_period_ns
        );
        ensure!(
            (t.throughput_ghz - 2.0).abs() < 1e-12,
            "{name}: {} GHz",
            t.throughput_ghz
        );
        ensure!(
            t.latency_ns == p.depth() as f64 * 0.5,
            "{name}: latency {}",
            t.latency_ns
        );
        let first = first_valid_cycle(p);
        ensure!(
            first == Some(p.depth() as u64),
            "{name}: first output at {first:?}, depth {}",
            p.depth()
        );
    }
    Ok(format!(
        "{} networks: period 0.5 ns, latency = depth x 0.5 ns, first output at cycle depth",
        pipes.len()
    ))
}

fn three_presets() -> [DeviceModel; 3] {
    [DeviceModel::ideal(), DeviceModel::mtj(3.0), DeviceModel::mtj(4.0)]
}

fn criterion_5() -> Outcome {
    let mut checks = 0;
    for dev in three_presets() {
        for g in two_input_library() {
            let r = g
                .to_conductances(&dev)
                .map_err(|e| format!("{g} on {}: {e}", dev.name))?;
            for x in input_vectors(g.fanin()) {
                let latch = r.latch_evaluate(&x).map_err(|e| e.to_string())?;
                ensure!(latch == g.evaluate(&x).unwrap(), "{g} on {} at {x:?}", dev.name);
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} gate x vector x device checks agree"))
}

/// Independent failure-rate sampler: its own conductance construction, a
/// different generator and Box-Muller normals.
fn reference_failure_rate(weights: &[i32], bias: f64, dev: &DeviceModel, sigma: f64, trials: u64, seed: u64) -> f64 {
    let branch = |v: f64| {
        let strong = dev.g_off + v.abs() * (dev.g_unit - dev.g_off);
        if v > 0.0 {
            (strong, dev.g_off)
        } else {
            (dev.g_off, strong)
        }
    };
    let mut pairs: Vec<(f64, f64)> = weights.iter().map(|&w| branch(w as f64)).collect();
    pairs.push(branch(bias));
    let n = weights.len();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut normal = || {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut failures = 0u64;
    for _ in 0..trials {
        let g: Vec<(f64, f64)> = pairs
            .iter()
            .map(|&(p, m)| {
                (
                    p * (1.0 + sigma * normal()).max(0.0),
                    m * (1.0 + sigma * normal()).max(0.0),
                )
            })
            .collect();
        let bad = (0u32..1 << n).any(|v| {
            let on = |i: usize| i == n || v >> i & 1 == 1;
            let plus: f64 = (0..=n).filter(|&i| on(i)).map(|i| g[i].0).sum();
            let minus: f64 = (0..=n).filter(|&i| on(i)).map(|i| g[i].1).sum();
            let sum: f64 = (0..n).filter(|&i| on(i)).map(|i| weights[i] as f64).sum::<f64>() + bias;
            if sum > 0.0 {
                plus <= minus
            } else {
                plus >= minus
            }
        });
        failures += u64::from(bad);
    }
    failures as f64 / trials as f64
}

fn criterion_6() -> Outcome {
    let mut runs = 0;
    for dev in three_presets() {
        for g in two_input_library() {
            let delta = g.max_safe_relative_deviation(&dev).map_err(|e| e.to_string())?;
            for v in [
                Variation::Uniform { delta: 0.99 * delta },
                Variation::Gaussian { sigma: delta / 10.0 },
            ] {
                let r = monte_carlo(&g, &dev, v, 10_000, 17).map_err(|e| e.to_string())?;
                ensure!(
                    r.failures == 0,
                    "{g} on {} under {v:?}: {} failures",
                    dev.name,
                    r.failures
                );
                runs += 1;
            }
        }
    }
    let mut agree = Vec::new();
    let and2 = ThresholdGate::and(2);
    for dev in three_presets() {
        let trials = 100_000;
        let ours =
            monte_carlo(&and2, &dev, Variation::Gaussian { sigma: 0.2 }, trials, 1).map_err(|e| e.to_string())?;
        let theirs = reference_failure_rate(&[1, 1], -1.5, &dev, 0.2, trials, 99);
        let se = ((ours.rate() * (1.0 - ours.rate()) + theirs * (1.0 - theirs)) / trials as f64).sqrt();
        ensure!(
            (ours.rate() - theirs).abs() <= 3.0 * se,
            "AND2 on {}: {} vs reference {theirs} (se {se})",
            dev.name,
            ours.rate()
        );
        agree.push(format!("{} {:.4}/{:.4}", dev.name, ours.rate(), theirs));
    }
    Ok(format!(
        "{runs} in-bound runs with 0 failures; AND2 sigma=0.2: {}",
        agree.join(", ")
    ))
}

fn criterion_7(benches: &[Bench]) -> Outcome {
    let model = EnergyModel::default();
    let mut lines = Vec::new();
    for b in benches {
        let r = estimate(&b.pipe, &model).map_err(|e| e.to_string())?;
        let gates = b.pipe.gate_count() as i128;
        let fanout = fanout_profile(&b.pipe).total as i128;
        let avg_fanout = Ratio::new(fanout, gates);
        let want = Ratio::new(3, 10) + Ratio::new(1, 5) * avg_fanout;
        ensure!(
            r.avg_energy_per_gate_exact() == want,
            "{}: {} != {want}",
            b.name,
            r.avg_energy_per_gate_exact()
        );
        ensure!(
            r.energy_exact() == want * Ratio::from_integer(gates),
            "{}: energy identity",
            b.name
        );
        ensure!(
            r.edp_exact() == r.energy_exact() * Ratio::new(1, 2),
            "{}: EDP identity",
            b.name
        );
        let at_or_below = want <= Ratio::from_integer(1);
        ensure!(r.within_fj_per_gate_ceiling == at_or_below, "{}: flag", b.name);
        lines.push(format!(
            "{} {:.3} fJ/gate ({})",
            b.name,
            r.avg_energy_per_gate_fj,
            if at_or_below { "<= 1 fJ" } else { "> 1 fJ" }
        ));
    }
    Ok(format!("identity exact; {}", lines.join(", ")))
}

fn criterion_8(benches: &[Bench]) -> Outcome {
    let mut bars = 0;
    for b in benches {
        let configs = map_all(&b.pipe, ElectricalParams::default()).map_err(|e| e.to_string())?;
        ensure!(configs.len() + 1 == b.pipe.depth(), "{}: crossbar count", b.name);
        let mut on = 0;
        for cfg in &configs {
            for c in 0..cfg.cols.len() {
                let hits = (0..cfg.rows.len()).filter(|&r| cfg.cell(r, c)).count();
                ensure!(
                    hits == 1,
                    "{} boundary {} column {c}: {hits} ON cells",
                    b.name,
                    cfg.boundary
                );
            }
            on += cfg.on_cells();
            bars += 1;
        }
        let pins: usize = b.pipe.stages()[1..].iter().flatten().map(|n| n.inputs.len()).sum();
        ensure!(on == pins, "{}: {on} ON cells vs {pins} pins", b.name);
        ensure!(fanout_profile(&b.pipe).total == on, "{}: fan-out total", b.name);
    }
    let header = CrossbarHeader {
        boundary: 0,
        n_rows: 2,
        n_cols: 1,
        bytes_per_row: 1,
        bit_order: "",
        r_on_ohm: 200.0,
        r_off_ohm: 10e6,
        swing_v: 0.25,
        rows: vec!["a".into(), "b".into()],
        cols: vec!["y:0".into()],
    };
    let single = CrossbarConfig::from_parts(&header, vec![0x80, 0x00]).map_err(|e| e.to_string())?;
    ensure!(single.off_cells() == 1, "expected one OFF cell");
    let leak = Ratio::new(1i64, 4).pow(2) / Ratio::from_integer(10_000_000);
    ensure!(leak == Ratio::new(1, 160_000_000), "V^2/R arithmetic");
    let got = single.leakage_watts();
    ensure!((got - 6.25e-9).abs() <= 1e-24, "leakage {got}");
    Ok(format!(
        "{bars} crossbars conserve pins with single-driver columns; one OFF cell leaks 6.25 nW"
    ))
}

fn main() {
    let start = Instant::now();
    let benches = benchmarks();
    let randoms = random_networks();
    let results = [
        ("criterion 1 (published baseline regression)", criterion_1()),
        ("criterion 2 (comparator resolution)", criterion_2(&benches)),
        ("criterion 3 (functional equivalence)", criterion_3(&randoms, &benches)),
        ("criterion 4 (pipeline timing)", criterion_4(&randoms, &benches)),
        ("criterion 5 (conductance model)", criterion_5()),
        ("criterion 6 (variation bound)", criterion_6()),
        ("criterion 7 (energy identity)", criterion_7(&benches)),
        ("criterion 8 (interconnect)", criterion_8(&benches)),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("[PASS] {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {name}: {msg}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

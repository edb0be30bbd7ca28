use std::collections::HashMap;

use drtl_core::sim::{equivalence_check, CheckMode, EvalMode, Simulator};
use drtl_core::synth::{node_count_study, TlgNetwork};
use drtl_core::{compile, levelize, parse_bench, BoolNetwork, DeviceModel, QuantizationScheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CIRCUITS: [&str; 5] = ["c432", "c499", "c880", "c1355", "c1908"];

fn load(name: &str) -> BoolNetwork {
    let path = format!("{}/data/iscas85/{name}.bench", env!("CARGO_MANIFEST_DIR"));
    parse_bench(&std::fs::read_to_string(path).unwrap()).unwrap()
}

// Longest PI-to-node path over the unpipelined threshold network.
fn node_depth(t: &TlgNetwork) -> usize {
    let mut level: HashMap<&str, usize> = t.primary_inputs().iter().map(|p| (p.as_str(), 0)).collect();
    let mut pending: Vec<_> = t.nodes().iter().collect();
    while !pending.is_empty() {
        pending.retain(|n| {
            let ins: Option<Vec<usize>> = n.inputs.iter().map(|i| level.get(i.as_str()).copied()).collect();
            match ins {
                Some(ls) => {
                    level.insert(&n.output, 1 + ls.into_iter().max().unwrap_or(0));
                    false
                }
                None => true,
            }
        });
    }
    level.values().copied().max().unwrap_or(0).max(1)
}

#[test]
fn interface_sizes() {
    let expect = [(36, 7), (41, 32), (60, 26), (41, 32), (33, 25)];
    for (name, (pi, po)) in CIRCUITS.iter().zip(expect) {
        let s = load(name).stats();
        assert_eq!((s.primary_inputs, s.primary_outputs), (pi, po), "{name}");
    }
}

#[test]
fn c432_depth_is_longest_path() {
    let t = compile(&load("c432"), &QuantizationScheme::default()).unwrap();
    let p = levelize(&t);
    assert_eq!(p.depth(), node_depth(&t));
    assert_eq!(p.depth(), p.longest_path());
}

#[test]
fn c432_compiled_network_matches_reference() {
    let net = load("c432");
    let t = compile(&net, &QuantizationScheme::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let x: Vec<bool> = (0..net.primary_inputs().len()).map(|_| rng.random()).collect();
        assert_eq!(t.eval(&x).unwrap(), net.eval_reference(&x).unwrap());
    }
}

#[test]
fn c432_stream_is_reference_shifted_by_latency() {
    let net = load("c432");
    let p = levelize(&compile(&net, &QuantizationScheme::default()).unwrap());
    let sim = Simulator::new(&p, &EvalMode::Behavioral).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let stream: Vec<Vec<bool>> = (0..300)
        .map(|_| (0..net.primary_inputs().len()).map(|_| rng.random()).collect())
        .collect();
    let out = sim.run(stream.iter().map(Vec::as_slice)).unwrap();
    let d = p.depth();
    for (t, o) in out.iter().enumerate() {
        if t + 1 < d {
            assert_eq!(*o, None, "cycle {}", t + 1);
        } else {
            let want = net.eval_reference(&stream[t + 1 - d]).unwrap();
            assert_eq!(o.as_ref().unwrap(), &want, "cycle {}", t + 1);
        }
    }
}

#[test]
fn wider_gates_never_need_more_nodes() {
    for name in CIRCUITS {
        let counts = node_count_study(&load(name), &[2, 3, 4]).unwrap();
        assert!(
            counts.windows(2).all(|w| w[1].nodes <= w[0].nodes),
            "{name}: {counts:?}"
        );
    }
}

#[test]
fn c880_random_check_seed_1() {
    let net = load("c880");
    let p = levelize(&compile(&net, &QuantizationScheme::default()).unwrap());
    let v = equivalence_check(
        &net,
        &p,
        CheckMode::Random { count: 10_000, seed: 1 },
        &EvalMode::Behavioral,
    )
    .unwrap();
    assert!(v.is_pass(), "{v:?}");
}

#[test]
fn latch_simulation_matches_behavioral_on_benchmarks() {
    for name in ["c432", "c499"] {
        let net = load(name);
        let p = levelize(&compile(&net, &QuantizationScheme::default()).unwrap());
        for dev in DeviceModel::presets() {
            let v = equivalence_check(
                &net,
                &p,
                CheckMode::Random { count: 2_000, seed: 3 },
                &EvalMode::Latch(dev.clone()),
            )
            .unwrap();
            assert!(v.is_pass(), "{name} on {}: {v:?}", dev.name);
        }
    }
}

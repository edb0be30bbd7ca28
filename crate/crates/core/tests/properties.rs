use std::collections::HashSet;

use drtl_core::interconnect::{fanout_profile, map_all, ElectricalParams};
use drtl_core::netlist::BoolNetwork;
use drtl_core::sim::{equivalence_check, CheckMode, EvalMode};
use drtl_core::tlg::{input_vectors, Bias};
use drtl_core::{compile, levelize, random_network, QuantizationScheme, RandomNetworkSpec, ThresholdGate};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gate_strategy() -> impl Strategy<Value = ThresholdGate> {
    (prop::collection::vec(-4i32..=4, 1..=5), -9i32..=9).prop_filter_map("weights all zero", |(w, b)| {
        if w.iter().all(|&x| x == 0) {
            return None;
        }
        ThresholdGate::new(w, Bias::from_doubled(2 * b + 1)?).ok()
    })
}

fn network(seed: u64, inputs: usize, gates: usize, max_fanin: usize) -> BoolNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_network(
        &mut rng,
        &RandomNetworkSpec {
            inputs,
            gates,
            max_fanin,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weighted_sum_never_ties(g in gate_strategy()) {
        for x in input_vectors(g.fanin()) {
            prop_assert_ne!(g.doubled_sum(&x), 0);
        }
    }

    #[test]
    fn negation_complements(g in gate_strategy()) {
        let t = g.truth_table();
        let n = g.negated().truth_table();
        prop_assert!(t.iter().zip(&n).all(|(a, b)| a != b));
        prop_assert_eq!(g.negated().negated(), g);
    }

    #[test]
    fn bench_text_round_trips(seed in any::<u64>(), inputs in 1usize..10, gates in 1usize..60) {
        let net = network(seed, inputs, gates, 5);
        let text = net.to_bench();
        let back: BoolNetwork = text.parse().unwrap();
        prop_assert_eq!(back.to_bench(), text);
    }

    #[test]
    fn compiled_pipeline_matches_reference(
        seed in any::<u64>(),
        inputs in 1usize..9,
        gates in 1usize..50,
        limit in 2usize..=4,
    ) {
        let net = network(seed, inputs, gates, 6);
        let tlg = compile(&net, &QuantizationScheme::for_fanin(limit)).unwrap();
        let p = levelize(&tlg);

        // every gate reads only the stage directly before it
        let mut prev: HashSet<&str> = p.primary_inputs().iter().map(String::as_str).collect();
        for stage in p.stages() {
            for node in stage {
                prop_assert!(node.gate.fanin() <= limit);
                for i in &node.inputs {
                    prop_assert!(prev.contains(i.as_str()), "{} reads {}", node.output, i);
                }
            }
            prev = stage.iter().map(|n| n.output.as_str()).collect();
        }
        prop_assert_eq!(p.timing_report().latency_ns, p.depth() as f64 * 0.5);

        let v = equivalence_check(&net, &p, CheckMode::Exhaustive, &EvalMode::Behavioral).unwrap();
        prop_assert!(v.is_pass(), "{:?}", v);
    }

    #[test]
    fn crossbar_pins_are_conserved(seed in any::<u64>(), inputs in 1usize..9, gates in 1usize..80) {
        let net = network(seed, inputs, gates, 4);
        let p = levelize(&compile(&net, &QuantizationScheme::default()).unwrap());
        let bars = map_all(&p, ElectricalParams::default()).unwrap();
        prop_assert_eq!(bars.len(), p.depth() - 1);
        let mut on = 0;
        for (s, bar) in bars.iter().enumerate() {
            prop_assert!(bar.column_sums().iter().all(|&c| c == 1));
            let pins: usize = p.stages()[s + 1].iter().map(|n| n.inputs.len()).sum();
            prop_assert_eq!(bar.on_cells(), pins);
            prop_assert_eq!(bar.on_cells() + bar.off_cells(), bar.rows.len() * bar.cols.len());
            on += bar.on_cells();
        }
        prop_assert_eq!(fanout_profile(&p).total, on);
    }
}

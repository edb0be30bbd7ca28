//! Seeded random combinational networks for equivalence sweeps and benches.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::netlist::{BoolGate, BoolNetwork, GateKind};

#[derive(Debug, Clone, Copy)]
pub struct RandomNetworkSpec {
    pub inputs: usize,
    pub gates: usize,
    /// Upper bound on the fan-in of multi-input gates (at least 2).
    pub max_fanin: usize,
}

/// Builds a random DAG over all eight gate kinds. Every gate whose output is
/// not read by another gate becomes a primary output, so there is no dead
/// logic. The first `min(gates, 8)` gates cycle through every kind.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, spec: &RandomNetworkSpec) -> BoolNetwork {
    assert!(spec.inputs >= 1, "need at least one primary input");
    let max_fanin = spec.max_fanin.max(2);
    let inputs: Vec<String> = (0..spec.inputs).map(|i| format!("i{i}")).collect();
    let mut nets: Vec<String> = inputs.clone();
    let mut read = vec![false; spec.inputs + spec.gates];
    let mut gates = Vec::with_capacity(spec.gates);

    for g in 0..spec.gates {
        let kind = if g < GateKind::ALL.len() {
            GateKind::ALL[g]
        } else {
            *GateKind::ALL.choose(rng).unwrap()
        };
        let arity = if kind.is_unary() {
            1
        } else {
            rng.random_range(2..=max_fanin)
        };
        // Favor recent nets so the graph grows deep rather than wide.
        let ins: Vec<String> = (0..arity)
            .map(|_| {
                let idx = if rng.random_bool(0.6) && nets.len() > spec.inputs {
                    let lo = nets.len().saturating_sub(8).max(spec.inputs);
                    rng.random_range(lo..nets.len())
                } else {
                    rng.random_range(0..nets.len())
                };
                read[idx] = true;
                nets[idx].clone()
            })
            .collect();
        let out = format!("g{g}");
        gates.push(BoolGate {
            output: out.clone(),
            kind,
            inputs: ins,
        });
        nets.push(out);
    }

    let mut outputs: Vec<String> = (0..spec.gates)
        .filter(|&g| !read[spec.inputs + g])
        .map(|g| format!("g{g}"))
        .collect();
    if outputs.is_empty() {
        outputs.push(nets.last().unwrap().clone());
    }
    BoolNetwork::new(inputs, outputs, gates).expect("generator emits valid networks")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_and_covers_all_kinds() {
        let spec = RandomNetworkSpec {
            inputs: 6,
            gates: 40,
            max_fanin: 4,
        };
        let a = random_network(&mut ChaCha8Rng::seed_from_u64(3), &spec);
        let b = random_network(&mut ChaCha8Rng::seed_from_u64(3), &spec);
        assert_eq!(a.to_bench(), b.to_bench());
        let stats = a.stats();
        assert_eq!(stats.gates_by_kind.len(), 8);
        assert!(stats.max_fanin <= 4);
    }
}

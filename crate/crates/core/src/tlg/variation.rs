//! Monte Carlo of conductance variation.
//!
//! Each trial scales every branch conductance (both sides of every pair,
//! bias included) by an independent random factor and checks the latch
//! decision on every input vector against the ideal gate. Trials are split
//! into fixed-size shards; shard `k` draws from the ChaCha stream `k` of the
//! run seed, so results do not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{input_vectors, ConductanceRealization, DeviceModel, ThresholdGate, TlgError};

const SHARD_TRIALS: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Variation {
    /// Factor `max(0, 1 + sigma * z)` with `z` standard normal.
    Gaussian { sigma: f64 },
    /// Factor uniform on `[1 - delta, 1 + delta]`.
    Uniform { delta: f64 },
}

impl Variation {
    fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            Variation::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (1.0 + sigma * z).max(0.0)
            }
            Variation::Uniform { delta } => 1.0 + delta * (2.0 * rng.random::<f64>() - 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub trials: u64,
    pub failures: u64,
}

impl MonteCarloResult {
    pub fn rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }

    /// Binomial standard error of [`rate`](Self::rate).
    pub fn std_err(&self) -> f64 {
        let p = self.rate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

pub fn monte_carlo_failure_rate(
    gate: &ThresholdGate,
    device: &DeviceModel,
    sigma: f64,
    trials: u64,
    seed: u64,
) -> Result<f64, TlgError> {
    monte_carlo(gate, device, Variation::Gaussian { sigma }, trials, seed).map(|r| r.rate())
}

pub fn monte_carlo(
    gate: &ThresholdGate,
    device: &DeviceModel,
    variation: Variation,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloResult, TlgError> {
    let spread = match variation {
        Variation::Gaussian { sigma } => sigma,
        Variation::Uniform { delta } => delta,
    };
    if trials == 0 || spread.is_nan() || spread < 0.0 {
        return Err(TlgError::Device(format!(
            "need trials >= 1 and a non-negative spread (got {trials}, {spread})"
        )));
    }
    let nominal = gate.to_conductances(device)?;
    let vectors: Vec<(Vec<bool>, bool)> = input_vectors(gate.fanin())
        .map(|x| {
            let want = gate.doubled_sum(&x) > 0;
            (x, want)
        })
        .collect();

    let shards = trials.div_ceil(SHARD_TRIALS);
    let failures = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let n = SHARD_TRIALS.min(trials - shard * SHARD_TRIALS);
            let mut perturbed = nominal.clone();
            let mut failed = 0u64;
            for _ in 0..n {
                perturb(&nominal, &mut perturbed, variation, &mut rng);
                let bad = vectors.iter().any(|(x, want)| {
                    let (p, m) = perturbed.path_conductances(x);
                    // an unresolved tie counts as a failure
                    if *want {
                        p <= m
                    } else {
                        p >= m
                    }
                });
                failed += u64::from(bad);
            }
            failed
        })
        .sum();
    Ok(MonteCarloResult { trials, failures })
}

fn perturb<R: Rng>(nominal: &ConductanceRealization, out: &mut ConductanceRealization, v: Variation, rng: &mut R) {
    for (src, dst) in nominal
        .inputs
        .iter()
        .chain(std::iter::once(&nominal.bias))
        .zip(out.inputs.iter_mut().chain(std::iter::once(&mut out.bias)))
    {
        dst.g_plus = src.g_plus * v.sample(rng);
        dst.g_minus = src.g_minus * v.sample(rng);
    }
}

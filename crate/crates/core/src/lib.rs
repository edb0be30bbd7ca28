//! Threshold-logic compilation, pipelining and cost modelling for
//! differential resistive threshold logic (DRTL) fabrics.
//!
//! The flow is `BoolNetwork` -> [`synthesize`] -> `TlgNetwork` ->
//! [`levelize`] -> `PipelinedNetwork`, which can then be simulated
//! cycle by cycle, mapped onto crossbars and costed for energy.

pub mod interconnect;
pub mod netlist;
pub mod pipeline;
pub mod power;
pub mod random;
pub mod sim;
pub mod synth;
pub mod tlg;

pub use interconnect::{
    boundary_count, fanout_profile, map_all, map_boundary, CrossbarConfig, ElectricalParams, FanoutProfile,
    InterconnectError,
};
pub use netlist::{parse_bench, BoolGate, BoolNetwork, GateKind, NetlistError, NetworkStats};
pub use pipeline::{levelize, levelize_with_clock, OutputPort, PipelinedNetwork, TimingReport};
pub use power::{estimate, BaselineRow, Comparison, EnergyModel, EnergyReport, PowerError};
pub use random::{random_network, RandomNetworkSpec};
pub use sim::{equivalence_check, CheckMode, EvalMode, SimError, Simulator, Verdict};
pub use synth::{compile, synthesize, SynthError, TlgNetwork, TlgNode};
pub use tlg::{
    monte_carlo, monte_carlo_failure_rate, Bias, DeviceModel, MonteCarloResult, QuantizationScheme, ThresholdGate,
    TlgError, Variation,
};

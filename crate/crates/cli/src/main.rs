use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Compile Boolean netlists to pipelined resistive threshold logic and
/// report timing, interconnect, energy and variation tolerance.
#[derive(Parser)]
#[command(name = "drtl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural statistics of a `.bench` netlist.
    Stats {
        bench: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Fan-in decomposition and threshold-gate mapping.
    Synth {
        bench: PathBuf,
        #[command(flatten)]
        synth: SynthOpts,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Levelize a threshold network into register stages.
    Pipeline {
        tlg: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        clock_ns: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crossbar configuration for every stage boundary.
    Map {
        staged: PathBuf,
        #[command(flatten)]
        electrical: ElectricalOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy, delay and EDP, compared against a baseline table.
    Power {
        staged: PathBuf,
        #[command(flatten)]
        energy: EnergyOpts,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a staged network against its source netlist.
    Verify {
        bench: PathBuf,
        staged: PathBuf,
        #[command(flatten)]
        check: CheckOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Failure rate of gates under random conductance variation.
    Montecarlo {
        /// Gate such as `TLG([1,1], -1.5)`; repeatable.
        #[arg(long = "gate")]
        gates: Vec<String>,
        /// Take the distinct gates of a staged network instead.
        #[arg(long, conflicts_with = "gates")]
        staged: Option<PathBuf>,
        #[command(flatten)]
        device: DeviceOpts,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
        sigma: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, env = "DRTL_SEED", default_value_t = commands::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Clock a stimulus file through a staged network.
    Simulate {
        staged: PathBuf,
        /// One `0`/`1` string per cycle over the primary inputs.
        stimulus: PathBuf,
        #[command(flatten)]
        device: DeviceOpts,
        #[arg(long)]
        behavioral: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// synth, pipeline, map, power and verify in one go.
    RunAll {
        bench: PathBuf,
        #[command(flatten)]
        synth: SynthOpts,
        #[command(flatten)]
        energy: EnergyOpts,
        #[command(flatten)]
        electrical: ElectricalOpts,
        #[command(flatten)]
        check: CheckOpts,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SynthOpts {
    /// default, fanin2, fanin3 or fanin4.
    #[arg(long, default_value = "default")]
    scheme: String,
}

#[derive(Args, Clone)]
struct DeviceOpts {
    /// Preset (ideal, mtj3, mtj4, dw4, agsi) or a name from --device-config.
    #[arg(long, default_value = "ideal")]
    device: String,
    /// TOML file of `[[device]]` tables.
    #[arg(long)]
    device_config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct EnergyOpts {
    #[arg(long, default_value = "0.3")]
    e_gate_fj: String,
    #[arg(long, default_value = "0.2")]
    e_fanout_fj: String,
    /// Overrides the period stored in the staged file.
    #[arg(long)]
    clock_ns: Option<String>,
    /// Baseline CSV, or `bundled` for the shipped ISCAS-85 table, or `none`.
    #[arg(long, default_value = "bundled")]
    baseline: String,
}

#[derive(Args, Clone)]
struct ElectricalOpts {
    #[arg(long, default_value_t = 200.0)]
    r_on_ohm: f64,
    #[arg(long, default_value_t = 10e6)]
    r_off_ohm: f64,
    #[arg(long, default_value_t = 0.25)]
    swing_v: f64,
}

#[derive(Args, Clone)]
struct CheckOpts {
    #[arg(long, value_enum, default_value_t = Mode::Random)]
    mode: Mode,
    #[arg(long, default_value_t = 10_000)]
    vectors: u64,
    #[arg(long, env = "DRTL_SEED", default_value_t = commands::DEFAULT_SEED)]
    seed: u64,
    /// Simulate with the latch model of this device instead of integer sums.
    #[arg(long)]
    device: Option<String>,
    #[arg(long)]
    device_config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exhaustive,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Md,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(commands::Status::Ok) => ExitCode::SUCCESS,
        Ok(commands::Status::VerifyFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

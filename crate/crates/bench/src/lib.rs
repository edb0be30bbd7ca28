//! Fixtures shared by the benchmarks in `benches/`.

use drtl_core::{parse_bench, BoolNetwork};

/// Loads one of the bundled ISCAS-85 netlists by name (`c432`, ...).
pub fn iscas(name: &str) -> BoolNetwork {
    let path = format!("{}/../core/data/iscas85/{name}.bench", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse_bench(&text).expect("bundled netlist parses")
}

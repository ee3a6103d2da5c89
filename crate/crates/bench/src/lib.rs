//! Benchmark fixtures.

use std::path::PathBuf;

use madelung_core::ScenarioConfig;

/// A shipped scenario by name.
pub fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"));
    ScenarioConfig::load(path).expect("shipped scenario")
}

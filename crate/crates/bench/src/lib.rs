//! Shared fixtures for the benchmarks.

use chainplan_core::network::{build_distance_matrix, DistanceMatrix};
use chainplan_core::scenarios::{generate_instance, ScenarioConfig};
use chainplan_core::swarm::SwarmConfig;
use chainplan_core::NetworkScale;

/// Distance matrix of the generated national network for `seed`.
pub fn national_distances(seed: u64) -> DistanceMatrix {
    let cfg = ScenarioConfig { seed, network_scale: NetworkScale::National, distributors: 10, ..Default::default() };
    let inst = generate_instance(&cfg).expect("default scenario is valid");
    build_distance_matrix(&inst.graph).expect("generated graph is valid")
}

pub fn small_swarm(seed: u64) -> SwarmConfig {
    SwarmConfig { population: 40, iterations: 100, seed, ..SwarmConfig::default() }
}

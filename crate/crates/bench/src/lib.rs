//! Fixtures shared by the benchmarks.

use hetmimo_core::campaign::{simulate_drop, DropState};
use hetmimo_core::{place_topology, NetworkConfig, RandomStream, Stage};

/// Physical state of drop 0 for `config`.
pub fn drop_state(config: &NetworkConfig) -> DropState {
    let topo = place_topology(config, &mut RandomStream::new(config.seed, 0, Stage::Topology), 0);
    simulate_drop(config, topo, 0).expect("valid preset")
}

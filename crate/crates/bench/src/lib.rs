//! Fixtures shared by the benchmarks: the channel scenario instantiated on a
//! refined channel mesh.

use crossflux_cli::scenario::{parse_scenario, MeshSpec, Problem};
use crossflux_core::Mesh;

const CHANNEL: &str = include_str!("../../../configs/channel.json");

pub struct Fixture {
    pub mesh: Mesh,
    pub problem: Problem,
    pub dt: f64,
}

pub fn channel_fixture(level: u32) -> Fixture {
    let mut scenario = parse_scenario(CHANNEL).expect("channel config parses");
    scenario.mesh = MeshSpec::Channel { level };
    let mesh = scenario.build_mesh().expect("channel mesh");
    let problem = scenario.instantiate(&mesh).expect("channel problem");
    Fixture { mesh, problem, dt: scenario.time.dt }
}

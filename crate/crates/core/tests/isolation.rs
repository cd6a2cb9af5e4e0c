mod common;

use sbfd_isac::channel::{transmitters, Mode, Scenario};
use sbfd_isac::pipeline::simulate_node;
use sbfd_isac::waveform::NodeId;

/// Node 3's data sits in its own subband, so nodes 1 and 2 see exactly the
/// same sensing input whatever it carries.
#[test]
fn node3_payload_does_not_reach_sensing_nodes() {
    let mut f = common::bundled("indoor_sbfd.toml");
    f.duration_s = 0.3;
    let mut velocities = Vec::new();
    for seed in [1u64, 2] {
        f.comm_payload_seed = Some(seed);
        let s = Scenario::with_mode(&f, Mode::Sbfd, 0).unwrap();
        let tx = transmitters(&s).unwrap();
        let per_node: Vec<Vec<f64>> = [NodeId::Node1, NodeId::Node2]
            .into_iter()
            .map(|rx| {
                let r = simulate_node(&s, &tx, rx).unwrap();
                r.track.estimates.iter().map(|e| e.velocity).collect()
            })
            .collect();
        velocities.push(per_node);
    }
    assert!(!velocities[0][0].is_empty());
    for node in 0..2 {
        for (a, b) in velocities[0][node].iter().zip(&velocities[1][node]) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}

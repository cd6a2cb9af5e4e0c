//! Three-node propagation: scenario description, point-target geometry,
//! per-symbol tap evaluation, time- and frequency-domain propagation, AWGN.

mod noise;
mod paths;
mod propagate;
mod scenario;

pub use noise::add_noise;
pub use paths::{compute_paths, target_state, PathKind, PathTap};
pub use propagate::{apply_taps, channel_response, contributes, propagate, ReceiveModel, RowSpan};
pub use scenario::{
    transmitters, ExtraTap, Jitter, LinkConfig, Mode, NodeConfig, NodeSpec, NumerologyConfig, Scenario,
    ScenarioFile, TrajectorySpec,
};

//! Target trajectories standing in for motion capture: loading, synthesis,
//! testbed/MOCAP timeline alignment and per-node radial velocity references.

mod align;
mod track;
mod velocity;

pub use align::{align_timelines, AlignedTimeline};
pub use track::{load_track, parse_track, synthesize_track, write_track, GroundTruthTrack, TrackKind};
pub use velocity::{derive_radial_velocity, resample_to, TimeSeries};

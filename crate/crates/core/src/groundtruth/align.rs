use super::GroundTruthTrack;
use crate::error::{Error, Result};

/// Mapping between the capture clock and the testbed clock.
///
/// `offset = t1 - tm`. Testbed time zero (`aligned_start`) is the testbed
/// start `t1`; a capture sample taken `tau` seconds after `tm` lands at
/// `tau - offset` on the testbed clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedTimeline {
    pub offset: f64,
    pub aligned_start: f64,
    pub testbed_start: f64,
}

pub fn align_timelines(testbed_start: f64, track: &GroundTruthTrack) -> Result<AlignedTimeline> {
    let tol = 1e-9 * track.period();
    if testbed_start < track.start_time - tol {
        return Err(Error::OutOfRange(format!(
            "testbed start {testbed_start} precedes capture start {}",
            track.start_time
        )));
    }
    if testbed_start > track.end_time() + tol {
        return Err(Error::OutOfRange(format!(
            "testbed start {testbed_start} is after the capture ends at {}",
            track.end_time()
        )));
    }
    Ok(AlignedTimeline {
        offset: testbed_start - track.start_time,
        aligned_start: 0.0,
        testbed_start,
    })
}

impl AlignedTimeline {
    /// Capture-clock time -> testbed-clock time.
    pub fn to_testbed(&self, capture_time: f64) -> f64 {
        capture_time - self.testbed_start
    }

    /// Testbed-clock time -> capture-clock time.
    pub fn to_capture(&self, testbed_time: f64) -> f64 {
        testbed_time + self.testbed_start
    }

    /// Samples at or after testbed start, re-timed onto the testbed clock.
    /// Earlier samples are dropped.
    pub fn apply(&self, track: &GroundTruthTrack) -> Result<GroundTruthTrack> {
        let first = (0..track.len())
            .find(|&i| i as f64 / track.sample_rate - self.offset >= -1e-9 * track.period())
            .ok_or_else(|| Error::OutOfRange("no samples after testbed start".into()))?;
        GroundTruthTrack::new(
            track.sample_rate,
            first as f64 / track.sample_rate - self.offset,
            track.positions[first..].to_vec(),
            track.label.clone(),
        )
    }

    /// Number of capture samples that precede testbed start.
    pub fn dropped_samples(&self, track: &GroundTruthTrack) -> usize {
        (0..track.len())
            .take_while(|&i| i as f64 / track.sample_rate - self.offset < -1e-9 * track.period())
            .count()
    }
}

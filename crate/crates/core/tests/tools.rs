mod common;

use std::fs;

use proptest::prelude::*;
use sbfd_isac::channel::Mode;
use sbfd_isac::groundtruth::load_track;
use sbfd_isac::pipeline::{convert_iq, inspect_waveform, synthesize_ground_truth};
use sbfd_isac::waveform::NodeId;

const MHZ: f64 = 1e6;

#[test]
fn sbfd_composite_shows_three_bands() {
    let dir = tempfile::tempdir().unwrap();
    let r = inspect_waveform(&common::bundled("indoor_sbfd.toml"), Mode::Sbfd, None, 8, dir.path()).unwrap();
    assert_eq!(r.occupied_bands.len(), 3, "{:?}", r.occupied_bands);
    // subband edges sit at (n - 1025) * 9765.625 Hz
    let edges = [(65.0, 662.0), (726.0, 1323.0), (1387.0, 1984.0)];
    for ((lo, hi), (a, b)) in r.occupied_bands.iter().zip(edges) {
        let (ea, eb) = ((a - 1025.0) * 9765.625, (b - 1025.0) * 9765.625);
        assert!((lo - ea).abs() < 0.1 * MHZ && (hi - eb).abs() < 0.1 * MHZ, "{lo} {hi} vs {ea} {eb}");
    }
    let alloc = fs::read_to_string(dir.path().join("allocation.csv")).unwrap();
    assert_eq!(alloc.lines().count(), 4);
    assert!(alloc.contains("1,6800000000,65,662,598,30,568,zc-root-7,"));
    assert!(alloc.contains(",qpsk,"));
    assert!(fs::read_to_string(dir.path().join("papr.csv")).unwrap().lines().count() == 9);
}

#[test]
fn node3_alone_is_one_upper_band() {
    let dir = tempfile::tempdir().unwrap();
    let r = inspect_waveform(&common::bundled("indoor_sbfd.toml"), Mode::Sbfd, Some(NodeId::Node3), 8, dir.path()).unwrap();
    assert_eq!(r.occupied_bands.len(), 1);
    let (lo, hi) = r.occupied_bands[0];
    assert!(lo > 3.0 * MHZ && hi < 10.0 * MHZ);
}

#[test]
fn same_band_is_one_contiguous_band() {
    let dir = tempfile::tempdir().unwrap();
    let r = inspect_waveform(&common::bundled("indoor_sbfd.toml"), Mode::SameBand, None, 8, dir.path()).unwrap();
    assert_eq!(r.occupied_bands.len(), 1, "{:?}", r.occupied_bands);
    let (lo, hi) = r.occupied_bands[0];
    assert!(lo < -9.0 * MHZ && hi > 9.0 * MHZ);
    let alloc = fs::read_to_string(dir.path().join("allocation.csv")).unwrap();
    // every full-band node overlaps the other two
    assert!(alloc.lines().skip(1).all(|l| l.split(',').last().unwrap().split(' ').count() == 2));
}

#[test]
fn multiband_composite_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let f = common::bundled("indoor_sbfd.toml");
    assert!(inspect_waveform(&f, Mode::Multiband, None, 4, dir.path()).is_err());
    assert!(inspect_waveform(&f, Mode::Multiband, Some(NodeId::Node1), 4, dir.path()).is_ok());
}

#[test]
fn empty_capture_converts_to_empty_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("e.cf32");
    fs::write(&a, b"").unwrap();
    let b = dir.path().join("e.csv");
    convert_iq(&a, &b).unwrap();
    assert_eq!(fs::read(&b).unwrap(), b"");
}

#[test]
fn odd_float_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("odd.cf32");
    fs::write(&a, 1.0f32.to_le_bytes()).unwrap();
    assert!(convert_iq(&a, &dir.path().join("odd.csv")).is_err());
    let c = dir.path().join("odd3.csv");
    fs::write(&c, "1,2,3\n").unwrap();
    assert!(convert_iq(&c, &dir.path().join("x.cf32")).is_err());
    assert!(convert_iq(&c, &dir.path().join("x.bin")).is_err());
}

#[test]
fn sidecar_follows_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.cf32");
    fs::write(&a, [0u8; 16]).unwrap();
    fs::write(dir.path().join("a.cf32.toml"), "x = 1\n").unwrap();
    convert_iq(&a, &dir.path().join("b.cf32")).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("b.cf32.toml")).unwrap(), "x = 1\n");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cf32_csv_round_trip_is_bit_exact(bits in prop::collection::vec(any::<u32>(), 0..64)) {
        // NaN payloads are not preserved by text, everything else is
        let floats: Vec<f32> = bits
            .iter()
            .map(|b| f32::from_bits(*b))
            .map(|f| if f.is_nan() { 0.5 } else { f })
            .collect();
        let pairs = floats.len() / 2 * 2;
        let bytes: Vec<u8> = floats[..pairs].iter().flat_map(|f| f.to_le_bytes()).collect();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.cf32");
        let c = dir.path().join("a.csv");
        let b = dir.path().join("b.cf32");
        fs::write(&a, &bytes).unwrap();
        convert_iq(&a, &c).unwrap();
        convert_iq(&c, &b).unwrap();
        prop_assert_eq!(fs::read(&b).unwrap(), bytes);
    }
}

#[test]
fn synthesized_truth_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let f = common::bundled("indoor_sbfd.toml");
    let out = dir.path().join("gt.csv");
    synthesize_ground_truth(&f, 1, &out).unwrap();
    let t = load_track(&out).unwrap();
    assert!((t.sample_rate - 100.0).abs() < 1e-9);
    // lead + duration + tail, inclusive of both ends
    assert_eq!(t.len(), 556);
    let v = (t.positions[100] - t.positions[0]) * (1.0 / (t.period() * 100.0));
    // base walk (0.1, -0.9) with at most 10 % speed jitter
    let speed = v.norm();
    assert!((speed - 0.1f64.hypot(0.9)).abs() <= 0.1 * 0.1f64.hypot(0.9) + 1e-6);
}

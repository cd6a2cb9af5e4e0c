#![allow(dead_code)]

use std::path::PathBuf;

use sbfd_isac::channel::ScenarioFile;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn bundled(name: &str) -> ScenarioFile {
    ScenarioFile::load(&scenario_path(name)).unwrap()
}

/// The walk scenario cut to `duration` seconds, written next to `dir` so
/// run_simulation can load it.
pub fn short_walk(dir: &std::path::Path, duration: f64, runs: usize) -> PathBuf {
    let mut f = bundled("indoor_sbfd.toml");
    f.duration_s = duration;
    f.runs = runs;
    let path = dir.join("short.toml");
    std::fs::write(&path, f.to_toml().unwrap()).unwrap();
    path
}

/// Every file under `root` with its bytes, sorted by relative path.
pub fn snapshot(root: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

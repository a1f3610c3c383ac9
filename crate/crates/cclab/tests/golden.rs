//! Golden metrics for the shipped presets. The acceptance suite compares
//! fresh runs byte for byte against these files; regenerate them only when
//! an intentional behavior change lands, and review the diff.

use std::fs;
use std::path::PathBuf;

use cclab::config::load_scenario;
use cclab::corpus::{preset_scenarios, repo_root};
use cclab::emit::metrics_csv;
use cclab_core::sim::run_scenario;

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Rewrites every golden file from the current simulator. Run explicitly:
/// cargo test -p cclab refresh_goldens -- --ignored
#[test]
#[ignore = "rewrites the golden files"]
fn refresh_goldens() {
    let dir = golden_dir();
    fs::create_dir_all(&dir).unwrap();
    for (name, _) in preset_scenarios() {
        let spec = load_scenario(&repo_root().join("scenarios").join(name)).unwrap();
        let report = run_scenario(&spec).unwrap();
        let path = dir.join(name.replace(".toml", ".metrics.csv"));
        fs::write(&path, metrics_csv(&report)).unwrap();
        println!("wrote {}", path.display());
    }
}

#[test]
fn goldens_exist_for_every_preset() {
    let dir = golden_dir();
    for (name, _) in preset_scenarios() {
        let path = dir.join(name.replace(".toml", ".metrics.csv"));
        assert!(
            path.is_file(),
            "{} missing; run: cargo test -p cclab refresh_goldens -- --ignored",
            path.display()
        );
    }
}

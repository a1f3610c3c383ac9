//! The bundled corpus: synthetic capacity traces plus one preset scenario
//! per experiment. Shipped files are generated, never hand-edited; tests
//! compare them byte-for-byte against these generators and an ignored
//! refresh test rewrites them.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use cclab_core::rng::SeededRng;
use cclab_core::trace::{gen_constant_trace, gen_step_trace, LinkTrace, DEFAULT_MTU_BYTES};

/// 1 s at 12 Mbps (one opportunity per millisecond), then a 1 s
/// capacity-zero gap. The closing timestamp both ends the gap and pins the
/// 2 s loop period, since the file format reads the period off the last line.
fn onoff_trace() -> LinkTrace {
    let mut ts: Vec<u64> = (1..=1000).collect();
    ts.push(2000);
    LinkTrace::from_parts(ts, 2000, DEFAULT_MTU_BYTES).expect("static trace is well formed")
}

/// 12 Mbps with periodic fades to 1.2 Mbps of mixed lengths (150, 250,
/// 350 ms). Acks keep flowing through a fade, unlike a hard outage, and
/// the staggered lengths mean a longer overlay interval always rides out
/// strictly more fade than a shorter one.
fn dips_trace() -> LinkTrace {
    gen_step_trace(&[
        (12.0, 1200),
        (1.2, 150),
        (12.0, 1200),
        (1.2, 250),
        (12.0, 1200),
        (1.2, 350),
    ])
    .expect("static trace is well formed")
}

/// Multiplicative random walk over 500 ms segments, clamped to 1..24 Mbps.
/// The seed is fixed so the shipped file never drifts.
fn randomwalk_trace() -> LinkTrace {
    let mut rng = SeededRng::new(42);
    let mut rate = 12.0;
    let mut segments = Vec::with_capacity(60);
    for _ in 0..60 {
        segments.push((rate, 500));
        rate = (rate * rng.next_range_f64(0.7, 1.4)).clamp(1.0, 24.0);
    }
    gen_step_trace(&segments).expect("walk rates stay positive")
}

/// Every bundled trace, keyed by its file name under `traces/`.
pub fn trace_corpus() -> Vec<(&'static str, LinkTrace)> {
    vec![
        (
            "constant-24mbps.trace",
            gen_constant_trace(24.0, 1000).expect("static trace is well formed"),
        ),
        (
            "constant-12mbps.trace",
            gen_constant_trace(12.0, 1000).expect("static trace is well formed"),
        ),
        (
            "step-24-to-2.4mbps.trace",
            gen_step_trace(&[(24.0, 5000), (2.4, 5000)]).expect("static trace is well formed"),
        ),
        ("onoff-12mbps.trace", onoff_trace()),
        ("dips-12mbps.trace", dips_trace()),
        ("randomwalk.trace", randomwalk_trace()),
    ]
}

const HEAD_TO_HEAD: &str = r#"# Cubic and its c2tcp overlay side by side on a stepping cellular link,
# each in its own deep per-user buffer (10x the 24 Mbps / 40 ms BDP of 80
# packets). After the capacity drop the plain flow sits on a standing queue
# worth seconds of delay; the overlay flow keeps delay near its target.
duration_s = 30.0
seed = 1
queue_cap = 800

[trace]
file = "../traces/step-24-to-2.4mbps.trace"

[[flows]]
algorithm = "cubic"
queue = 0

[[flows]]
algorithm = "c2tcp+cubic"
queue = 1
target_ms = 100.0
interval_ms = 100.0
"#;

const CODEL_COMPARISON: &str = r#"# The stepping link again, but CoDel manages the deep buffer instead of
# the sender. Against the same run under droptail (delete the [aqm]
# block): average delay collapses and throughput gives a little back.
duration_s = 30.0
seed = 1
queue_cap = 800

[trace]
file = "../traces/step-24-to-2.4mbps.trace"

[aqm]
kind = "codel"
target_ms = 5.0
interval_ms = 100.0

[[flows]]
algorithm = "cubic"
"#;

const FAIRNESS: &str = r#"# A late-joining overlay flow against an established cubic flow in one
# shared BDP-sized buffer. Fairness is read from the window after both
# flows are up (the warmup cut at 60 s).
duration_s = 120.0
warmup_s = 60.0
seed = 1
queue_cap = "bdp"

[trace]
file = "../traces/constant-24mbps.trace"

[[flows]]
algorithm = "cubic"

[[flows]]
algorithm = "c2tcp+cubic"
start_s = 30.0
"#;

const LOSS_SWEEP: &str = r#"# Random-loss resiliency base case on a constant 12 Mbps link, one scheme
# per isolated buffer. Sweep the loss rate to trace the resiliency curves:
#   cclab sweep scenarios/loss-sweep.toml --key loss_prob --values 0,0.005,0.01,0.02,0.05
duration_s = 30.0
seed = 1
queue_cap = "bdp"

[trace]
file = "../traces/constant-12mbps.trace"

[[flows]]
algorithm = "cubic"
queue = 0

[[flows]]
algorithm = "c2tcp+cubic"
queue = 1
"#;

const TARGET_INTERVAL_SWEEP: &str = r#"# Base case for the overlay tunable sweeps, on a link that fades to a
# tenth of its rate at mixed lengths. A higher target tolerates a longer
# standing queue; a longer interval rides out more of each fade before
# backing off. Both buy throughput with delay:
#   cclab sweep scenarios/target-interval-sweep.toml --key c2tcp.target_ms --values 50,60,70,80,90,100
#   cclab sweep scenarios/target-interval-sweep.toml --key c2tcp.interval_ms --values 75,100,150,200
duration_s = 30.0
seed = 1
queue_cap = 800

[trace]
file = "../traces/dips-12mbps.trace"

[[flows]]
algorithm = "c2tcp+cubic"
target_ms = 100.0
interval_ms = 100.0
"#;

/// Every preset scenario, keyed by its file name under `scenarios/`.
pub fn preset_scenarios() -> Vec<(&'static str, &'static str)> {
    vec![
        ("head-to-head.toml", HEAD_TO_HEAD),
        ("codel-comparison.toml", CODEL_COMPARISON),
        ("fairness.toml", FAIRNESS),
        ("loss-sweep.toml", LOSS_SWEEP),
        ("target-interval-sweep.toml", TARGET_INTERVAL_SWEEP),
    ]
}

/// Repository root, two levels above this crate's manifest.
pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .expect("crate lives two levels under the repo root")
        .to_path_buf()
}

/// Rewrites `traces/` and `scenarios/` under `root` from the generators.
pub fn write_corpus(root: &Path) -> io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let traces = root.join("traces");
    fs::create_dir_all(&traces)?;
    for (name, trace) in trace_corpus() {
        let path = traces.join(name);
        fs::write(&path, trace.to_text())?;
        written.push(path);
    }
    let scenarios = root.join("scenarios");
    fs::create_dir_all(&scenarios)?;
    for (name, text) in preset_scenarios() {
        let path = scenarios.join(name);
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_scenario;

    #[test]
    fn shipped_traces_match_their_generators() {
        for (name, trace) in trace_corpus() {
            let path = repo_root().join("traces").join(name);
            let shipped = fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("{} unreadable: {e}", path.display()));
            assert_eq!(shipped, trace.to_text(), "{name} drifted from its generator");
            let parsed = LinkTrace::parse(&shipped).unwrap();
            assert_eq!(parsed, trace, "{name} does not round-trip");
        }
    }

    #[test]
    fn shipped_presets_match_and_load() {
        for (name, text) in preset_scenarios() {
            let path = repo_root().join("scenarios").join(name);
            let shipped = fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("{} unreadable: {e}", path.display()));
            assert_eq!(shipped, text, "{name} drifted from its generator");
            let spec = load_scenario(&path)
                .unwrap_or_else(|e| panic!("{name} does not load: {e}"));
            assert!(!spec.flows.is_empty());
        }
    }

    #[test]
    fn corpus_rates_are_as_labeled() {
        for (name, trace) in trace_corpus() {
            let rate = trace.mean_rate_mbps();
            match name {
                "constant-24mbps.trace" => assert!((rate - 24.0).abs() < 0.1),
                "constant-12mbps.trace" => assert!((rate - 12.0).abs() < 0.1),
                // Half duty cycle at 12 Mbps.
                "onoff-12mbps.trace" => assert!((rate - 6.0).abs() < 0.1),
                // 3.6 s at 12 Mbps plus 0.75 s faded to 1.2 Mbps.
                "dips-12mbps.trace" => assert!((rate - 10.1).abs() < 0.1),
                "step-24-to-2.4mbps.trace" => assert!((rate - 13.2).abs() < 0.1),
                "randomwalk.trace" => assert!(rate > 1.0 && rate < 24.0),
                other => panic!("untested corpus entry {other}"),
            }
        }
    }

    #[test]
    fn corpus_generation_is_deterministic() {
        let a: Vec<String> = trace_corpus().iter().map(|(_, t)| t.to_text()).collect();
        let b: Vec<String> = trace_corpus().iter().map(|(_, t)| t.to_text()).collect();
        assert_eq!(a, b);
    }

    /// Explicit corpus refresh:
    /// `cargo test -p cclab refresh_shipped_corpus -- --ignored`
    #[test]
    #[ignore = "rewrites files in the repository"]
    fn refresh_shipped_corpus() {
        let written = write_corpus(&repo_root()).unwrap();
        for path in written {
            println!("wrote {}", path.display());
        }
    }
}

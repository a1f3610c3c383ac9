//! Scenario files: a flat TOML schema resolved into a validated
//! [`ScenarioSpec`].
//!
//! ```toml
//! duration_s = 30.0
//! seed = 1                     # optional, default 0
//! warmup_s = 0.0               # optional
//! one_way_delay_ms = 20.0      # optional, default 20 (40 ms RTT)
//! loss_prob = 0.0              # optional
//! queue_cap = "bdp"            # "bdp" | "unlimited" (default) | packet count
//!
//! [trace]                      # exactly one of the three sources
//! file = "../traces/cellular.trace"
//! # constant = { rate_mbps = 24.0, duration_ms = 1000 }
//! # steps = [[24.0, 5000], [2.4, 5000]]
//!
//! [aqm]                        # optional, default droptail
//! kind = "codel"
//! target_ms = 5.0              # codel only, default 5
//! interval_ms = 100.0          # codel only, default 100
//!
//! [[flows]]
//! algorithm = "c2tcp+cubic"    # newreno|cubic|vegas|c2tcp+newreno|c2tcp+cubic
//! start_s = 0.0                # optional
//! queue = 0                    # optional bottleneck queue id
//! target_ms = 100.0            # c2tcp flows only
//! interval_ms = 100.0          # c2tcp flows only
//! ```
//!
//! Trace file paths are relative to the scenario file's directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use cclab_core::link::{Aqm, CODEL_DEFAULT_INTERVAL, CODEL_DEFAULT_TARGET};
use cclab_core::scenario::{AlgorithmSpec, FlowSpec, QueueCapSpec, ScenarioError, ScenarioSpec};
use cclab_core::time::SimTime;
use cclab_core::trace::{gen_constant_trace, gen_step_trace, LinkTrace, TraceError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    duration_s: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    warmup_s: f64,
    #[serde(default = "default_one_way_delay_ms")]
    one_way_delay_ms: f64,
    #[serde(default)]
    loss_prob: f64,
    #[serde(default)]
    queue_cap: QueueCapFile,
    trace: TraceFile,
    #[serde(default)]
    aqm: AqmFile,
    #[serde(default)]
    flows: Vec<FlowFile>,
}

fn default_one_way_delay_ms() -> f64 {
    20.0
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum QueueCapFile {
    Count(u32),
    Named(String),
}

impl Default for QueueCapFile {
    fn default() -> Self {
        QueueCapFile::Named("unlimited".into())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceFile {
    file: Option<PathBuf>,
    constant: Option<ConstantTraceFile>,
    steps: Option<Vec<(f64, u64)>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantTraceFile {
    rate_mbps: f64,
    duration_ms: u64,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AqmFile {
    #[serde(default)]
    kind: AqmKind,
    target_ms: Option<f64>,
    interval_ms: Option<f64>,
}

#[derive(Debug, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum AqmKind {
    #[default]
    Droptail,
    Codel,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowFile {
    algorithm: String,
    #[serde(default)]
    start_s: f64,
    #[serde(default)]
    queue: u32,
    target_ms: Option<f64>,
    interval_ms: Option<f64>,
}

/// Anything that makes a scenario file unusable. All of these are the
/// user's configuration, not runtime failures.
#[derive(Debug)]
pub enum ConfigError {
    Read { path: PathBuf, err: std::io::Error },
    Parse(toml::de::Error),
    TraceSource(&'static str),
    Trace(TraceError),
    UnknownAlgorithm(String),
    OverlayParam { flow: usize, key: &'static str },
    BadOverlayValue { flow: usize, key: &'static str },
    AqmParam(&'static str),
    BadQueueCap(String),
    BadNumber(&'static str),
    Scenario(ScenarioError),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Read { path, err } => {
                write!(f, "cannot read {}: {err}", path.display())
            }
            ConfigError::Parse(e) => write!(f, "scenario parse error: {e}"),
            ConfigError::TraceSource(msg) => write!(f, "trace: {msg}"),
            ConfigError::Trace(e) => write!(f, "trace: {e}"),
            ConfigError::UnknownAlgorithm(a) => write!(
                f,
                "unknown algorithm {a:?} (expected newreno, cubic, vegas, \
                 c2tcp+newreno, or c2tcp+cubic)"
            ),
            ConfigError::OverlayParam { flow, key } => write!(
                f,
                "flow {flow}: {key} only applies to c2tcp algorithms"
            ),
            ConfigError::BadOverlayValue { flow, key } => {
                write!(f, "flow {flow}: {key} must be positive")
            }
            ConfigError::AqmParam(key) => {
                write!(f, "aqm: {key} only applies to kind = \"codel\"")
            }
            ConfigError::BadQueueCap(v) => write!(
                f,
                "queue_cap {v:?}: expected a packet count, \"bdp\", or \"unlimited\""
            ),
            ConfigError::BadNumber(key) => {
                write!(f, "{key} must be a finite non-negative number")
            }
            ConfigError::Scenario(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<ScenarioError> for ConfigError {
    fn from(e: ScenarioError) -> Self {
        ConfigError::Scenario(e)
    }
}

fn time_from_secs(key: &'static str, v: f64) -> Result<SimTime, ConfigError> {
    if !v.is_finite() || v < 0.0 {
        return Err(ConfigError::BadNumber(key));
    }
    Ok(SimTime::from_secs_f64(v))
}

fn time_from_millis(key: &'static str, v: f64) -> Result<SimTime, ConfigError> {
    if !v.is_finite() || v < 0.0 {
        return Err(ConfigError::BadNumber(key));
    }
    Ok(SimTime::from_millis_f64(v))
}

fn resolve_trace(tf: &TraceFile, base_dir: &Path) -> Result<LinkTrace, ConfigError> {
    let sources =
        tf.file.is_some() as u8 + tf.constant.is_some() as u8 + tf.steps.is_some() as u8;
    if sources != 1 {
        return Err(ConfigError::TraceSource(
            "exactly one of file, constant, or steps must be given",
        ));
    }
    if let Some(rel) = &tf.file {
        let path = base_dir.join(rel);
        let text = fs::read_to_string(&path).map_err(|err| ConfigError::Read { path, err })?;
        return LinkTrace::parse(&text).map_err(ConfigError::Trace);
    }
    if let Some(c) = &tf.constant {
        return gen_constant_trace(c.rate_mbps, c.duration_ms).map_err(ConfigError::Trace);
    }
    gen_step_trace(tf.steps.as_ref().unwrap()).map_err(ConfigError::Trace)
}

fn resolve_flow(i: usize, ff: &FlowFile) -> Result<FlowSpec, ConfigError> {
    let mut algorithm = AlgorithmSpec::parse(&ff.algorithm)
        .ok_or_else(|| ConfigError::UnknownAlgorithm(ff.algorithm.clone()))?;
    match &mut algorithm {
        AlgorithmSpec::C2tcp { cfg, .. } => {
            if let Some(ms) = ff.target_ms {
                let t = time_from_millis("target_ms", ms)?;
                cfg.set_target(t)
                    .map_err(|_| ConfigError::BadOverlayValue { flow: i, key: "target_ms" })?;
            }
            if let Some(ms) = ff.interval_ms {
                let t = time_from_millis("interval_ms", ms)?;
                cfg.set_interval(t)
                    .map_err(|_| ConfigError::BadOverlayValue { flow: i, key: "interval_ms" })?;
            }
        }
        _ => {
            if ff.target_ms.is_some() {
                return Err(ConfigError::OverlayParam { flow: i, key: "target_ms" });
            }
            if ff.interval_ms.is_some() {
                return Err(ConfigError::OverlayParam { flow: i, key: "interval_ms" });
            }
        }
    }
    Ok(FlowSpec {
        algorithm,
        start: time_from_secs("start_s", ff.start_s)?,
        queue: ff.queue,
    })
}

fn resolve(file: ScenarioFile, base_dir: &Path) -> Result<ScenarioSpec, ConfigError> {
    let trace = resolve_trace(&file.trace, base_dir)?;
    let queue_cap = match &file.queue_cap {
        QueueCapFile::Count(n) => QueueCapSpec::Packets(*n),
        QueueCapFile::Named(s) => match s.as_str() {
            "bdp" => QueueCapSpec::Bdp,
            "unlimited" => QueueCapSpec::Unlimited,
            other => return Err(ConfigError::BadQueueCap(other.into())),
        },
    };
    let aqm = match file.aqm.kind {
        AqmKind::Droptail => {
            if file.aqm.target_ms.is_some() {
                return Err(ConfigError::AqmParam("target_ms"));
            }
            if file.aqm.interval_ms.is_some() {
                return Err(ConfigError::AqmParam("interval_ms"));
            }
            Aqm::DropTail
        }
        AqmKind::Codel => Aqm::Codel {
            target: match file.aqm.target_ms {
                Some(ms) => time_from_millis("aqm.target_ms", ms)?,
                None => CODEL_DEFAULT_TARGET,
            },
            interval: match file.aqm.interval_ms {
                Some(ms) => time_from_millis("aqm.interval_ms", ms)?,
                None => CODEL_DEFAULT_INTERVAL,
            },
        },
    };
    let flows = file
        .flows
        .iter()
        .enumerate()
        .map(|(i, ff)| resolve_flow(i, ff))
        .collect::<Result<Vec<_>, _>>()?;
    if !file.loss_prob.is_finite() {
        return Err(ConfigError::BadNumber("loss_prob"));
    }
    let spec = ScenarioSpec {
        trace,
        flows,
        queue_cap,
        one_way_delay: time_from_millis("one_way_delay_ms", file.one_way_delay_ms)?,
        loss_prob: file.loss_prob,
        aqm,
        duration: time_from_secs("duration_s", file.duration_s)?,
        warmup: time_from_secs("warmup_s", file.warmup_s)?,
        seed: file.seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// Parses scenario text. `base_dir` anchors relative trace paths.
pub fn load_scenario_str(text: &str, base_dir: &Path) -> Result<ScenarioSpec, ConfigError> {
    let file: ScenarioFile = toml::from_str(text).map_err(ConfigError::Parse)?;
    resolve(file, base_dir)
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioSpec, ConfigError> {
    let text = fs::read_to_string(path).map_err(|err| ConfigError::Read {
        path: path.to_path_buf(),
        err,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    load_scenario_str(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cclab_core::link::QueueCap;

    fn load(text: &str) -> Result<ScenarioSpec, ConfigError> {
        load_scenario_str(text, Path::new("."))
    }

    const MINIMAL: &str = r#"
        duration_s = 10.0
        [trace]
        constant = { rate_mbps = 24.0, duration_ms = 1000 }
        [[flows]]
        algorithm = "cubic"
    "#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let spec = load(MINIMAL).unwrap();
        assert_eq!(spec.duration, SimTime::from_secs(10));
        assert_eq!(spec.one_way_delay, SimTime::from_millis(20));
        assert_eq!(spec.loss_prob, 0.0);
        assert_eq!(spec.queue_cap, QueueCapSpec::Unlimited);
        assert_eq!(spec.aqm, Aqm::DropTail);
        assert_eq!(spec.warmup, SimTime::ZERO);
        assert_eq!(spec.seed, 0);
        assert_eq!(spec.flows.len(), 1);
        assert_eq!(spec.flows[0].algorithm.name(), "cubic");
        assert_eq!(spec.flows[0].start, SimTime::ZERO);
        assert_eq!(spec.flows[0].queue, 0);
    }

    #[test]
    fn bdp_queue_cap_resolves_from_trace() {
        let text = r#"
            duration_s = 10.0
            queue_cap = "bdp"
            [trace]
            constant = { rate_mbps = 24.0, duration_ms = 1000 }
            [[flows]]
            algorithm = "cubic"
        "#;
        let spec = load(text).unwrap();
        assert_eq!(spec.resolved_queue_cap(), QueueCap::Packets(80));
    }

    #[test]
    fn full_scenario_round_trips() {
        let text = r#"
            duration_s = 30.0
            seed = 9
            warmup_s = 5.0
            one_way_delay_ms = 10.0
            loss_prob = 0.02
            queue_cap = 400
            [trace]
            steps = [[24.0, 5000], [2.4, 5000]]
            [aqm]
            kind = "codel"
            target_ms = 5.0
            interval_ms = 100.0
            [[flows]]
            algorithm = "c2tcp+cubic"
            target_ms = 50.0
            interval_ms = 75.0
            [[flows]]
            algorithm = "newreno"
            start_s = 10.0
            queue = 1
        "#;
        let spec = load(text).unwrap();
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.queue_cap, QueueCapSpec::Packets(400));
        assert_eq!(
            spec.aqm,
            Aqm::Codel {
                target: SimTime::from_millis(5),
                interval: SimTime::from_millis(100)
            }
        );
        match &spec.flows[0].algorithm {
            AlgorithmSpec::C2tcp { cfg, .. } => {
                assert_eq!(cfg.target(), SimTime::from_millis(50));
                assert_eq!(cfg.interval(), SimTime::from_millis(75));
            }
            other => panic!("wrong algorithm: {other:?}"),
        }
        assert_eq!(spec.flows[1].start, SimTime::from_secs(10));
        assert_eq!(spec.flows[1].queue, 1);
        assert_eq!(spec.num_queues(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"
            duration_s = 10.0
            bandwidth = 24.0
            [trace]
            constant = { rate_mbps = 24.0, duration_ms = 1000 }
            [[flows]]
            algorithm = "cubic"
        "#;
        assert!(matches!(load(text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn trace_needs_exactly_one_source() {
        let none = r#"
            duration_s = 10.0
            [trace]
            [[flows]]
            algorithm = "cubic"
        "#;
        assert!(matches!(load(none), Err(ConfigError::TraceSource(_))));
        let both = r#"
            duration_s = 10.0
            [trace]
            constant = { rate_mbps = 24.0, duration_ms = 1000 }
            steps = [[24.0, 1000]]
            [[flows]]
            algorithm = "cubic"
        "#;
        assert!(matches!(load(both), Err(ConfigError::TraceSource(_))));
    }

    #[test]
    fn overlay_params_rejected_on_loss_based_algorithms() {
        let text = r#"
            duration_s = 10.0
            [trace]
            constant = { rate_mbps = 24.0, duration_ms = 1000 }
            [[flows]]
            algorithm = "cubic"
            target_ms = 100.0
        "#;
        assert!(matches!(
            load(text),
            Err(ConfigError::OverlayParam { flow: 0, key: "target_ms" })
        ));
    }

    #[test]
    fn aqm_params_rejected_on_droptail() {
        let text = r#"
            duration_s = 10.0
            [trace]
            constant = { rate_mbps = 24.0, duration_ms = 1000 }
            [aqm]
            target_ms = 5.0
            [[flows]]
            algorithm = "cubic"
        "#;
        assert!(matches!(load(text), Err(ConfigError::AqmParam("target_ms"))));
    }

    #[test]
    fn codel_defaults_fill_in() {
        let text = r#"
            duration_s = 10.0
            [trace]
            constant = { rate_mbps = 24.0, duration_ms = 1000 }
            [aqm]
            kind = "codel"
            [[flows]]
            algorithm = "cubic"
        "#;
        let spec = load(text).unwrap();
        assert_eq!(
            spec.aqm,
            Aqm::Codel {
                target: SimTime::from_millis(5),
                interval: SimTime::from_millis(100)
            }
        );
    }

    #[test]
    fn bad_algorithm_and_bad_cap_are_reported() {
        let text = MINIMAL.replace("cubic", "bbr");
        assert!(matches!(load(&text), Err(ConfigError::UnknownAlgorithm(_))));
        let text = r#"
            duration_s = 10.0
            queue_cap = "deep"
            [trace]
            constant = { rate_mbps = 24.0, duration_ms = 1000 }
            [[flows]]
            algorithm = "cubic"
        "#;
        assert!(matches!(load(text), Err(ConfigError::BadQueueCap(_))));
    }

    #[test]
    fn core_validation_failures_surface() {
        let text = r#"
            duration_s = 10.0
            [trace]
            constant = { rate_mbps = 24.0, duration_ms = 1000 }
            [[flows]]
            algorithm = "cubic"
            start_s = 20.0
        "#;
        assert!(matches!(
            load(text),
            Err(ConfigError::Scenario(ScenarioError::FlowStartsBeyondDuration { flow: 0 }))
        ));
        let empty = r#"
            duration_s = 10.0
            [trace]
            constant = { rate_mbps = 24.0, duration_ms = 1000 }
        "#;
        assert!(matches!(
            load(empty),
            Err(ConfigError::Scenario(ScenarioError::NoFlows))
        ));
    }

    #[test]
    fn missing_trace_file_is_a_config_error() {
        let text = r#"
            duration_s = 10.0
            [trace]
            file = "does-not-exist.trace"
            [[flows]]
            algorithm = "cubic"
        "#;
        assert!(matches!(load(text), Err(ConfigError::Read { .. })));
    }
}

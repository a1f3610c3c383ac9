//! Parameter sweeps: one simulation per value, all sharing the base
//! scenario's seed so curves differ only in the swept knob.

use cclab_core::scenario::{ScenarioError, ScenarioSpec};
use cclab_core::sim::{run_scenario, RunReport};

/// Runs the scenario once per value of `key`, in parallel. Every
/// substitution is validated before any simulation starts, so a bad value
/// late in the list cannot waste the earlier runs.
pub fn run_sweep(
    base: &ScenarioSpec,
    key: &str,
    values: &[f64],
) -> Result<Vec<(f64, RunReport)>, ScenarioError> {
    if values.is_empty() {
        return Err(ScenarioError::SweepValueOutOfRange(String::from(
            "empty value list",
        )));
    }
    let mut specs = Vec::with_capacity(values.len());
    for &v in values {
        let mut spec = base.clone();
        spec.apply_sweep(key, v)?;
        spec.validate()?;
        specs.push(spec);
    }
    let mut slots: Vec<Option<Result<RunReport, ScenarioError>>> = Vec::new();
    slots.resize_with(specs.len(), || None);
    std::thread::scope(|scope| {
        for (spec, slot) in specs.iter().zip(slots.iter_mut()) {
            scope.spawn(move || {
                *slot = Some(run_scenario(spec));
            });
        }
    });
    let mut out = Vec::with_capacity(values.len());
    for (&v, slot) in values.iter().zip(slots) {
        out.push((v, slot.expect("sweep worker finished")?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_scenario_str;
    use std::path::Path;

    fn base() -> ScenarioSpec {
        let text = r#"
            duration_s = 3.0
            seed = 5
            [trace]
            constant = { rate_mbps = 12.0, duration_ms = 1000 }
            [[flows]]
            algorithm = "c2tcp+cubic"
        "#;
        load_scenario_str(text, Path::new(".")).unwrap()
    }

    #[test]
    fn one_report_per_value_in_input_order() {
        let results = run_sweep(&base(), "c2tcp.target_ms", &[50.0, 100.0, 200.0]).unwrap();
        assert_eq!(results.len(), 3);
        let values: Vec<f64> = results.iter().map(|(v, _)| *v).collect();
        assert_eq!(values, vec![50.0, 100.0, 200.0]);
        for (_, report) in &results {
            assert_eq!(report.spec.seed, 5);
            assert!(report.flows[0].metrics.delivered > 0);
        }
    }

    #[test]
    fn swept_runs_match_standalone_runs_exactly() {
        let spec = base();
        let results = run_sweep(&spec, "loss_prob", &[0.0, 0.02]).unwrap();
        let mut direct = spec.clone();
        direct.apply_sweep("loss_prob", 0.02).unwrap();
        let standalone = run_scenario(&direct).unwrap();
        assert_eq!(results[1].1.digest, standalone.digest);
        assert_eq!(results[0].1.digest, run_scenario(&spec).unwrap().digest);
    }

    #[test]
    fn empty_and_invalid_values_fail_before_running() {
        assert!(run_sweep(&base(), "c2tcp.target_ms", &[]).is_err());
        assert!(matches!(
            run_sweep(&base(), "loss_prob", &[0.0, 1.5]),
            Err(ScenarioError::SweepValueOutOfRange(_))
        ));
        assert!(matches!(
            run_sweep(&base(), "mtu", &[1500.0]),
            Err(ScenarioError::BadSweepKey(_))
        ));
    }
}

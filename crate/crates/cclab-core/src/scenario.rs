//! Scenario description: everything a run needs, resolved and validated.
//!
//! A scenario pins the capacity trace, the flows (algorithm, start time,
//! destination queue), the bottleneck buffer and AQM, path delay, random
//! loss, duration, and the seed. Identical specs (seed included) replay
//! identical runs.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::c2tcp::C2tcpConfig;
use crate::link::{Aqm, QueueCap};
use crate::time::SimTime;
use crate::trace::LinkTrace;

/// Buffer sizing, possibly relative to the path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueueCapSpec {
    Packets(u32),
    /// One bandwidth-delay product at the trace's mean rate:
    /// round(rate * RTT / packet size), at least one packet.
    Bdp,
    Unlimited,
}

/// Base loss-based algorithm under the c2tcp overlay.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverlayBase {
    NewReno,
    Cubic,
}

/// Algorithm selection for one flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlgorithmSpec {
    NewReno,
    Cubic,
    Vegas,
    C2tcp { base: OverlayBase, cfg: C2tcpConfig },
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::NewReno => "newreno",
            AlgorithmSpec::Cubic => "cubic",
            AlgorithmSpec::Vegas => "vegas",
            AlgorithmSpec::C2tcp { base: OverlayBase::NewReno, .. } => "c2tcp+newreno",
            AlgorithmSpec::C2tcp { base: OverlayBase::Cubic, .. } => "c2tcp+cubic",
        }
    }

    /// Parses an algorithm name, with default overlay tunables for the
    /// c2tcp variants.
    pub fn parse(name: &str) -> Option<AlgorithmSpec> {
        match name {
            "newreno" => Some(AlgorithmSpec::NewReno),
            "cubic" => Some(AlgorithmSpec::Cubic),
            "vegas" => Some(AlgorithmSpec::Vegas),
            "c2tcp+newreno" => Some(AlgorithmSpec::C2tcp {
                base: OverlayBase::NewReno,
                cfg: C2tcpConfig::default(),
            }),
            "c2tcp+cubic" => Some(AlgorithmSpec::C2tcp {
                base: OverlayBase::Cubic,
                cfg: C2tcpConfig::default(),
            }),
            _ => None,
        }
    }
}

/// One sender.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSpec {
    pub algorithm: AlgorithmSpec,
    pub start: SimTime,
    /// Destination queue at the bottleneck. Flows sharing a queue compete
    /// in it; distinct queues are isolated but share link capacity.
    pub queue: u32,
}

/// A complete run description.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub trace: LinkTrace,
    pub flows: Vec<FlowSpec>,
    pub queue_cap: QueueCapSpec,
    /// Propagation delay each way; RTT floor is twice this.
    pub one_way_delay: SimTime,
    /// Bernoulli loss probability applied at dequeue.
    pub loss_prob: f64,
    pub aqm: Aqm,
    pub duration: SimTime,
    /// Metrics ignore packets delivered before this offset.
    pub warmup: SimTime,
    pub seed: u64,
}

/// Validation failures for a scenario.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioError {
    NoFlows,
    FlowStartsBeyondDuration { flow: usize },
    WarmupSwallowsRun,
    LossProbOutOfRange,
    ZeroPropagationDelay,
    ZeroDuration,
    BadSweepKey(String),
    SweepValueOutOfRange(String),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::NoFlows => write!(f, "scenario needs at least one flow"),
            ScenarioError::FlowStartsBeyondDuration { flow } => {
                write!(f, "flow {flow} starts at or after the scenario duration")
            }
            ScenarioError::WarmupSwallowsRun => {
                write!(f, "warmup must end before the scenario duration")
            }
            ScenarioError::LossProbOutOfRange => {
                write!(f, "loss_prob must lie in [0, 1]")
            }
            ScenarioError::ZeroPropagationDelay => {
                write!(f, "one-way propagation delay must be positive")
            }
            ScenarioError::ZeroDuration => write!(f, "duration must be positive"),
            ScenarioError::BadSweepKey(k) => write!(f, "unknown sweep key: {k}"),
            ScenarioError::SweepValueOutOfRange(k) => {
                write!(f, "sweep value out of range for {k}")
            }
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.flows.is_empty() {
            return Err(ScenarioError::NoFlows);
        }
        if self.duration == SimTime::ZERO {
            return Err(ScenarioError::ZeroDuration);
        }
        for (i, fl) in self.flows.iter().enumerate() {
            if fl.start >= self.duration {
                return Err(ScenarioError::FlowStartsBeyondDuration { flow: i });
            }
        }
        if self.warmup >= self.duration {
            return Err(ScenarioError::WarmupSwallowsRun);
        }
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(ScenarioError::LossProbOutOfRange);
        }
        if self.one_way_delay == SimTime::ZERO {
            return Err(ScenarioError::ZeroPropagationDelay);
        }
        Ok(())
    }

    /// Base RTT: propagation both ways, no queueing.
    pub fn base_rtt(&self) -> SimTime {
        SimTime::from_micros(self.one_way_delay.as_micros() * 2)
    }

    /// Bandwidth-delay product at the trace's mean rate, in packets.
    /// 24 Mbps at a 40 ms RTT and 1500 B packets is 80.
    pub fn bdp_packets(&self) -> u32 {
        let rate_bps = self.trace.mean_rate_mbps() * 1e6;
        let rtt_s = self.base_rtt().as_secs_f64();
        let pkts = libm::round(rate_bps * rtt_s / (self.trace.mtu_bytes() as f64 * 8.0));
        (pkts as u32).max(1)
    }

    /// The concrete buffer limit handed to the link.
    pub fn resolved_queue_cap(&self) -> QueueCap {
        match self.queue_cap {
            QueueCapSpec::Packets(n) => QueueCap::Packets(n),
            QueueCapSpec::Bdp => QueueCap::Packets(self.bdp_packets()),
            QueueCapSpec::Unlimited => QueueCap::Unlimited,
        }
    }

    /// Number of bottleneck queues: one per destination id up to the
    /// largest referenced.
    pub fn num_queues(&self) -> usize {
        self.flows.iter().map(|f| f.queue as usize).max().unwrap_or(0) + 1
    }

    /// Applies one parameter-sweep assignment. Keys: `c2tcp.target_ms`,
    /// `c2tcp.interval_ms` (all overlay flows), `loss_prob` (link).
    pub fn apply_sweep(&mut self, key: &str, value: f64) -> Result<(), ScenarioError> {
        match key {
            "c2tcp.target_ms" | "c2tcp.interval_ms" => {
                if value <= 0.0 || !value.is_finite() {
                    return Err(ScenarioError::SweepValueOutOfRange(String::from(key)));
                }
                let t = SimTime::from_millis_f64(value);
                let mut touched = false;
                for fl in &mut self.flows {
                    if let AlgorithmSpec::C2tcp { cfg, .. } = &mut fl.algorithm {
                        let r = if key == "c2tcp.target_ms" {
                            cfg.set_target(t)
                        } else {
                            cfg.set_interval(t)
                        };
                        r.map_err(|_| ScenarioError::SweepValueOutOfRange(String::from(key)))?;
                        touched = true;
                    }
                }
                if !touched {
                    return Err(ScenarioError::BadSweepKey(String::from(
                        "no c2tcp flow to apply the key to",
                    )));
                }
                Ok(())
            }
            "loss_prob" => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(ScenarioError::SweepValueOutOfRange(String::from(key)));
                }
                self.loss_prob = value;
                Ok(())
            }
            other => Err(ScenarioError::BadSweepKey(String::from(other))),
        }
    }
}

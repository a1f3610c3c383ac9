//! Core of a trace-driven congestion-control laboratory.
//!
//! Everything here is deterministic and allocation-only (`no_std` +
//! `alloc`): simulation time, the event engine, capacity traces, the
//! bottleneck link with DropTail/CoDel queues, the congestion controllers
//! and the delay-condition overlay, scenario descriptions, the run loop,
//! and metrics. File formats, CLI, and rendering live in the companion
//! `cclab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod c2tcp;
pub mod cca;
pub mod engine;
pub mod link;
pub mod metrics;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod time;
pub mod trace;

pub use c2tcp::{c2tcp_on_ack, C2tcp, C2tcpAction, C2tcpConfig, ConditionState};
pub use cca::{AckSample, CongestionController, Cubic, CwndState, NewReno, Vegas};
pub use link::{Aqm, BottleneckLink, QueueCap};
pub use metrics::{FlowMetrics, PacketFate, PacketRecord};
pub use scenario::{AlgorithmSpec, FlowSpec, OverlayBase, QueueCapSpec, ScenarioError, ScenarioSpec};
pub use sim::{run_scenario, FlowReport, RunReport};
pub use time::SimTime;
pub use trace::{gen_constant_trace, gen_step_trace, LinkTrace, TraceError};

//! TCP Vegas: delay-based congestion avoidance. Once per RTT the window
//! moves by one segment to keep the estimated number of self-queued
//! packets, diff = cwnd * (rtt - min_rtt) / rtt, between alpha and beta.

use super::{AckSample, CongestionController, CwndState, MIN_CWND};
use crate::time::SimTime;

/// Grow while fewer than this many packets appear queued.
pub const VEGAS_ALPHA: f64 = 2.0;
/// Shrink while more than this many packets appear queued.
pub const VEGAS_BETA: f64 = 4.0;

#[derive(Clone, Debug, Default)]
pub struct Vegas {
    next_adjust_at: SimTime,
}

impl Vegas {
    pub fn new() -> Self {
        Vegas::default()
    }

    /// The queue-occupancy estimate driving the +-1 decision.
    pub fn diff(cwnd: f64, rtt: SimTime, min_rtt: SimTime) -> f64 {
        let rtt_us = rtt.as_micros() as f64;
        let excess = rtt.saturating_sub(min_rtt).as_micros() as f64;
        cwnd * excess / rtt_us
    }
}

impl CongestionController for Vegas {
    fn name(&self) -> &'static str {
        "vegas"
    }

    fn on_ack(&mut self, sample: &AckSample, w: &mut CwndState) {
        if sample.now < self.next_adjust_at {
            return;
        }
        // min_rtt is established by the flow before any controller call.
        let diff = Self::diff(w.cwnd, sample.rtt, w.min_rtt);
        if diff < VEGAS_ALPHA {
            w.cwnd += 1.0;
        } else if diff > VEGAS_BETA {
            w.cwnd = (w.cwnd - 1.0).max(MIN_CWND);
        }
        self.next_adjust_at = sample.now + sample.rtt;
    }

    fn on_dupack_loss(&mut self, w: &mut CwndState) {
        w.ssthresh = self.loss_ssthresh(w);
        w.cwnd = w.ssthresh;
        w.clamp_cwnd();
    }

    fn on_rto(&mut self, w: &mut CwndState) {
        w.ssthresh = self.loss_ssthresh(w);
        w.cwnd = MIN_CWND;
        w.clamp_cwnd();
    }

    fn loss_ssthresh(&mut self, w: &CwndState) -> f64 {
        (w.cwnd / 2.0).max(MIN_CWND)
    }
}

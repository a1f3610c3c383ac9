//! NewReno: slow start, AIMD congestion avoidance, halving on loss.

use super::{AckSample, CongestionController, CwndState, MIN_CWND};

#[derive(Clone, Debug, Default)]
pub struct NewReno;

impl NewReno {
    pub fn new() -> Self {
        NewReno
    }
}

impl CongestionController for NewReno {
    fn name(&self) -> &'static str {
        "newreno"
    }

    fn on_ack(&mut self, sample: &AckSample, w: &mut CwndState) {
        let acked = sample.newly_acked as f64;
        if w.cwnd < w.ssthresh {
            // Slow start: one segment per acked segment.
            w.cwnd += acked;
        } else {
            // Congestion avoidance: ~one segment per RTT.
            w.cwnd += acked / w.cwnd;
        }
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
